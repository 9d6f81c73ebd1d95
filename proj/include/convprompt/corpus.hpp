// Copyright 2026 The convprompt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convprompt/metrics.hpp"
#include "convprompt/text.hpp"

namespace convprompt {

struct Review {
  std::string user_id;
  std::string item_id;
  std::string text;
  std::optional<int> rating;  // 1..5 when present
  std::int64_t timestamp = 0;

  friend bool operator==(const Review&, const Review&) = default;
};

struct Item {
  std::string item_id;
  std::string title;
  std::string category;
  std::string description;

  friend bool operator==(const Item&, const Item&) = default;
};

struct HistoryEntry {
  Item item;
  Review review;
};

/// One user's reviews, oldest first. Equal timestamps keep input order.
struct UserHistory {
  std::string user_id;
  std::vector<HistoryEntry> entries;
};

/// An n-review history plus the held-out most recent review.
struct EvalInstance {
  std::string id;
  std::string dataset;
  UserHistory history;
  Item target_item;
  Review target_review;

  std::size_t n() const { return history.entries.size(); }
};

struct ReferencePool {
  std::string item_id;
  std::vector<Review> reviews;
};

struct Corpus {
  std::vector<Review> reviews;
  std::map<std::string, Item> items;
};

struct LoadDiagnostic {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  Corpus corpus;
  std::vector<LoadDiagnostic> diagnostics;
};

/// Reads a line-delimited JSON corpus. Lines carrying `user_id` are reviews;
/// other lines are item metadata. Amazon Reviews field names (`parent_asin`,
/// `asin`, `main_category`, list-valued `description`) are accepted as
/// aliases. Throws CorpusError when the file cannot be opened; malformed
/// lines become diagnostics.
LoadResult load_reviews(const std::filesystem::path& path);

/// Same as load_reviews over an in-memory buffer. Blank lines are skipped.
LoadResult parse_corpus(std::string_view contents);

using TokenCounter = std::function<std::size_t(std::string_view)>;

struct FilterOptions {
  std::size_t min_user_reviews = 6;
  std::size_t min_other_reviews = 5;
  std::size_t token_min = 20;  // inclusive
  std::size_t token_max = 300;  // inclusive
  TokenCounter token_counter = whitespace_token_count;
};

/// Applies the token-length, per-user and per-item constraints repeatedly
/// until nothing changes. Reviews whose item has no metadata are dropped.
/// The result is a fixed point: filtering it again returns it unchanged.
Corpus filter_corpus(const Corpus& corpus, const FilterOptions& options = {});

/// Distinct user ids in lexicographic order.
std::vector<std::string> corpus_users(const Corpus& corpus);

/// k distinct users drawn without replacement. Deterministic in (corpus, k,
/// seed). Throws CorpusError when fewer than k users exist.
std::vector<std::string> sample_users(const Corpus& corpus, std::size_t k,
                                      std::uint64_t seed);

/// Chronological history for every user, keyed by user id.
std::map<std::string, UserHistory> group_histories(const Corpus& corpus);

/// Most recent review becomes the target; the n reviews before it form the
/// history. Throws CorpusError on short histories or when the target item
/// already appears in the history.
EvalInstance build_instance(const UserHistory& history, std::size_t n);

/// Reviews of `item_id` not written by `exclude_user`. Throws CorpusError for
/// unknown items and PoolTooSmallError when fewer than `min_size` remain.
ReferencePool reference_pool(const Corpus& corpus, const std::string& item_id,
                             const std::string& exclude_user,
                             std::size_t min_size = 5);

struct DatasetStatsRow {
  std::string dataset;
  std::size_t instances = 0;
  double max_similarity = 0.0;
  double random_similarity = 0.0;
  double min_similarity = 0.0;
  double pool_median = 0.0;
  double pool_mean = 0.0;
  double pool_sd = 0.0;
};

/// Per-dataset similarity of other users' reviews to each instance's target
/// review (best, one random, worst), plus pool-size median and mean +- sd.
/// The last row aggregates every instance under the label "All".
std::vector<DatasetStatsRow> dataset_stats(const Corpus& corpus,
                                           const std::vector<EvalInstance>& instances,
                                           SimilarityScorer& scorer,
                                           std::uint64_t seed);

/// Median of a non-empty sample (mean of the two middle values when even).
double median(std::vector<double> values);

}  // namespace convprompt
