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

#include <array>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convprompt/corpus.hpp"
#include "convprompt/metrics.hpp"
#include "convprompt/stats.hpp"

namespace convprompt {

struct RankingResult {
  std::string instance_id;
  std::size_t rank = 1;       // 1-based position of the generated review
  std::size_t pool_size = 0;  // other users' reviews ranked against it
  double reciprocal_rank = 1.0;
  bool hit_at_5 = true;
};

/// Position of `generated_score` among `pool_scores` sorted descending. Pool
/// entries tied with the generated review are ranked ahead of it.
RankingResult rank_generated(double generated_score, std::span<const double> pool_scores,
                             std::string instance_id = {});

/// Scores the generated review and every pool review against the ground
/// truth and ranks the generated one. The ground truth itself is not part of
/// the ranked list. Throws CorpusError on an empty pool.
RankingResult identity_linkage(std::string_view generated, const Review& truth,
                               const ReferencePool& pool, SimilarityScorer& scorer,
                               std::string instance_id = {});

double hit_at_k(std::span<const RankingResult> results, std::size_t k = 5);
double mrr(std::span<const RankingResult> results);

/// Rank drawn uniformly from 1..pool_size+1, i.e. a review picked at random.
RankingResult random_linkage(std::size_t pool_size, std::mt19937_64& rng);

/// Closed-form expectations of hit_at_k and mrr under random_linkage.
double expected_random_hit_at_k(std::span<const std::size_t> pool_sizes, std::size_t k = 5);
double expected_random_mrr(std::span<const std::size_t> pool_sizes);

struct SentimentPrediction {
  Sentiment label = Sentiment::neutral;
  std::array<double, 3> scores{};  // positive, neutral, negative; sums to 1
};

class SentimentClassifier {
 public:
  virtual ~SentimentClassifier() = default;
  virtual std::vector<SentimentPrediction> classify_batch(
      std::span<const std::string> texts) = 0;
  virtual bool is_fallback() const = 0;
};

/// Test stand-in: counts hits from fixed positive and negative word lists and
/// takes a softmax over (pos - neg, 0.5, neg - pos). No hits, or a balanced
/// count, yields neutral.
class LexiconSentiment final : public SentimentClassifier {
 public:
  std::vector<SentimentPrediction> classify_batch(std::span<const std::string> texts) override;
  bool is_fallback() const override { return true; }
};

struct SentimentSidecarOptions {
  std::string endpoint = "http://127.0.0.1:8080";
  std::string model_id = "cardiffnlp/twitter-roberta-base-sentiment-latest";
  std::size_t batch_size = 64;
  double timeout_seconds = 120.0;
};

/// Client for POST /v1/sentiment. Replies whose scores do not sum to 1 within
/// 1e-4 are protocol errors.
class SidecarSentiment final : public SentimentClassifier {
 public:
  explicit SidecarSentiment(SentimentSidecarOptions options);
  std::vector<SentimentPrediction> classify_batch(std::span<const std::string> texts) override;
  bool is_fallback() const override { return false; }

 private:
  SentimentSidecarOptions options_;
};

SentimentPrediction classify_sentiment(std::string_view text, SentimentClassifier& classifier);

struct GroupEval {
  LabelHistogram truth;
  LabelHistogram generated;
  double kl = 0.0;
};

/// Label histograms of both lists and D(truth || generated).
GroupEval group_eval(std::span<const Sentiment> true_labels,
                     std::span<const Sentiment> generated_labels, double epsilon = 0.0);

struct F1Scores {
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  std::array<double, 3> per_class{};
};

/// Per-class F1 (0 when undefined). Weighted by true-label support; macro is
/// the plain mean over all three classes.
F1Scores f1_scores(std::span<const Sentiment> true_labels,
                   std::span<const Sentiment> predicted_labels);

}  // namespace convprompt
