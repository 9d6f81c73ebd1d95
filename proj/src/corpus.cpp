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

#include "convprompt/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "convprompt/detail/random.hpp"
#include "convprompt/errors.hpp"
#include "convprompt/text.hpp"

namespace convprompt {
namespace {

using nlohmann::json;

const json* find_first(const json& obj, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = obj.find(k);
    if (it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

std::string joined(const json& value, std::string_view sep) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_array()) {
    std::string out;
    for (const auto& part : value) {
      if (!part.is_string()) continue;
      if (!out.empty()) out += sep;
      out += part.get<std::string>();
    }
    return out;
  }
  throw CorpusError("expected a string or a list of strings");
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

Review parse_review(const json& rec) {
  Review r;
  r.user_id = rec.at("user_id").get<std::string>();
  const json* item = find_first(rec, {"item_id", "parent_asin", "asin"});
  if (item == nullptr) throw CorpusError("review lacks item_id");
  r.item_id = item->get<std::string>();
  const json* text = find_first(rec, {"text"});
  if (text == nullptr) throw CorpusError("review lacks text");
  r.text = strip_html_tags(text->get<std::string>());
  if (blank(r.text)) throw CorpusError("review text is empty");
  const json* ts = find_first(rec, {"timestamp"});
  if (ts == nullptr || !ts->is_number()) {
    throw CorpusError("review lacks a numeric timestamp");
  }
  r.timestamp = ts->get<std::int64_t>();
  if (const json* rating = find_first(rec, {"rating"})) {
    if (!rating->is_number()) throw CorpusError("rating is not a number");
    const double v = rating->get<double>();
    if (v != std::floor(v) || v < 1 || v > 5) {
      throw CorpusError("rating outside 1..5");
    }
    r.rating = static_cast<int>(v);
  }
  if (r.user_id.empty() || r.item_id.empty()) {
    throw CorpusError("review has an empty user_id or item_id");
  }
  return r;
}

Item parse_item(const json& rec) {
  Item item;
  const json* id = find_first(rec, {"item_id", "parent_asin", "asin"});
  if (id == nullptr) throw CorpusError("record is neither a review nor an item");
  item.item_id = id->get<std::string>();
  if (item.item_id.empty()) throw CorpusError("item_id is empty");
  if (const json* t = find_first(rec, {"title"})) item.title = t->get<std::string>();
  if (const json* c = find_first(rec, {"category", "main_category", "categories"})) {
    item.category = joined(*c, ", ");
  }
  if (const json* d = find_first(rec, {"description"})) {
    item.description = strip_html_tags(joined(*d, " "));
  }
  return item;
}

}  // namespace

LoadResult parse_corpus(std::string_view contents) {
  LoadResult result;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= contents.size()) {
    auto end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (blank(line)) {
      if (end == contents.size()) break;
      continue;
    }
    try {
      const json rec = json::parse(line);
      if (!rec.is_object()) throw CorpusError("record is not an object");
      if (rec.contains("user_id")) {
        result.corpus.reviews.push_back(parse_review(rec));
      } else {
        Item item = parse_item(rec);
        result.corpus.items.try_emplace(item.item_id, std::move(item));
      }
    } catch (const json::exception& e) {
      result.diagnostics.push_back({line_no, e.what()});
    } catch (const CorpusError& e) {
      result.diagnostics.push_back({line_no, e.what()});
    }
    if (end == contents.size()) break;
  }
  return result;
}

LoadResult load_reviews(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

Corpus filter_corpus(const Corpus& corpus, const FilterOptions& options) {
  if (options.token_min < 1 || options.token_min > options.token_max) {
    throw CorpusError("token range must satisfy 1 <= min <= max");
  }
  const TokenCounter count =
      options.token_counter ? options.token_counter : TokenCounter(whitespace_token_count);

  std::vector<Review> kept;
  for (const auto& r : corpus.reviews) {
    if (!corpus.items.contains(r.item_id)) continue;
    const auto tokens = count(r.text);
    if (tokens >= options.token_min && tokens <= options.token_max) kept.push_back(r);
  }

  for (;;) {
    const std::size_t before = kept.size();

    std::unordered_map<std::string, std::size_t> per_user;
    for (const auto& r : kept) ++per_user[r.user_id];
    std::erase_if(kept, [&](const Review& r) {
      return per_user[r.user_id] < options.min_user_reviews;
    });

    // An item survives when, for every reviewer, enough reviews by others
    // remain: total minus the largest single-user share.
    std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>> per_item;
    for (const auto& r : kept) ++per_item[r.item_id][r.user_id];
    std::unordered_set<std::string> bad_items;
    for (const auto& [item, users] : per_item) {
      std::size_t total = 0;
      std::size_t largest = 0;
      for (const auto& [u, c] : users) {
        total += c;
        largest = std::max(largest, c);
      }
      if (total - largest < options.min_other_reviews) bad_items.insert(item);
    }
    std::erase_if(kept, [&](const Review& r) { return bad_items.contains(r.item_id); });

    if (kept.size() == before) break;
  }

  Corpus out;
  for (const auto& r : kept) {
    out.items.try_emplace(r.item_id, corpus.items.at(r.item_id));
  }
  out.reviews = std::move(kept);
  return out;
}

std::vector<std::string> corpus_users(const Corpus& corpus) {
  std::set<std::string> users;
  for (const auto& r : corpus.reviews) users.insert(r.user_id);
  return {users.begin(), users.end()};
}

std::vector<std::string> sample_users(const Corpus& corpus, std::size_t k,
                                      std::uint64_t seed) {
  auto users = corpus_users(corpus);
  if (users.size() < k) {
    throw CorpusError("requested " + std::to_string(k) + " users but only " +
                      std::to_string(users.size()) + " are eligible");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + detail::draw_below(rng, users.size() - i);
    std::swap(users[i], users[j]);
  }
  users.resize(k);
  return users;
}

std::map<std::string, UserHistory> group_histories(const Corpus& corpus) {
  std::map<std::string, UserHistory> out;
  for (const auto& r : corpus.reviews) {
    auto& h = out[r.user_id];
    h.user_id = r.user_id;
    auto it = corpus.items.find(r.item_id);
    Item item = it != corpus.items.end() ? it->second : Item{r.item_id, {}, {}, {}};
    h.entries.push_back({std::move(item), r});
  }
  for (auto& [_, h] : out) {
    std::stable_sort(h.entries.begin(), h.entries.end(),
                     [](const HistoryEntry& a, const HistoryEntry& b) {
                       return a.review.timestamp < b.review.timestamp;
                     });
  }
  return out;
}

EvalInstance build_instance(const UserHistory& history, std::size_t n) {
  if (n == 0) throw CorpusError("history length n must be positive");
  const auto& entries = history.entries;
  if (entries.size() < n + 1) {
    throw CorpusError("user " + history.user_id + " has " +
                      std::to_string(entries.size()) + " reviews; need " +
                      std::to_string(n + 1));
  }
  EvalInstance inst;
  inst.id = history.user_id;
  inst.history.user_id = history.user_id;
  const auto& target = entries.back();
  inst.target_item = target.item;
  inst.target_review = target.review;
  const auto first = entries.end() - 1 - static_cast<std::ptrdiff_t>(n);
  inst.history.entries.assign(first, entries.end() - 1);
  for (const auto& e : inst.history.entries) {
    if (e.item.item_id == inst.target_item.item_id) {
      throw CorpusError("user " + history.user_id +
                        " reviewed the target item earlier in the history");
    }
  }
  return inst;
}

ReferencePool reference_pool(const Corpus& corpus, const std::string& item_id,
                             const std::string& exclude_user, std::size_t min_size) {
  if (!corpus.items.contains(item_id)) {
    throw CorpusError("unknown item " + item_id);
  }
  ReferencePool pool;
  pool.item_id = item_id;
  for (const auto& r : corpus.reviews) {
    if (r.item_id == item_id && r.user_id != exclude_user) pool.reviews.push_back(r);
  }
  if (pool.reviews.size() < min_size) {
    throw PoolTooSmallError("reference pool for item " + item_id + " has " +
                            std::to_string(pool.reviews.size()) +
                            " reviews; expected at least " + std::to_string(min_size));
  }
  return pool;
}

double median(std::vector<double> values) {
  if (values.empty()) throw StatsError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const auto mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<DatasetStatsRow> dataset_stats(const Corpus& corpus,
                                           const std::vector<EvalInstance>& instances,
                                           SimilarityScorer& scorer,
                                           std::uint64_t seed) {
  struct Acc {
    std::vector<double> max, random, min, pool;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> groups;
  Acc all;
  std::mt19937_64 rng(seed);

  for (const auto& inst : instances) {
    const auto pool = reference_pool(corpus, inst.target_item.item_id,
                                     inst.history.user_id, 1);
    std::vector<TextPair> pairs;
    pairs.reserve(pool.reviews.size());
    for (const auto& r : pool.reviews) pairs.push_back({r.text, inst.target_review.text});
    const auto scores = scorer.score_batch(pairs);
    std::vector<double> f;
    f.reserve(scores.size());
    for (const auto& s : scores) f.push_back(s.f);
    const double hi = *std::max_element(f.begin(), f.end());
    const double lo = *std::min_element(f.begin(), f.end());
    const double pick = f[detail::draw_below(rng, f.size())];

    if (!groups.contains(inst.dataset)) order.push_back(inst.dataset);
    for (Acc* acc : {&groups[inst.dataset], &all}) {
      acc->max.push_back(hi);
      acc->random.push_back(pick);
      acc->min.push_back(lo);
      acc->pool.push_back(static_cast<double>(f.size()));
    }
  }

  auto summarize = [](const std::string& name, const Acc& acc) {
    DatasetStatsRow row;
    row.dataset = name;
    row.instances = acc.pool.size();
    if (acc.pool.empty()) return row;
    auto mean = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    row.max_similarity = mean(acc.max);
    row.random_similarity = mean(acc.random);
    row.min_similarity = mean(acc.min);
    row.pool_median = median(acc.pool);
    row.pool_mean = mean(acc.pool);
    if (acc.pool.size() > 1) {
      double ss = 0.0;
      for (double x : acc.pool) ss += (x - row.pool_mean) * (x - row.pool_mean);
      row.pool_sd = std::sqrt(ss / static_cast<double>(acc.pool.size() - 1));
    }
    return row;
  };

  std::vector<DatasetStatsRow> rows;
  for (const auto& name : order) rows.push_back(summarize(name, groups[name]));
  rows.push_back(summarize("All", all));
  return rows;
}

}  // namespace convprompt
