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

#include "convprompt/downstream.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

#include "convprompt/detail/random.hpp"
#include "convprompt/errors.hpp"
#include "http_util.hpp"

namespace convprompt {
namespace {

const std::unordered_set<std::string>& positive_words() {
  static const std::unordered_set<std::string> words = {
      "good", "great", "excellent", "amazing", "awesome", "love", "loved",
      "loves", "wonderful", "fantastic", "enjoy", "enjoyed", "perfect", "best",
      "favorite", "nice", "beautiful", "happy", "recommend", "brilliant", "superb"};
  return words;
}

const std::unordered_set<std::string>& negative_words() {
  static const std::unordered_set<std::string> words = {
      "bad", "terrible", "awful", "poor", "disappointing", "disappointed", "hate",
      "hated", "worst", "boring", "broken", "waste", "useless", "horrible",
      "refund", "junk", "mediocre"};
  return words;
}

Sentiment argmax(const std::array<double, 3>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<Sentiment>(best);
}

}  // namespace

RankingResult rank_generated(double generated_score, std::span<const double> pool_scores,
                             std::string instance_id) {
  RankingResult r;
  r.instance_id = std::move(instance_id);
  r.pool_size = pool_scores.size();
  r.rank = 1 + static_cast<std::size_t>(std::count_if(
                   pool_scores.begin(), pool_scores.end(),
                   [&](double s) { return s >= generated_score; }));
  r.reciprocal_rank = 1.0 / static_cast<double>(r.rank);
  r.hit_at_5 = r.rank <= 5;
  return r;
}

RankingResult identity_linkage(std::string_view generated, const Review& truth,
                               const ReferencePool& pool, SimilarityScorer& scorer,
                               std::string instance_id) {
  if (pool.reviews.empty()) throw CorpusError("identity linkage needs a non-empty pool");
  std::vector<TextPair> pairs;
  pairs.reserve(pool.reviews.size() + 1);
  pairs.push_back({std::string(generated), truth.text});
  for (const auto& r : pool.reviews) pairs.push_back({r.text, truth.text});
  const auto scores = scorer.score_batch(pairs);
  std::vector<double> others;
  others.reserve(pool.reviews.size());
  for (std::size_t i = 1; i < scores.size(); ++i) others.push_back(scores[i].f);
  return rank_generated(scores[0].f, others, std::move(instance_id));
}

double hit_at_k(std::span<const RankingResult> results, std::size_t k) {
  if (results.empty()) throw StatsError("hit@k of no results");
  const auto hits = std::count_if(results.begin(), results.end(),
                                  [&](const RankingResult& r) { return r.rank <= k; });
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double mrr(std::span<const RankingResult> results) {
  if (results.empty()) throw StatsError("MRR of no results");
  double sum = 0.0;
  for (const auto& r : results) sum += 1.0 / static_cast<double>(r.rank);
  return sum / static_cast<double>(results.size());
}

RankingResult random_linkage(std::size_t pool_size, std::mt19937_64& rng) {
  RankingResult r;
  r.pool_size = pool_size;
  r.rank = 1 + detail::draw_below(rng, pool_size + 1);
  r.reciprocal_rank = 1.0 / static_cast<double>(r.rank);
  r.hit_at_5 = r.rank <= 5;
  return r;
}

double expected_random_hit_at_k(std::span<const std::size_t> pool_sizes, std::size_t k) {
  if (pool_sizes.empty()) throw StatsError("no pools");
  double sum = 0.0;
  for (auto p : pool_sizes) {
    sum += static_cast<double>(std::min(k, p + 1)) / static_cast<double>(p + 1);
  }
  return sum / static_cast<double>(pool_sizes.size());
}

double expected_random_mrr(std::span<const std::size_t> pool_sizes) {
  if (pool_sizes.empty()) throw StatsError("no pools");
  double sum = 0.0;
  for (auto p : pool_sizes) {
    double harmonic = 0.0;
    for (std::size_t r = 1; r <= p + 1; ++r) harmonic += 1.0 / static_cast<double>(r);
    sum += harmonic / static_cast<double>(p + 1);
  }
  return sum / static_cast<double>(pool_sizes.size());
}

std::vector<SentimentPrediction> LexiconSentiment::classify_batch(
    std::span<const std::string> texts) {
  std::vector<SentimentPrediction> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    int pos = 0;
    int neg = 0;
    for (const auto& tok : tokenize(text)) {
      pos += positive_words().contains(tok);
      neg += negative_words().contains(tok);
    }
    const double d = pos - neg;
    const std::array<double, 3> logits = {d, 0.5, -d};
    const double top = std::max({logits[0], logits[1], logits[2]});
    std::array<double, 3> e{};
    double z = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      e[i] = std::exp(logits[i] - top);
      z += e[i];
    }
    SentimentPrediction p;
    for (std::size_t i = 0; i < 3; ++i) p.scores[i] = e[i] / z;
    p.label = argmax(p.scores);
    out.push_back(p);
  }
  return out;
}

SidecarSentiment::SidecarSentiment(SentimentSidecarOptions options)
    : options_(std::move(options)) {
  if (options_.batch_size == 0) options_.batch_size = 1;
}

std::vector<SentimentPrediction> SidecarSentiment::classify_batch(
    std::span<const std::string> texts) {
  using nlohmann::json;
  std::vector<SentimentPrediction> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += options_.batch_size) {
    const auto chunk =
        texts.subspan(start, std::min(options_.batch_size, texts.size() - start));
    json body;
    body["texts"] = json::array();
    for (const auto& t : chunk) body["texts"].push_back(t);
    body["model_id"] = options_.model_id;
    const auto result = detail::post_json(
        options_.endpoint + "/v1/sentiment", body.dump(), {},
        std::chrono::duration<double>(options_.timeout_seconds));
    if (!result.response) {
      throw SidecarUnavailableError("sentiment sidecar unreachable at " + options_.endpoint +
                                    ": " + result.transport_error);
    }
    if (result.response->status == 503) {
      throw SidecarUnavailableError("sentiment model unavailable");
    }
    if (result.response->status != 200) {
      throw ScorerError("sentiment sidecar returned HTTP " +
                        std::to_string(result.response->status));
    }
    try {
      const auto reply = json::parse(result.response->body);
      const auto& results = reply.at("results");
      if (!results.is_array() || results.size() != chunk.size()) {
        throw ScorerError("sentiment sidecar returned the wrong number of results");
      }
      for (const auto& r : results) {
        SentimentPrediction p;
        const auto& s = r.at("scores");
        for (auto label : kSentiments) {
          p.scores[static_cast<std::size_t>(label)] =
              s.at(std::string(to_string(label))).get<double>();
        }
        const double sum = p.scores[0] + p.scores[1] + p.scores[2];
        if (std::abs(sum - 1.0) > 1e-4) {
          throw ScorerError("sentiment scores do not sum to 1");
        }
        p.label = parse_sentiment(r.at("label").get<std::string>());
        if (p.label != argmax(p.scores)) {
          throw ScorerError("sentiment label is not the argmax of its scores");
        }
        out.push_back(p);
      }
    } catch (const json::exception& e) {
      throw ScorerError(std::string("malformed sentiment sidecar reply: ") + e.what());
    } catch (const StatsError& e) {
      throw ScorerError(std::string("malformed sentiment sidecar reply: ") + e.what());
    }
  }
  return out;
}

SentimentPrediction classify_sentiment(std::string_view text, SentimentClassifier& classifier) {
  const std::string owned(text);
  auto preds = classifier.classify_batch(std::span<const std::string>(&owned, 1));
  if (preds.size() != 1) throw ScorerError("classifier returned the wrong batch size");
  return preds.front();
}

GroupEval group_eval(std::span<const Sentiment> true_labels,
                     std::span<const Sentiment> generated_labels, double epsilon) {
  if (true_labels.size() != generated_labels.size() || true_labels.empty()) {
    throw StatsError("label lists must be non-empty and equally long");
  }
  GroupEval g;
  g.truth = LabelHistogram::from_labels(true_labels);
  g.generated = LabelHistogram::from_labels(generated_labels);
  g.kl = kl_divergence(g.truth, g.generated, epsilon);
  return g;
}

F1Scores f1_scores(std::span<const Sentiment> true_labels,
                   std::span<const Sentiment> predicted_labels) {
  if (true_labels.size() != predicted_labels.size() || true_labels.empty()) {
    throw StatsError("label lists must be non-empty and equally long");
  }
  std::array<double, 3> tp{}, fp{}, fn{}, support{};
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const auto t = static_cast<std::size_t>(true_labels[i]);
    const auto p = static_cast<std::size_t>(predicted_labels[i]);
    support[t] += 1;
    if (t == p) {
      tp[t] += 1;
    } else {
      fp[p] += 1;
      fn[t] += 1;
    }
  }
  F1Scores out;
  const double n = static_cast<double>(true_labels.size());
  for (std::size_t c = 0; c < 3; ++c) {
    const double precision = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    const double recall = tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    out.per_class[c] =
        precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    out.weighted_f1 += support[c] / n * out.per_class[c];
    out.macro_f1 += out.per_class[c] / 3.0;
  }
  return out;
}

}  // namespace convprompt
