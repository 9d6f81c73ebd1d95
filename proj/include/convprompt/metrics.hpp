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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace convprompt {

enum class ScoreKind { rouge_l, semantic_external, lexical_fallback };

std::string_view to_string(ScoreKind kind);

/// Precision / recall / F of one candidate-reference comparison. For the
/// lexical kinds `f` is the harmonic mean of `precision` and `recall`, or 0
/// when both are 0.
struct SimilarityScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  ScoreKind kind = ScoreKind::rouge_l;
};

struct TextPair {
  std::string candidate;
  std::string reference;
};

/// NFKC-normalized, lowercased tokens split on runs of non-alphanumeric
/// characters. Digits are kept.
std::vector<std::string> tokenize(std::string_view text);

/// Length of the longest common subsequence of two token sequences.
std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b);

/// Sentence-level ROUGE-L with beta = 1, no stemming, no stopword removal.
SimilarityScore rouge_l(std::string_view candidate, std::string_view reference);
SimilarityScore rouge_l_tokens(std::span<const std::string> candidate,
                               std::span<const std::string> reference);

/// Unigram multiset-overlap F1. Offline stand-in for the semantic scorer.
SimilarityScore lexical_fallback(std::string_view candidate,
                                 std::string_view reference);

/// Batch similarity scorer. Implementations must return one score per pair in
/// input order.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual ScoreKind kind() const = 0;
  virtual std::vector<SimilarityScore> score_batch(
      std::span<const TextPair> pairs) = 0;

  SimilarityScore score(std::string_view candidate, std::string_view reference);
};

class RougeLScorer final : public SimilarityScorer {
 public:
  ScoreKind kind() const override { return ScoreKind::rouge_l; }
  std::vector<SimilarityScore> score_batch(
      std::span<const TextPair> pairs) override;
};

class LexicalFallbackScorer final : public SimilarityScorer {
 public:
  ScoreKind kind() const override { return ScoreKind::lexical_fallback; }
  std::vector<SimilarityScore> score_batch(
      std::span<const TextPair> pairs) override;
};

struct SidecarOptions {
  std::string endpoint = "http://127.0.0.1:8080";
  std::string model_id = "roberta-large";
  bool rescale = false;
  std::size_t batch_size = 64;
  double timeout_seconds = 120.0;
};

/// Client for the scoring sidecar's POST /v1/score endpoint. Unreachable
/// sidecars raise SidecarUnavailableError; there is no silent fallback.
class SidecarScorer final : public SimilarityScorer {
 public:
  explicit SidecarScorer(SidecarOptions options);
  ScoreKind kind() const override { return ScoreKind::semantic_external; }
  std::vector<SimilarityScore> score_batch(
      std::span<const TextPair> pairs) override;

  const SidecarOptions& options() const { return options_; }

 private:
  SidecarOptions options_;
};

/// Scores one pair through `scorer`.
SimilarityScore semantic_score(std::string_view candidate,
                               std::string_view reference,
                               SimilarityScorer& scorer);

}  // namespace convprompt
