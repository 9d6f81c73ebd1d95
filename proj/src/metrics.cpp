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

#include "convprompt/metrics.hpp"

#include <json.hpp>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <chrono>
#include <unordered_map>

#include "convprompt/errors.hpp"
#include "http_util.hpp"

namespace convprompt {
namespace {

bool is_token_char(UChar32 c) {
  if (u_isalnum(c)) return true;
  const auto type = u_charType(c);
  return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK;
}

SimilarityScore from_counts(double overlap, std::size_t cand_len,
                            std::size_t ref_len, ScoreKind kind) {
  SimilarityScore s;
  s.kind = kind;
  s.precision = cand_len == 0 ? 0.0 : overlap / static_cast<double>(cand_len);
  s.recall = ref_len == 0 ? 0.0 : overlap / static_cast<double>(ref_len);
  const double denom = s.precision + s.recall;
  s.f = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  return s;
}

}  // namespace

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::rouge_l: return "rouge_l";
    case ScoreKind::semantic_external: return "semantic_external";
    case ScoreKind::lexical_fallback: return "lexical_fallback";
  }
  return "unknown";
}

std::vector<std::string> tokenize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFKC normalizer unavailable");
  icu::UnicodeString s = nfkc->normalize(
      icu::UnicodeString::fromUTF8(
          icu::StringPiece(text.data(), static_cast<int32_t>(text.size()))),
      status);
  if (U_FAILURE(status)) throw Error("NFKC normalization failed");
  s.toLower(icu::Locale::getRoot());

  std::vector<std::string> tokens;
  int32_t start = -1;
  auto flush = [&](int32_t end) {
    if (start < 0) return;
    std::string tok;
    s.tempSubStringBetween(start, end).toUTF8String(tok);
    tokens.push_back(std::move(tok));
    start = -1;
  };
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    if (is_token_char(c)) {
      if (start < 0) start = i;
    } else {
      flush(i);
    }
    i += U16_LENGTH(c);
  }
  flush(s.length());
  return tokens;
}

std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Rolling row over the shorter sequence.
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (const auto& x : a) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = x == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

SimilarityScore rouge_l_tokens(std::span<const std::string> candidate,
                               std::span<const std::string> reference) {
  const auto lcs = lcs_length(candidate, reference);
  return from_counts(static_cast<double>(lcs), candidate.size(),
                     reference.size(), ScoreKind::rouge_l);
}

SimilarityScore rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  return rouge_l_tokens(c, r);
}

SimilarityScore lexical_fallback(std::string_view candidate,
                                 std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  std::unordered_map<std::string, std::size_t> ref_counts;
  for (const auto& t : r) ++ref_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : c) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return from_counts(static_cast<double>(overlap), c.size(), r.size(),
                     ScoreKind::lexical_fallback);
}

SimilarityScore SimilarityScorer::score(std::string_view candidate,
                                        std::string_view reference) {
  const TextPair pair{std::string(candidate), std::string(reference)};
  auto scores = score_batch(std::span<const TextPair>(&pair, 1));
  if (scores.size() != 1) throw ScorerError("scorer returned wrong batch size");
  return scores.front();
}

std::vector<SimilarityScore> RougeLScorer::score_batch(
    std::span<const TextPair> pairs) {
  std::vector<SimilarityScore> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(rouge_l(p.candidate, p.reference));
  return out;
}

std::vector<SimilarityScore> LexicalFallbackScorer::score_batch(
    std::span<const TextPair> pairs) {
  std::vector<SimilarityScore> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(lexical_fallback(p.candidate, p.reference));
  }
  return out;
}

SidecarScorer::SidecarScorer(SidecarOptions options)
    : options_(std::move(options)) {
  if (options_.batch_size == 0) options_.batch_size = 1;
}

std::vector<SimilarityScore> SidecarScorer::score_batch(
    std::span<const TextPair> pairs) {
  using nlohmann::json;
  std::vector<SimilarityScore> out;
  out.reserve(pairs.size());
  for (std::size_t start = 0; start < pairs.size(); start += options_.batch_size) {
    const auto chunk = pairs.subspan(
        start, std::min(options_.batch_size, pairs.size() - start));
    json body;
    body["pairs"] = json::array();
    for (const auto& p : chunk) {
      body["pairs"].push_back({{"candidate", p.candidate}, {"reference", p.reference}});
    }
    body["model_id"] = options_.model_id;
    body["rescale"] = options_.rescale;

    const auto result = detail::post_json(
        options_.endpoint + "/v1/score", body.dump(), {},
        std::chrono::duration<double>(options_.timeout_seconds));
    if (!result.response) {
      throw SidecarUnavailableError("scoring sidecar unreachable at " +
                                    options_.endpoint + ": " +
                                    result.transport_error);
    }
    if (result.response->status == 503) {
      throw SidecarUnavailableError("scoring sidecar model unavailable");
    }
    if (result.response->status != 200) {
      throw ScorerError("scoring sidecar returned HTTP " +
                        std::to_string(result.response->status));
    }
    try {
      const auto reply = json::parse(result.response->body);
      const auto& scores = reply.at("scores");
      if (!scores.is_array() || scores.size() != chunk.size()) {
        throw ScorerError("scoring sidecar returned " +
                          std::to_string(scores.size()) + " scores for " +
                          std::to_string(chunk.size()) + " pairs");
      }
      for (const auto& s : scores) {
        SimilarityScore score;
        score.kind = ScoreKind::semantic_external;
        score.precision = s.at("precision").get<double>();
        score.recall = s.at("recall").get<double>();
        score.f = s.at("f1").get<double>();
        out.push_back(score);
      }
    } catch (const json::exception& e) {
      throw ScorerError(std::string("malformed scoring sidecar reply: ") + e.what());
    }
  }
  return out;
}

SimilarityScore semantic_score(std::string_view candidate,
                               std::string_view reference,
                               SimilarityScorer& scorer) {
  return scorer.score(candidate, reference);
}

}  // namespace convprompt
