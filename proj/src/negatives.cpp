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

#include "convprompt/negatives.hpp"

#include <vector>

#include "convprompt/errors.hpp"

namespace convprompt {

std::string_view to_string(NegativeSource source) {
  switch (source) {
    case NegativeSource::other_user_high: return "other_user_high";
    case NegativeSource::other_user_low: return "other_user_low";
    case NegativeSource::generated: return "generated";
  }
  return "unknown";
}

NegativeAssignment select_negative(const ReferencePool& pool, const Review& true_review,
                                   SimilarityScorer& scorer, SelectMode mode,
                                   std::size_t turn) {
  std::vector<const Review*> candidates;
  std::vector<TextPair> pairs;
  for (const auto& r : pool.reviews) {
    if (r.text == true_review.text) continue;
    candidates.push_back(&r);
    pairs.push_back({r.text, true_review.text});
  }
  if (candidates.empty()) {
    throw CorpusError("no usable negative for item " + pool.item_id +
                      " after excluding copies of the true review");
  }
  const auto scores = scorer.score_batch(pairs);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const bool better = mode == SelectMode::highest ? scores[i].f > scores[best].f
                                                    : scores[i].f < scores[best].f;
    if (better) best = i;
  }
  NegativeAssignment a;
  a.turn = turn;
  a.text = candidates[best]->text;
  a.source = mode == SelectMode::highest ? NegativeSource::other_user_high
                                         : NegativeSource::other_user_low;
  a.score = scores[best].f;
  a.author = candidates[best]->user_id;
  return a;
}

NegativeAssignments select_negatives(const Corpus& corpus, const EvalInstance& instance,
                                     std::size_t count, SimilarityScorer& scorer,
                                     SelectMode mode) {
  const std::size_t n = instance.n();
  if (count > n) throw PromptError("more negatives than history reviews");
  NegativeAssignments out;
  for (std::size_t k = n - count + 1; k <= n; ++k) {
    const auto& entry = instance.history.entries[k - 1];
    const auto pool = reference_pool(corpus, entry.item.item_id, instance.history.user_id, 1);
    out.emplace(k, select_negative(pool, entry.review, scorer, mode, k));
  }
  return out;
}

NegativeAssignments generate_negatives(const EvalInstance& instance, std::size_t turns,
                                       const PromptForge& forge, const CompleteFn& complete,
                                       std::optional<std::size_t> count) {
  const std::size_t n = instance.n();
  const std::size_t m = count.value_or(turns);
  if (turns == 0 || turns >= n) throw PromptError("generated negatives need 1 <= turns < n");
  if (m == 0 || m > turns) throw PromptError("generated negatives need 1 <= count <= turns");

  NegativeAssignments out;
  NegativeMap so_far;
  for (std::size_t k = n - m + 1; k <= n; ++k) {
    const auto conversation = forge.build_until(instance, turns, so_far, k);
    const std::string& truth = instance.history.entries[k - 1].review.text;
    Completion c = complete(conversation, 0);
    if (c.text == truth) c = complete(conversation, 1);
    if (c.text == truth) {
      throw NegativeCollisionError("generated negative for turn " + std::to_string(k) +
                                   " repeats the true review");
    }
    if (c.text.empty()) throw ProtocolError("generated negative is empty");
    so_far.emplace(k, c.text);
    NegativeAssignment a;
    a.turn = k;
    a.text = std::move(c.text);
    a.source = NegativeSource::generated;
    out.emplace(k, std::move(a));
  }
  return out;
}

NegativeMap to_negative_map(const NegativeAssignments& assignments) {
  NegativeMap out;
  for (const auto& [k, a] : assignments) out.emplace(k, a.text);
  return out;
}

}  // namespace convprompt
