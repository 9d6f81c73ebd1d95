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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "convprompt/corpus.hpp"
#include "convprompt/llm.hpp"
#include "convprompt/metrics.hpp"
#include "convprompt/prompt.hpp"

namespace convprompt {

enum class NegativeSource { other_user_high, other_user_low, generated };
enum class SelectMode { highest, lowest };

std::string_view to_string(NegativeSource source);

/// An incorrect assistant reply for one CCP turn.
struct NegativeAssignment {
  std::size_t turn = 0;  // 1-based history index
  std::string text;
  NegativeSource source = NegativeSource::other_user_high;
  std::optional<double> score;  // similarity to the turn's true review
  std::string author;           // empty for generated negatives
};

using NegativeAssignments = std::map<std::size_t, NegativeAssignment>;

/// The pool review scoring highest (or lowest) against `true_review`, with
/// candidates byte-equal to the true text excluded. Ties go to the earliest
/// candidate. Throws CorpusError if no candidate is left.
NegativeAssignment select_negative(const ReferencePool& pool, const Review& true_review,
                                   SimilarityScorer& scorer, SelectMode mode,
                                   std::size_t turn = 0);

/// select_negative for each of the `count` most recent history turns, drawing
/// from the other users' reviews of that turn's item.
NegativeAssignments select_negatives(const Corpus& corpus, const EvalInstance& instance,
                                     std::size_t count, SimilarityScorer& scorer,
                                     SelectMode mode);

/// Chat completion hook used for generated negatives; the second argument is
/// the sample index (1 on the single regeneration after a collision).
using CompleteFn = std::function<Completion(const Conversation&, unsigned)>;

/// Self-generated negatives for the last `count` of `turns` conversational
/// turns (count defaults to all turns). The first negative answers the
/// conversation up to the request for its item; each later one answers the
/// conversation extended with the previous turn's negative, rejection, true
/// review and acceptance. One call per turn; a reply equal to the true review
/// is regenerated once and then raises NegativeCollisionError.
NegativeAssignments generate_negatives(const EvalInstance& instance, std::size_t turns,
                                       const PromptForge& forge, const CompleteFn& complete,
                                       std::optional<std::size_t> count = std::nullopt);

NegativeMap to_negative_map(const NegativeAssignments& assignments);

}  // namespace convprompt
