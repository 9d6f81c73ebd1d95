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

#include <json.hpp>

#include <iosfwd>

#include "convprompt/corpus.hpp"
#include "convprompt/llm.hpp"

namespace convprompt {

// Record encoders with a fixed field order; these define the on-disk formats.
nlohmann::ordered_json to_json(const Review& review);
nlohmann::ordered_json to_json(const Item& item);
nlohmann::ordered_json to_json(const EvalInstance& instance);

Review review_from_json(const nlohmann::ordered_json& j);
Item item_from_json(const nlohmann::ordered_json& j);
EvalInstance instance_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const GenerationRecord& record);
GenerationRecord generation_from_json(const nlohmann::ordered_json& j);

/// Items first (sorted by id), then reviews in corpus order. The output loads
/// back through load_reviews.
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);

}  // namespace convprompt
