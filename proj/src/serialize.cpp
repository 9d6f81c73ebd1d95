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

#include "convprompt/serialize.hpp"

#include <ostream>

namespace convprompt {

using nlohmann::ordered_json;

ordered_json to_json(const Review& review) {
  ordered_json j;
  j["user_id"] = review.user_id;
  j["item_id"] = review.item_id;
  j["text"] = review.text;
  if (review.rating) j["rating"] = *review.rating;
  j["timestamp"] = review.timestamp;
  return j;
}

ordered_json to_json(const Item& item) {
  ordered_json j;
  j["item_id"] = item.item_id;
  j["title"] = item.title;
  j["category"] = item.category;
  j["description"] = item.description;
  return j;
}

ordered_json to_json(const EvalInstance& instance) {
  ordered_json j;
  j["id"] = instance.id;
  j["dataset"] = instance.dataset;
  j["user_id"] = instance.history.user_id;
  j["history"] = ordered_json::array();
  for (const auto& e : instance.history.entries) {
    j["history"].push_back({{"item", to_json(e.item)}, {"review", to_json(e.review)}});
  }
  j["target_item"] = to_json(instance.target_item);
  j["target_review"] = to_json(instance.target_review);
  return j;
}

Review review_from_json(const ordered_json& j) {
  Review r;
  r.user_id = j.at("user_id").get<std::string>();
  r.item_id = j.at("item_id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  if (j.contains("rating")) r.rating = j.at("rating").get<int>();
  r.timestamp = j.at("timestamp").get<std::int64_t>();
  return r;
}

Item item_from_json(const ordered_json& j) {
  return Item{j.at("item_id").get<std::string>(), j.value("title", ""),
              j.value("category", ""), j.value("description", "")};
}

EvalInstance instance_from_json(const ordered_json& j) {
  EvalInstance inst;
  inst.id = j.at("id").get<std::string>();
  inst.dataset = j.value("dataset", "");
  inst.history.user_id = j.at("user_id").get<std::string>();
  for (const auto& e : j.at("history")) {
    inst.history.entries.push_back(
        {item_from_json(e.at("item")), review_from_json(e.at("review"))});
  }
  inst.target_item = item_from_json(j.at("target_item"));
  inst.target_review = review_from_json(j.at("target_review"));
  return inst;
}

ordered_json to_json(const GenerationRecord& record) {
  ordered_json j;
  j["instance_id"] = record.instance_id;
  j["method"] = record.method;
  j["cost_category"] = record.cost_category;
  j["stage"] = record.stage;
  j["model"] = record.model_name;
  j["conversation_hash"] = record.conversation_hash;
  j["sample_index"] = record.sample_index;
  j["output"] = record.output_text;
  j["usage"] = {{"input_tokens", record.usage.input_tokens},
                {"output_tokens", record.usage.output_tokens}};
  j["cost_usd"] = record.cost_usd;
  j["cached"] = record.cached;
  j["timestamp"] = record.timestamp;
  return j;
}

GenerationRecord generation_from_json(const ordered_json& j) {
  GenerationRecord r;
  r.instance_id = j.at("instance_id").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.cost_category = j.value("cost_category", r.method);
  r.stage = j.value("stage", "final");
  r.model_name = j.at("model").get<std::string>();
  r.conversation_hash = j.value("conversation_hash", "");
  r.sample_index = j.value("sample_index", 0u);
  r.output_text = j.value("output", "");
  const auto& usage = j.at("usage");
  r.usage.input_tokens = usage.at("input_tokens").get<std::int64_t>();
  r.usage.output_tokens = usage.at("output_tokens").get<std::int64_t>();
  r.cost_usd = j.at("cost_usd").get<double>();
  r.cached = j.value("cached", false);
  r.timestamp = j.value("timestamp", std::int64_t{0});
  return r;
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& [_, item] : corpus.items) out << to_json(item).dump() << '\n';
  for (const auto& r : corpus.reviews) out << to_json(r).dump() << '\n';
}

}  // namespace convprompt
