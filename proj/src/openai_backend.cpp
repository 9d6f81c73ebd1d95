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

#include <json.hpp>

#include <chrono>
#include <cstdlib>

#include "convprompt/errors.hpp"
#include "convprompt/llm.hpp"
#include "http_util.hpp"

namespace convprompt {

OpenAIBackend::OpenAIBackend(double timeout_seconds) : timeout_seconds_(timeout_seconds) {}

std::string OpenAIBackend::request_body(const Conversation& conversation,
                                        const ModelConfig& config) {
  nlohmann::ordered_json body;
  body["model"] = config.api_model.empty() ? config.name : config.api_model;
  body["messages"] = nlohmann::ordered_json::parse(canonical_serialization(conversation));
  body["temperature"] = config.temperature;
  body["max_tokens"] = config.max_output_tokens;
  return body.dump();
}

Completion OpenAIBackend::parse_response(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    Completion c;
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ProtocolError("message content is not a string");
    c.text = content.get<std::string>();
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      c.usage.input_tokens = u->value("prompt_tokens", std::int64_t{0});
      c.usage.output_tokens = u->value("completion_tokens", std::int64_t{0});
    }
    c.created = j.value("created", std::int64_t{0});
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed chat completion response: ") + e.what());
  }
}

Completion OpenAIBackend::complete(const Conversation& conversation,
                                   const ModelConfig& config, unsigned /*sample_index*/) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config.credentials_env.empty()) {
    const char* key = std::getenv(config.credentials_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw AuthError("environment variable " + config.credentials_env +
                      " is not set for model " + config.name);
    }
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  const auto result = detail::post_json(config.endpoint + "/chat/completions",
                                        request_body(conversation, config), headers,
                                        std::chrono::duration<double>(timeout_seconds_));
  if (!result.response) {
    throw TransientError("transport failure talking to " + config.endpoint + ": " +
                         result.transport_error);
  }
  const int status = result.response->status;
  const std::string snippet = result.response->body.substr(0, 200);
  if (status == 401 || status == 403) {
    throw AuthError("backend rejected credentials (HTTP " + std::to_string(status) + ")");
  }
  if (status == 429) throw RateLimitError("rate limited: " + snippet);
  if (status == 408 || status >= 500) {
    throw TransientError("backend error HTTP " + std::to_string(status) + ": " + snippet);
  }
  if (status != 200) {
    throw LlmError("backend refused request HTTP " + std::to_string(status) + ": " + snippet);
  }
  Completion c = parse_response(result.response->body);
  if (c.text.empty()) throw ProtocolError("backend returned an empty completion");
  return c;
}

}  // namespace convprompt
