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

#include "convprompt/llm.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "convprompt/detail/random.hpp"
#include "convprompt/errors.hpp"

namespace convprompt {

std::string_view to_string(MockPolicy policy) {
  switch (policy) {
    case MockPolicy::echo: return "echo";
    case MockPolicy::templated: return "template";
    case MockPolicy::style_replay: return "style_replay";
  }
  return "unknown";
}

MockPolicy parse_mock_policy(std::string_view text) {
  if (text == "echo") return MockPolicy::echo;
  if (text == "template" || text == "templated") return MockPolicy::templated;
  if (text == "style_replay") return MockPolicy::style_replay;
  throw ConfigError("unknown mock policy: " + std::string(text));
}

void ModelConfig::validate() const {
  if (name.empty()) throw ConfigError("model config has no name");
  if (price_in < 0 || price_out < 0) {
    throw ConfigError("model " + name + " has a negative price");
  }
  if (temperature < 0) throw ConfigError("model " + name + " has a negative temperature");
  if (max_output_tokens <= 0) {
    throw ConfigError("model " + name + " needs a positive max_output_tokens");
  }
  if (!is_mock() && endpoint.empty()) {
    throw ConfigError("model " + name + " has no endpoint");
  }
}

std::vector<ModelConfig> default_model_table() {
  auto row = [](std::string name, std::string provider, std::string api_model,
                std::string version, double in, double out, std::string endpoint,
                std::string env) {
    ModelConfig m;
    m.name = std::move(name);
    m.provider = std::move(provider);
    m.api_model = std::move(api_model);
    m.version = std::move(version);
    m.price_in = in;
    m.price_out = out;
    m.endpoint = std::move(endpoint);
    m.credentials_env = std::move(env);
    return m;
  };
  const std::string openai = "https://api.openai.com/v1";
  const std::string bedrock = "http://127.0.0.1:4000/v1";
  return {
      row("gpt-4.1-mini", "openai", "gpt-4.1-mini-2025-04-14", "2025-04-14", 0.4, 1.6,
          openai, "OPENAI_API_KEY"),
      row("gpt-4.1", "openai", "gpt-4.1-2025-04-14", "2025-04-14", 2.0, 8.0, openai,
          "OPENAI_API_KEY"),
      row("o4-mini", "openai", "o4-mini-2025-04-16", "2025-04-16", 1.1, 4.0, openai,
          "OPENAI_API_KEY"),
      row("llama3.3-70b", "meta", "us.meta.llama3-3-70b-instruct-v1:0",
          "v1(2024-12-19)", 0.72, 0.72, bedrock, "BEDROCK_GATEWAY_API_KEY"),
      row("claude-sonnet-4", "anthropic", "us.anthropic.claude-sonnet-4-20250514-v1:0",
          "20250514-v1", 3.0, 15.0, bedrock, "BEDROCK_GATEWAY_API_KEY"),
  };
}

std::vector<ModelConfig> load_models_cfg(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read models file: ") + e.what());
  }
  std::vector<ModelConfig> models;
  for (const auto& [section, body] : tree) {
    if (body.empty()) continue;
    ModelConfig m;
    m.name = section;
    try {
      m.provider = body.get<std::string>("provider");
      m.api_model = body.get<std::string>("model", section);
      m.version = body.get<std::string>("version", "");
      m.temperature = body.get<double>("temperature", 0.1);
      m.max_output_tokens = body.get<int>("max_output_tokens", 512);
      m.price_in = body.get<double>("price_in", 0.0);
      m.price_out = body.get<double>("price_out", 0.0);
      m.endpoint = body.get<std::string>("endpoint", "");
      m.credentials_env = body.get<std::string>("credentials_env", "");
      m.mock_policy = parse_mock_policy(body.get<std::string>("policy", "style_replay"));
      m.mock_seed = body.get<std::uint64_t>("seed", 0);
    } catch (const pt::ptree_error& e) {
      throw ConfigError("model [" + section + "]: " + e.what());
    }
    m.validate();
    models.push_back(std::move(m));
  }
  return models;
}

const ModelConfig& find_model(std::span<const ModelConfig> models, std::string_view name) {
  auto it = std::find_if(models.begin(), models.end(),
                         [&](const ModelConfig& m) { return m.name == name; });
  if (it == models.end()) throw ConfigError("unknown model: " + std::string(name));
  return *it;
}

double cost(const Usage& usage, const ModelConfig& config) {
  return static_cast<double>(usage.input_tokens) * config.price_in / 1e6 +
         static_cast<double>(usage.output_tokens) * config.price_out / 1e6;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string canonical_serialization(const Conversation& conversation) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& m : conversation.messages) {
    arr.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return arr.dump();
}

std::string conversation_hash(const Conversation& conversation) {
  return sha256_hex(canonical_serialization(conversation));
}

std::string cache_key(const Conversation& conversation, const ModelConfig& config,
                      unsigned sample_index) {
  char temp[32];
  std::snprintf(temp, sizeof temp, "%.17g", config.temperature);
  std::string material;
  auto field = [&](std::string_view v) {
    material.append(v);
    material.push_back('\x1f');
  };
  field(config.provider);
  field(config.name);
  field(config.api_model);
  field(config.version);
  field(temp);
  field(std::to_string(config.max_output_tokens));
  if (config.is_mock()) {
    field(to_string(config.mock_policy));
    field(std::to_string(config.mock_seed));
  }
  material.push_back('\x1e');
  material += canonical_serialization(conversation);
  material.push_back('\x1e');
  material += std::to_string(sample_index);
  return sha256_hex(material);
}

ResponseCache::ResponseCache(std::filesystem::path dir) {
  std::filesystem::create_directories(dir);
  file_ = dir / "responses.jsonl";
  std::ifstream in(file_);
  std::string line;
  while (std::getline(in, line)) {
    try {
      const auto j = nlohmann::json::parse(line);
      Completion c;
      c.text = j.at("text").get<std::string>();
      c.usage.input_tokens = j.at("input_tokens").get<std::int64_t>();
      c.usage.output_tokens = j.at("output_tokens").get<std::int64_t>();
      c.created = j.value("created", std::int64_t{0});
      entries_.insert_or_assign(j.at("key").get<std::string>(), std::move(c));
    } catch (const nlohmann::json::exception&) {
      // torn tail line
    }
  }
}

std::optional<Completion> ResponseCache::get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const Completion& completion) {
  nlohmann::ordered_json j;
  j["key"] = key;
  j["text"] = completion.text;
  j["input_tokens"] = completion.usage.input_tokens;
  j["output_tokens"] = completion.usage.output_tokens;
  j["created"] = completion.created;
  std::unique_lock lock(mutex_);
  if (entries_.contains(key)) return;
  std::ofstream out(file_, std::ios::app);
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot append to cache file " + file_.string());
  Completion stored = completion;
  stored.cached = false;
  entries_.emplace(key, std::move(stored));
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::chrono::duration<double> backoff_delay(const RetryPolicy& policy, int retry,
                                            double jitter_unit) {
  const double raw = policy.base_delay.count() * std::ldexp(1.0, retry);
  const double capped = std::min(raw, policy.max_delay.count());
  return std::chrono::duration<double>(capped * (0.5 + 0.5 * jitter_unit));
}

Gateway::Gateway(ChatBackend& backend, ResponseCache* cache, RetryPolicy retry,
                 std::size_t max_in_flight)
    : backend_(backend),
      cache_(cache),
      retry_(std::move(retry)),
      in_flight_(static_cast<std::ptrdiff_t>(
          std::clamp<std::size_t>(max_in_flight, 1, kMaxInFlight))),
      jitter_rng_(retry_.jitter_seed) {
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
  if (!retry_.sleep) {
    retry_.sleep = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
  }
}

Completion Gateway::complete(const Conversation& conversation, const ModelConfig& config,
                             unsigned sample_index) {
  require_request(conversation);
  const std::string key = cache_key(conversation, config, sample_index);
  if (cache_ != nullptr) {
    if (auto hit = cache_->get(key)) {
      hit->cached = true;
      return *hit;
    }
  }

  for (int attempt = 0;; ++attempt) {
    try {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<kMaxInFlight>& sem;
        ~Release() { sem.release(); }
      } release{in_flight_};
      ++backend_calls_;
      Completion c = backend_.complete(conversation, config, sample_index);
      c.cached = false;
      if (cache_ != nullptr) cache_->put(key, c);
      return c;
    } catch (const TransientError&) {
      if (attempt + 1 >= retry_.max_attempts) throw;
    }
    double unit = 0.0;
    {
      std::lock_guard lock(jitter_mutex_);
      unit = detail::draw_unit(jitter_rng_);
    }
    retry_.sleep(backoff_delay(retry_, attempt, unit));
  }
}

}  // namespace convprompt
