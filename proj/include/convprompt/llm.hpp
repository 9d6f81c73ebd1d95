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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <semaphore>
#include <random>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "convprompt/prompt.hpp"

namespace convprompt {

enum class MockPolicy { echo, templated, style_replay };

std::string_view to_string(MockPolicy policy);
MockPolicy parse_mock_policy(std::string_view text);

struct ModelConfig {
  std::string name;        // display name, e.g. "gpt-4.1-mini"
  std::string provider;    // "openai", "meta", "anthropic", ... or "mock"
  std::string api_model;   // identifier sent on the wire; defaults to name
  std::string version;
  double temperature = 0.1;
  int max_output_tokens = 512;
  double price_in = 0.0;   // USD per 1M input tokens
  double price_out = 0.0;  // USD per 1M output tokens
  std::string endpoint;    // base URL; "/chat/completions" is appended
  std::string credentials_env;

  // Only read when provider == "mock".
  MockPolicy mock_policy = MockPolicy::style_replay;
  std::uint64_t mock_seed = 0;

  bool is_mock() const { return provider == "mock"; }
  void validate() const;
};

/// The five hosted models with their July 2025 list prices.
std::vector<ModelConfig> default_model_table();

/// INI file, one `[name]` section per model. Keys: provider, model, version,
/// temperature, max_output_tokens, price_in, price_out, endpoint,
/// credentials_env, policy, seed.
std::vector<ModelConfig> load_models_cfg(const std::filesystem::path& path);

/// Throws ConfigError when `name` is not in `models`.
const ModelConfig& find_model(std::span<const ModelConfig> models, std::string_view name);

struct Usage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;

  Usage& operator+=(const Usage& other) {
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    return *this;
  }
  friend bool operator==(const Usage&, const Usage&) = default;
};

/// input_tokens * price_in / 1e6 + output_tokens * price_out / 1e6
double cost(const Usage& usage, const ModelConfig& config);

struct Completion {
  std::string text;
  Usage usage;
  std::int64_t created = 0;  // backend-reported creation time, epoch seconds
  bool cached = false;
};

/// Audit row for one chat-completion result used during a run. A response
/// reused by a second method within an instance is logged again under that
/// method's cost category with `cached` set.
struct GenerationRecord {
  std::string instance_id;
  std::string method;         // method label that issued the call
  std::string cost_category;  // base method label, or "SR[label]" for refine calls
  std::string stage;          // negative, final, refine_critique, refine_rewrite
  std::string model_name;
  std::string conversation_hash;
  unsigned sample_index = 0;
  std::string output_text;
  Usage usage;
  double cost_usd = 0.0;
  bool cached = false;
  std::int64_t timestamp = 0;  // Completion::created
};

/// One chat-completion call. `sample_index` > 0 asks for a fresh sample of a
/// request already answered; deterministic backends fold it into their seed.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Completion complete(const Conversation& conversation,
                              const ModelConfig& config, unsigned sample_index) = 0;
};

struct MockOptions {
  MockPolicy policy = MockPolicy::style_replay;
  std::uint64_t seed = 0;
  std::size_t echo_tokens = 10;
  // Assistant turns followed by this user text are treated as rejected.
  std::string rejection_text = PromptTemplates::defaults().rejection;
};

/// Offline backend whose output is a pure function of (conversation, policy,
/// seed, sample_index). Token usage is whitespace-token counts.
///   echo          first `echo_tokens` tokens of the final user message
///   templated     a fixed sentence tagged with the conversation hash
///   style_replay  a seeded blend of sentences from accepted assistant turns,
///                 or from the final user message when there are none
class MockBackend final : public ChatBackend {
 public:
  explicit MockBackend(MockOptions options = {});
  Completion complete(const Conversation& conversation, const ModelConfig& config,
                      unsigned sample_index) override;
  std::size_t calls() const { return calls_.load(); }
  const MockOptions& options() const { return options_; }

 private:
  MockOptions options_;
  std::atomic<std::size_t> calls_{0};
};

/// OpenAI-style POST {endpoint}/chat/completions.
class OpenAIBackend final : public ChatBackend {
 public:
  explicit OpenAIBackend(double timeout_seconds = 120.0);
  Completion complete(const Conversation& conversation, const ModelConfig& config,
                      unsigned sample_index) override;

  static std::string request_body(const Conversation& conversation,
                                  const ModelConfig& config);
  /// Throws ProtocolError when the body lacks choices[0].message.content.
  static Completion parse_response(std::string_view body);

 private:
  double timeout_seconds_;
};

std::string sha256_hex(std::string_view data);

/// Compact JSON array of {"role","content"} objects.
std::string canonical_serialization(const Conversation& conversation);

std::string conversation_hash(const Conversation& conversation);

/// SHA-256 over the backend identity (provider, model, version, temperature,
/// output limit, mock policy and seed), the canonical conversation and the
/// sample index.
std::string cache_key(const Conversation& conversation, const ModelConfig& config,
                      unsigned sample_index);

/// Append-only on-disk key -> response store (`responses.jsonl` in the cache
/// directory). Concurrent readers, serialized writers. A torn final line from
/// an interrupted write is ignored on load.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<Completion> get(const std::string& key) const;
  void put(const std::string& key, const Completion& completion);
  std::size_t size() const;

 private:
  std::filesystem::path file_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Completion> entries_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::duration<double> base_delay{1.0};
  std::chrono::duration<double> max_delay{30.0};
  std::uint64_t jitter_seed = 0;
  // Defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::duration<double>)> sleep;
};

/// Delay before retry number `retry` (0-based): min(max, base * 2^retry),
/// scaled by a jitter factor in [0.5, 1).
std::chrono::duration<double> backoff_delay(const RetryPolicy& policy, int retry,
                                            double jitter_unit);

/// Uniform entry point: precondition checks, cache, retries with capped
/// jittered exponential backoff, and a cap on in-flight backend requests.
class Gateway {
 public:
  static constexpr std::ptrdiff_t kMaxInFlight = 256;

  Gateway(ChatBackend& backend, ResponseCache* cache, RetryPolicy retry = {},
          std::size_t max_in_flight = 4);

  /// Throws PromptError if the conversation is not a request, AuthError /
  /// ProtocolError immediately, and the last TransientError once attempts run
  /// out.
  Completion complete(const Conversation& conversation, const ModelConfig& config,
                      unsigned sample_index = 0);

  /// Requests that reached the backend, retries included.
  std::size_t backend_calls() const { return backend_calls_.load(); }

 private:
  ChatBackend& backend_;
  ResponseCache* cache_;
  RetryPolicy retry_;
  std::counting_semaphore<kMaxInFlight> in_flight_;
  std::mutex jitter_mutex_;
  std::mt19937_64 jitter_rng_;
  std::atomic<std::size_t> backend_calls_{0};
};

}  // namespace convprompt
