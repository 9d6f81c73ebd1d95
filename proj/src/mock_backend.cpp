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

#include <random>

#include "convprompt/detail/random.hpp"
#include "convprompt/llm.hpp"
#include "convprompt/text.hpp"

namespace convprompt {
namespace {

std::int64_t word_count(std::string_view text) {
  return static_cast<std::int64_t>(split_whitespace(text).size());
}

std::vector<std::string> sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    const auto first = current.find_first_not_of(" \t\r\n");
    if (first != std::string::npos) {
      const auto last = current.find_last_not_of(" \t\r\n");
      out.push_back(current.substr(first, last - first + 1));
    }
    current.clear();
  };
  for (char c : text) {
    if (c == '\n') {
      flush();
      continue;
    }
    current.push_back(c);
    if (c == '.' || c == '!' || c == '?') flush();
  }
  flush();
  return out;
}

std::uint64_t hash_prefix(const std::string& hex) {
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

}  // namespace

MockBackend::MockBackend(MockOptions options) : options_(std::move(options)) {}

Completion MockBackend::complete(const Conversation& conversation,
                                 const ModelConfig& /*config*/, unsigned sample_index) {
  ++calls_;
  const auto& msgs = conversation.messages;
  const std::string& last_user = msgs.back().content;
  const std::string hash = conversation_hash(conversation);

  Completion c;
  switch (options_.policy) {
    case MockPolicy::echo: {
      const auto words = split_whitespace(last_user);
      for (std::size_t i = 0; i < words.size() && i < options_.echo_tokens; ++i) {
        if (i > 0) c.text.push_back(' ');
        c.text += words[i];
      }
      break;
    }
    case MockPolicy::templated:
      c.text = "This is a templated review for request " + hash.substr(0, 12) + ".";
      break;
    case MockPolicy::style_replay: {
      std::vector<std::string> pool;
      for (std::size_t i = 0; i < msgs.size(); ++i) {
        if (msgs[i].role != Role::assistant) continue;
        const bool rejected = i + 1 < msgs.size() &&
                              msgs[i + 1].content == options_.rejection_text;
        if (rejected) continue;
        for (auto& s : sentences(msgs[i].content)) pool.push_back(std::move(s));
      }
      if (pool.empty()) pool = sentences(last_user);
      std::mt19937_64 rng(detail::mix_seed(
          detail::mix_seed(options_.seed, hash_prefix(hash)), sample_index));
      const std::size_t want = std::min<std::size_t>(pool.size(), 2 + detail::draw_below(rng, 2));
      for (std::size_t i = 0; i < want; ++i) {
        std::swap(pool[i], pool[i + detail::draw_below(rng, pool.size() - i)]);
        if (i > 0) c.text.push_back(' ');
        c.text += pool[i];
      }
      break;
    }
  }
  if (c.text.empty()) c.text = "No comment.";
  for (const auto& m : msgs) c.usage.input_tokens += word_count(m.content);
  c.usage.output_tokens = word_count(c.text);
  c.created = 0;
  return c;
}

}  // namespace convprompt
