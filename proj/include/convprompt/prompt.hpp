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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convprompt/corpus.hpp"

namespace convprompt {

enum class Role { user, assistant };

std::string_view to_string(Role role);

struct Message {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

struct Conversation {
  std::vector<Message> messages;

  std::size_t size() const { return messages.size(); }
  friend bool operator==(const Conversation&, const Conversation&) = default;
};

/// Non-empty contents, strictly alternating roles, starting with `user`.
bool alternates(const Conversation& conversation);

/// alternates() and the last message is from `user`, i.e. ready to send.
bool is_request(const Conversation& conversation);

/// Throws PromptError unless is_request(conversation).
void require_request(const Conversation& conversation);

/// The five prompt texts. `first_instruction` takes the placeholders
/// {index_range}, {history} and {target_item}; `acceptance` takes
/// {target_item}. Other `{...}` sequences are left as written.
struct PromptTemplates {
  std::string first_instruction;
  std::string acceptance;
  std::string rejection;
  std::string refine_critique;
  std::string refine_request;

  static PromptTemplates defaults();

  /// Reads first_instruction.txt, acceptance.txt, rejection.txt,
  /// refine_critique.txt and refine_request.txt from `dir`. Files that do not
  /// exist keep the default text. One trailing newline is stripped per file.
  static PromptTemplates load(const std::filesystem::path& dir);

  /// Throws PromptError if a required placeholder is missing or a fixed text
  /// is empty.
  void validate() const;
};

struct RenderOptions {
  std::optional<std::size_t> description_limit;  // code points; none = full text
};

/// Python `repr()` of a string: single quotes unless the text contains a
/// single quote and no double quote, with backslash escapes for quotes,
/// backslashes and control characters.
std::string python_repr(std::string_view text);

/// `{'title': ..., 'category': ..., 'description': ...}`
std::string render_item(const Item& item, const RenderOptions& options = {});

/// Numbered item history block, 1 = oldest.
std::string render_history(std::span<const HistoryEntry> entries,
                           const RenderOptions& options = {});

class SelfRefine {
 public:
  SelfRefine(Conversation critique, std::string rewrite_request);

  /// base + [assistant: generated] + [user: critique request]
  const Conversation& critique_conversation() const { return critique_; }

  /// critique_conversation() + [assistant: critique] + [user: rewrite request]
  Conversation rewrite(std::string_view critique) const;

 private:
  Conversation critique_;
  std::string rewrite_request_;
};

enum class PromptMethod { baseline, scp, ccp };

enum class NegativeKind {
  none,
  high_semantic,  // CCP(B)
  high_lexical,   // CCP(R)
  low_semantic,   // CCP(B)-
  low_lexical,    // CCP(R)-
  generated,      // CCP(G)
};

/// Which prompt to build: method, conversational turns, negatives per run and
/// where negatives come from, plus an optional Self-Refine pass on the output.
struct PromptPlan {
  PromptMethod method = PromptMethod::baseline;
  std::size_t turns = 0;      // history reviews moved into conversation
  std::size_t negatives = 0;  // turns that get a rejected negative
  NegativeKind negative_kind = NegativeKind::none;
  bool self_refine = false;

  /// Throws PromptError unless turns < n, negatives <= turns, Baseline has no
  /// turns, SCP has no negatives and CCP has a negative source.
  void validate(std::size_t n) const;

  /// "Baseline", "Self-Refine", "SCP", "CCP(B)", "CCP(R)-", "CCP(G)+SR", ...
  std::string name() const;

  /// Inverse of name(). Turns default to n - 1 and CCP negatives to turns.
  static PromptPlan parse(std::string_view name, std::size_t n,
                          std::optional<std::size_t> turns = std::nullopt,
                          std::optional<std::size_t> negatives = std::nullopt);

  friend bool operator==(const PromptPlan&, const PromptPlan&) = default;
};

/// Turn indices in this interface are 1-based positions in the instance
/// history: with n history reviews and `turns` conversational turns, the first
/// instruction carries reviews 1..n-turns and turns cover n-turns+1..n.
using NegativeMap = std::map<std::size_t, std::string>;

class PromptForge {
 public:
  explicit PromptForge(PromptTemplates templates = PromptTemplates::defaults(),
                       RenderOptions options = {});

  const PromptTemplates& templates() const { return templates_; }

  std::string render_first_instruction(std::span<const HistoryEntry> prefix,
                                       const Item& request_item) const;
  std::string render_acceptance(const Item& next_item) const;

  /// Single user message holding the whole history.
  Conversation build_baseline(const EvalInstance& instance) const;

  /// 1 + 2*turns messages. turns == 0 reproduces build_baseline exactly.
  Conversation build_scp(const EvalInstance& instance, std::size_t turns) const;

  /// SCP with a rejected negative before the true review on each turn in
  /// `negatives`, which must cover exactly the `negative_count` most recent
  /// turns. 1 + 2*turns + 2*negative_count messages. A negative equal to the
  /// true review of its turn is rejected with PromptError.
  Conversation build_ccp(const EvalInstance& instance, std::size_t turns,
                         std::size_t negative_count,
                         const NegativeMap& negatives) const;

  /// Prefix of the CCP conversation ending with the user request for history
  /// item `request_index` (n + 1 requests the target item). Negatives are only
  /// read for turns before `request_index`.
  Conversation build_until(const EvalInstance& instance, std::size_t turns,
                           const NegativeMap& negatives,
                           std::size_t request_index) const;

  /// Throws PromptError if `base` is not a request or `generated` is empty.
  SelfRefine build_self_refine(const Conversation& base,
                               std::string_view generated) const;

 private:
  const Item& item_at(const EvalInstance& instance, std::size_t index) const;

  PromptTemplates templates_;
  RenderOptions options_;
};

}  // namespace convprompt
