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

#include "convprompt/prompt.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "convprompt/errors.hpp"
#include "convprompt/text.hpp"

namespace convprompt {
namespace {

constexpr std::string_view kFirstInstruction =
    "You are an AI assistant. As an AI assistant, I want you to impersonate me. "
    "I will provide you with product information, and I would like you to "
    "generate a review that I might write.\n"
    "    \n"
    "# My Information\n"
    "Here is my previous item information. The items are listed in "
    "chronological order {index_range}.\n"
    "## Item history\n"
    "{history}\n"
    "\n"
    "# Task\n"
    "Please predict the impressions I might have and generate a review for the "
    "target item.\n"
    "## Target item\n"
    "{target_item}\n"
    "\n"
    "## Output format\n"
    "Your response should only be the generated review. Do not include any "
    "irrelevant information.";

constexpr std::string_view kAcceptance =
    "Excellent! It really feels like something I would write. Now, I will "
    "provide the next product. Please generate a review that I might write in "
    "the same way.\n"
    "## Target item \n"
    "{target_item}";

constexpr std::string_view kRejection =
    "Absolutely different! That's not how I would answer. Please think it over "
    "carefully and generate a review for the target item that I might actually "
    "write.";

constexpr std::string_view kRefineCritique =
    "Thank you! However, could you please critically review the created review "
    "from the perspective of whether it reflects the user's past review style "
    "and way of thinking, and suggest how it could be improved further?";

constexpr std::string_view kRefineRequest =
    "OK. Then, taking your critique into account, please rewrite the review. "
    "Remember, your response should be only the generated review; do not "
    "include any irrelevant information.";

using Substitutions = std::map<std::string_view, std::string_view>;

// Single left-to-right pass, so substituted text is never re-scanned.
std::string substitute(std::string_view tmpl, const Substitutions& values) {
  std::string out;
  out.reserve(tmpl.size() * 2);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out.append(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::optional<std::string> read_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  if (!text.empty() && text.back() == '\r') text.pop_back();
  return text;
}

void append_escape(std::string& out, unsigned code, bool wide) {
  char buf[8];
  std::snprintf(buf, sizeof buf, wide ? "\\u%04x" : "\\x%02x", code);
  out += buf;
}

}  // namespace

std::string_view to_string(Role role) {
  return role == Role::user ? "user" : "assistant";
}

bool alternates(const Conversation& conversation) {
  const auto& msgs = conversation.messages;
  if (msgs.empty() || msgs.front().role != Role::user) return false;
  for (std::size_t i = 0; i < msgs.size(); ++i) {
    if (msgs[i].content.empty()) return false;
    if (i > 0 && msgs[i].role == msgs[i - 1].role) return false;
  }
  return true;
}

bool is_request(const Conversation& conversation) {
  return alternates(conversation) &&
         conversation.messages.back().role == Role::user;
}

void require_request(const Conversation& conversation) {
  if (!is_request(conversation)) {
    throw PromptError(
        "conversation must alternate roles, start and end with a user message, "
        "and have non-empty contents");
  }
}

PromptTemplates PromptTemplates::defaults() {
  return PromptTemplates{std::string(kFirstInstruction), std::string(kAcceptance),
                         std::string(kRejection), std::string(kRefineCritique),
                         std::string(kRefineRequest)};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw PromptError("template directory not found: " + dir.string());
  }
  PromptTemplates t = defaults();
  const std::pair<const char*, std::string*> files[] = {
      {"first_instruction.txt", &t.first_instruction},
      {"acceptance.txt", &t.acceptance},
      {"rejection.txt", &t.rejection},
      {"refine_critique.txt", &t.refine_critique},
      {"refine_request.txt", &t.refine_request},
  };
  for (const auto& [name, field] : files) {
    if (auto text = read_template(dir / name)) *field = std::move(*text);
  }
  t.validate();
  return t;
}

void PromptTemplates::validate() const {
  for (std::string_view ph : {"{history}", "{target_item}"}) {
    if (first_instruction.find(ph) == std::string::npos) {
      throw PromptError("first instruction template lacks " + std::string(ph));
    }
  }
  if (acceptance.find("{target_item}") == std::string::npos) {
    throw PromptError("acceptance template lacks {target_item}");
  }
  if (rejection.empty() || refine_critique.empty() || refine_request.empty()) {
    throw PromptError("rejection and refinement templates must be non-empty");
  }
}

std::string python_repr(std::string_view text) {
  const bool has_single = text.find('\'') != std::string_view::npos;
  const bool has_double = text.find('"') != std::string_view::npos;
  const char quote = has_single && !has_double ? '"' : '\'';
  std::string out;
  out.reserve(text.size() + 2);
  out.push_back(quote);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == '\\') {
      out += "\\\\";
    } else if (c == static_cast<unsigned char>(quote)) {
      out.push_back('\\');
      out.push_back(quote);
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\r') {
      out += "\\r";
    } else if (c == '\t') {
      out += "\\t";
    } else if (c < 0x20 || c == 0x7f) {
      append_escape(out, c, false);
    } else if (c == 0xC2 && i + 1 < text.size()) {
      // U+0080..U+009F, U+00A0 and U+00AD are not printable in Python.
      const auto next = static_cast<unsigned char>(text[i + 1]);
      if ((next >= 0x80 && next <= 0xA0) || next == 0xAD) {
        append_escape(out, next, false);
        ++i;
      } else {
        out.push_back(static_cast<char>(c));
      }
    } else if (c == 0xE2 && i + 2 < text.size() &&
               static_cast<unsigned char>(text[i + 1]) == 0x80 &&
               (static_cast<unsigned char>(text[i + 2]) == 0xA8 ||
                static_cast<unsigned char>(text[i + 2]) == 0xA9)) {
      append_escape(out, 0x2000u + (static_cast<unsigned char>(text[i + 2]) - 0x80u), true);
      i += 2;
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  out.push_back(quote);
  return out;
}

std::string render_item(const Item& item, const RenderOptions& options) {
  const std::string description =
      options.description_limit ? truncate_utf8(item.description, *options.description_limit)
                                : item.description;
  return "{'title': " + python_repr(item.title) + ", 'category': " +
         python_repr(item.category) + ", 'description': " + python_repr(description) +
         "}";
}

std::string render_history(std::span<const HistoryEntry> entries,
                           const RenderOptions& options) {
  std::string out = "{\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0) out += ", \n";
    out += "    " + std::to_string(i + 1) + ": {\n";
    out += "        'itemInfo': " + render_item(entries[i].item, options) + ",\n";
    out += "        'review': " + python_repr(entries[i].review.text) + "\n";
    out += "    }";
  }
  if (!entries.empty()) out += "\n";
  out += "}";
  return out;
}

SelfRefine::SelfRefine(Conversation critique, std::string rewrite_request)
    : critique_(std::move(critique)), rewrite_request_(std::move(rewrite_request)) {}

Conversation SelfRefine::rewrite(std::string_view critique) const {
  if (critique.empty()) throw PromptError("critique text is empty");
  Conversation out = critique_;
  out.messages.push_back({Role::assistant, std::string(critique)});
  out.messages.push_back({Role::user, rewrite_request_});
  return out;
}

PromptForge::PromptForge(PromptTemplates templates, RenderOptions options)
    : templates_(std::move(templates)), options_(options) {
  templates_.validate();
}

std::string PromptForge::render_first_instruction(std::span<const HistoryEntry> prefix,
                                                  const Item& request_item) const {
  const std::string range =
      "from 1 (oldest) to " + std::to_string(prefix.size()) + " (latest)";
  const std::string history = render_history(prefix, options_);
  const std::string target = render_item(request_item, options_);
  return substitute(templates_.first_instruction,
                    {{"index_range", range}, {"history", history}, {"target_item", target}});
}

std::string PromptForge::render_acceptance(const Item& next_item) const {
  const std::string target = render_item(next_item, options_);
  return substitute(templates_.acceptance, {{"target_item", target}});
}

const Item& PromptForge::item_at(const EvalInstance& instance, std::size_t index) const {
  return index <= instance.n() ? instance.history.entries[index - 1].item
                               : instance.target_item;
}

Conversation PromptForge::build_baseline(const EvalInstance& instance) const {
  Conversation c;
  c.messages.push_back(
      {Role::user, render_first_instruction(instance.history.entries, instance.target_item)});
  return c;
}

Conversation PromptForge::build_until(const EvalInstance& instance, std::size_t turns,
                                      const NegativeMap& negatives,
                                      std::size_t request_index) const {
  const std::size_t n = instance.n();
  if (turns >= n) {
    throw PromptError("turns must be below the history length (" +
                      std::to_string(turns) + " >= " + std::to_string(n) + ")");
  }
  const std::size_t in_instruction = n - turns;
  if (request_index <= in_instruction || request_index > n + 1) {
    throw PromptError("request index outside the conversational turns");
  }
  const auto& entries = instance.history.entries;
  Conversation c;
  c.messages.push_back(
      {Role::user,
       render_first_instruction(std::span(entries).first(in_instruction),
                                item_at(instance, in_instruction + 1))});
  for (std::size_t k = in_instruction + 1; k < request_index; ++k) {
    if (auto it = negatives.find(k); it != negatives.end()) {
      c.messages.push_back({Role::assistant, it->second});
      c.messages.push_back({Role::user, templates_.rejection});
    }
    c.messages.push_back({Role::assistant, entries[k - 1].review.text});
    c.messages.push_back({Role::user, render_acceptance(item_at(instance, k + 1))});
  }
  return c;
}

Conversation PromptForge::build_scp(const EvalInstance& instance, std::size_t turns) const {
  return build_until(instance, turns, {}, instance.n() + 1);
}

Conversation PromptForge::build_ccp(const EvalInstance& instance, std::size_t turns,
                                    std::size_t negative_count,
                                    const NegativeMap& negatives) const {
  const std::size_t n = instance.n();
  if (turns >= n) throw PromptError("turns must be below the history length");
  if (negative_count > turns) throw PromptError("more negatives than turns");
  if (negatives.size() != negative_count) {
    throw PromptError("expected " + std::to_string(negative_count) + " negatives, got " +
                      std::to_string(negatives.size()));
  }
  for (const auto& [k, text] : negatives) {
    if (k + negative_count <= n || k > n) {
      throw PromptError("negative for turn " + std::to_string(k) +
                        " is outside the most recent " + std::to_string(negative_count) +
                        " turns");
    }
    if (text.empty()) throw PromptError("negative review is empty");
    if (text == instance.history.entries[k - 1].review.text) {
      throw PromptError("negative for turn " + std::to_string(k) +
                        " equals the true review");
    }
  }
  return build_until(instance, turns, negatives, n + 1);
}

SelfRefine PromptForge::build_self_refine(const Conversation& base,
                                          std::string_view generated) const {
  require_request(base);
  if (generated.empty()) throw PromptError("generated review is empty");
  Conversation critique = base;
  critique.messages.push_back({Role::assistant, std::string(generated)});
  critique.messages.push_back({Role::user, templates_.refine_critique});
  return SelfRefine(std::move(critique), templates_.refine_request);
}

}  // namespace convprompt

namespace convprompt {

void PromptPlan::validate(std::size_t n) const {
  if (turns >= n) {
    throw PromptError("turns (" + std::to_string(turns) + ") must be below n (" +
                      std::to_string(n) + ")");
  }
  if (negatives > turns) throw PromptError("negatives cannot exceed turns");
  switch (method) {
    case PromptMethod::baseline:
      if (turns != 0 || negatives != 0 || negative_kind != NegativeKind::none) {
        throw PromptError("Baseline takes no turns or negatives");
      }
      break;
    case PromptMethod::scp:
      if (negatives != 0 || negative_kind != NegativeKind::none) {
        throw PromptError("SCP takes no negatives");
      }
      break;
    case PromptMethod::ccp:
      if (negative_kind == NegativeKind::none) throw PromptError("CCP needs a negative source");
      if (negatives == 0) throw PromptError("CCP needs at least one negative");
      break;
  }
}

std::string PromptPlan::name() const {
  std::string base;
  switch (method) {
    case PromptMethod::baseline:
      return self_refine ? "Self-Refine" : "Baseline";
    case PromptMethod::scp:
      base = "SCP";
      break;
    case PromptMethod::ccp:
      switch (negative_kind) {
        case NegativeKind::high_semantic: base = "CCP(B)"; break;
        case NegativeKind::high_lexical: base = "CCP(R)"; break;
        case NegativeKind::low_semantic: base = "CCP(B)-"; break;
        case NegativeKind::low_lexical: base = "CCP(R)-"; break;
        case NegativeKind::generated: base = "CCP(G)"; break;
        case NegativeKind::none: base = "CCP"; break;
      }
      break;
  }
  return self_refine ? base + "+SR" : base;
}

PromptPlan PromptPlan::parse(std::string_view name, std::size_t n,
                             std::optional<std::size_t> turns,
                             std::optional<std::size_t> negatives) {
  if (n == 0) throw PromptError("n must be positive");
  PromptPlan plan;
  std::string_view core = name;
  if (core == "Self-Refine") {
    core = "Baseline";
    plan.self_refine = true;
  } else if (core.size() > 3 && core.substr(core.size() - 3) == "+SR") {
    core.remove_suffix(3);
    plan.self_refine = true;
  }
  static const std::map<std::string_view, NegativeKind> kinds = {
      {"CCP(B)", NegativeKind::high_semantic}, {"CCP(R)", NegativeKind::high_lexical},
      {"CCP(B)-", NegativeKind::low_semantic}, {"CCP(R)-", NegativeKind::low_lexical},
      {"CCP(G)", NegativeKind::generated}};
  if (core == "Baseline") {
    plan.method = PromptMethod::baseline;
    if (turns.value_or(0) != 0 || negatives.value_or(0) != 0) {
      throw PromptError("Baseline takes no turns or negatives");
    }
  } else if (core == "SCP") {
    plan.method = PromptMethod::scp;
    plan.turns = turns.value_or(n - 1);
    plan.negatives = negatives.value_or(0);
  } else if (auto it = kinds.find(core); it != kinds.end()) {
    plan.method = PromptMethod::ccp;
    plan.negative_kind = it->second;
    plan.turns = turns.value_or(n - 1);
    plan.negatives = negatives.value_or(plan.turns);
  } else {
    throw PromptError("unknown prompt method: " + std::string(name));
  }
  plan.validate(n);
  return plan;
}

}  // namespace convprompt
