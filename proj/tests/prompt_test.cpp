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

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "convprompt/errors.hpp"
#include "fixtures.hpp"

namespace convprompt {
namespace {

using testing::make_instance;

const char* const kRejection =
    "Absolutely different! That's not how I would answer. Please think it over carefully and "
    "generate a review for the target item that I might actually write.";

const char* const kAcceptanceHead =
    "Excellent! It really feels like something I would write. Now, I will provide the next "
    "product. Please generate a review that I might write in the same way.\n## Target item \n";

TEST(PythonRepr, MatchesPython) {
  EXPECT_EQ(python_repr("plain"), "'plain'");
  EXPECT_EQ(python_repr("it's"), "\"it's\"");
  EXPECT_EQ(python_repr("say \"hi\""), "'say \"hi\"'");
  EXPECT_EQ(python_repr("both ' and \""), "'both \\' and \"'");
  EXPECT_EQ(python_repr("back\\slash"), "'back\\\\slash'");
  EXPECT_EQ(python_repr("tab\there"), "'tab\\there'");
  EXPECT_EQ(python_repr("nl\nx"), "'nl\\nx'");
  EXPECT_EQ(python_repr("\x01\x7f"), "'\\x01\\x7f'");
  EXPECT_EQ(python_repr("\xc2\x85\xc2\xa0\xc2\xad"), "'\\x85\\xa0\\xad'");
  EXPECT_EQ(python_repr("\xe2\x80\xa8\xe2\x80\xa9"), "'\\u2028\\u2029'");
  EXPECT_EQ(python_repr("caf\xc3\xa9 \xe6\x97\xa5\xe6\x9c\xac"),
            "'caf\xc3\xa9 \xe6\x97\xa5\xe6\x9c\xac'");
  EXPECT_EQ(python_repr(""), "''");
}

TEST(RenderItem, KeyOrderAndQuoting) {
  const Item item{"X1", "Angels And Alcohol", "Country, Today's Country", "An album."};
  EXPECT_EQ(render_item(item),
            "{'title': 'Angels And Alcohol', 'category': \"Country, Today's Country\", "
            "'description': 'An album.'}");
}

TEST(RenderItem, DescriptionLimit) {
  const Item item{"X1", "t", "c", "abcdefgh"};
  EXPECT_EQ(render_item(item, {.description_limit = 3}),
            "{'title': 't', 'category': 'c', 'description': 'abc'}");
}

TEST(RenderHistory, NumberedBlock) {
  const auto inst = make_instance(2);
  EXPECT_EQ(render_history(inst.history.entries),
            "{\n"
            "    1: {\n"
            "        'itemInfo': {'title': 'Item 1', 'category': 'Music', 'description': "
            "'Description of item 1.'},\n"
            "        'review': 'review 1 by U1'\n"
            "    }, \n"
            "    2: {\n"
            "        'itemInfo': {'title': 'Item 2', 'category': 'Music', 'description': "
            "'Description of item 2.'},\n"
            "        'review': 'review 2 by U1'\n"
            "    }\n"
            "}");
  EXPECT_EQ(render_history({}), "{\n}");
}

TEST(FirstInstruction, IndexRangeFollowsPrefix) {
  const auto inst = make_instance(5);
  PromptForge forge;
  const std::span<const HistoryEntry> all(inst.history.entries);
  const auto four = forge.render_first_instruction(all.first(4), inst.history.entries[4].item);
  EXPECT_NE(four.find("from 1 (oldest) to 4 (latest)"), std::string::npos);
  EXPECT_NE(four.find("    4: {"), std::string::npos);
  EXPECT_EQ(four.find("    5: {"), std::string::npos);
  const auto five = forge.render_first_instruction(all, inst.target_item);
  EXPECT_NE(five.find("from 1 (oldest) to 5 (latest)"), std::string::npos);
  EXPECT_NE(five.find("## Target item\n{'title': 'Item 6'"), std::string::npos);
  EXPECT_NE(five.find("Your response should only be the generated review. Do not include any "
                      "irrelevant information."),
            std::string::npos);
  EXPECT_EQ(five.find("{index_range}"), std::string::npos);
  EXPECT_EQ(five.find("{history}"), std::string::npos);
  EXPECT_EQ(five.find("{target_item}"), std::string::npos);
}

TEST(FirstInstruction, EmptyPrefix) {
  const auto inst = make_instance(1);
  PromptForge forge;
  const auto text = forge.render_first_instruction({}, inst.target_item);
  EXPECT_NE(text.find("## Item history\n{\n}\n"), std::string::npos);
  EXPECT_NE(text.find("## Target item\n{'title': 'Item 2'"), std::string::npos);
}

TEST(FirstInstruction, PlaceholdersInsideDataAreNotExpanded) {
  auto inst = make_instance(1);
  inst.history.entries[0].review.text = "I typed {target_item} here";
  PromptForge forge;
  const auto text = forge.render_first_instruction(inst.history.entries, inst.target_item);
  EXPECT_NE(text.find("'I typed {target_item} here'"), std::string::npos);
}

// Reference CCP conversation: four items in the instruction, one turn
// with a rejected review by another user, then the request for the target.
EvalInstance reference_instance() {
  EvalInstance inst;
  inst.id = "A1";
  inst.history.user_id = "A1";
  auto add = [&](Item item, std::string review) {
    Review r{"A1", item.item_id, std::move(review), 5,
             static_cast<std::int64_t>(inst.history.entries.size())};
    inst.history.entries.push_back({std::move(item), std::move(r)});
  };
  add({"p1", "Angels And Alcohol", "Country, Today's Country",
       "Alan Jackson's 15th studio album This year marks \"more\""},
      "Alan Jackson is one of my favorite country stars.  His voice is really nice and his "
      "songs are good.");
  add({"p2", "Second", "Pop", "Plain."}, "Second review.");
  add({"p3", "Third", "Pop", "Plain."}, "Third review.");
  add({"p4", "Cheek to Cheek", "Universal Music Group",
       "Deluxe edition includes three bonus tracks. It's great"},
      "This is a very good album.  Both of them have amazing voices and they sound very good "
      "together.");
  add({"p5", "Son Of Schmilsson Expanded Edition", "Pop, Singer-Songwriters",
       "Son followed in the footsteps of it's predecessor"},
      "Harry Nilsson has an amazing voice and his songs are very entertaining.  I love "
      "listening to him.");
  inst.target_item = {"p6", "The Very Best Of The Moody Blues",
                      "Rock, Progressive, Progressive Rock",
                      "Product Description, This collection featuring hits from all phases of "
                      "the Moody's career contains \"hits\""};
  inst.target_review = {"A1", "p6", "Truth.", 5, 9};
  return inst;
}

TEST(Golden, ContrastiveConversation) {
  const EvalInstance inst = reference_instance();
  PromptForge forge;
  const std::string negative =
      "If you are a Nilsson fan and you don't own this album, I highly recommend it.";
  const Conversation conv = forge.build_ccp(inst, 1, 1, {{5, negative}});
  ASSERT_EQ(conv.size(), 5u);

  const std::string first =
      "You are an AI assistant. As an AI assistant, I want you to impersonate me. I will "
      "provide you with product information, and I would like you to generate a review that I "
      "might write.\n"
      "    \n"
      "# My Information\n"
      "Here is my previous item information. The items are listed in chronological order from 1 "
      "(oldest) to 4 (latest).\n"
      "## Item history\n"
      "{\n"
      "    1: {\n"
      "        'itemInfo': {'title': 'Angels And Alcohol', 'category': \"Country, Today's "
      "Country\", 'description': 'Alan Jackson\\'s 15th studio album This year marks "
      "\"more\"'},\n"
      "        'review': 'Alan Jackson is one of my favorite country stars.  His voice is really "
      "nice and his songs are good.'\n"
      "    }, \n"
      "    2: {\n"
      "        'itemInfo': {'title': 'Second', 'category': 'Pop', 'description': 'Plain.'},\n"
      "        'review': 'Second review.'\n"
      "    }, \n"
      "    3: {\n"
      "        'itemInfo': {'title': 'Third', 'category': 'Pop', 'description': 'Plain.'},\n"
      "        'review': 'Third review.'\n"
      "    }, \n"
      "    4: {\n"
      "        'itemInfo': {'title': 'Cheek to Cheek', 'category': 'Universal Music Group', "
      "'description': \"Deluxe edition includes three bonus tracks. It's great\"},\n"
      "        'review': 'This is a very good album.  Both of them have amazing voices and they "
      "sound very good together.'\n"
      "    }\n"
      "}\n"
      "\n"
      "# Task\n"
      "Please predict the impressions I might have and generate a review for the target item.\n"
      "## Target item\n"
      "{'title': 'Son Of Schmilsson Expanded Edition', 'category': 'Pop, Singer-Songwriters', "
      "'description': \"Son followed in the footsteps of it's predecessor\"}\n"
      "\n"
      "## Output format\n"
      "Your response should only be the generated review. Do not include any irrelevant "
      "information.";
  const std::string acceptance =
      std::string(kAcceptanceHead) +
      "{'title': 'The Very Best Of The Moody Blues', 'category': 'Rock, Progressive, "
      "Progressive Rock', 'description': 'Product Description, This collection featuring hits "
      "from all phases of the Moody\\'s career contains \"hits\"'}";

  const std::vector<Message> expected = {
      {Role::user, first},
      {Role::assistant, negative},
      {Role::user, kRejection},
      {Role::assistant,
       "Harry Nilsson has an amazing voice and his songs are very entertaining.  I love "
       "listening to him."},
      {Role::user, acceptance},
  };
  ASSERT_EQ(conv.messages.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(conv.messages[i].role, expected[i].role) << "message " << i;
    EXPECT_EQ(conv.messages[i].content, expected[i].content) << "message " << i;
  }
}

TEST(Baseline, SingleUserMessage) {
  PromptForge forge;
  const auto five = forge.build_baseline(make_instance(5));
  ASSERT_EQ(five.size(), 1u);
  EXPECT_EQ(five.messages[0].role, Role::user);
  const auto two = forge.build_baseline(make_instance(2));
  EXPECT_NE(two.messages[0].content.find("'review 1 by U1'"), std::string::npos);
  EXPECT_NE(two.messages[0].content.find("'review 2 by U1'"), std::string::npos);
  EXPECT_TRUE(is_request(two));
}

TEST(Scp, ZeroTurnsIsBaseline) {
  PromptForge forge;
  for (std::size_t n : {1u, 2u, 5u, 10u}) {
    const auto inst = make_instance(n);
    EXPECT_EQ(forge.build_scp(inst, 0), forge.build_baseline(inst));
  }
}

TEST(Scp, FourTurns) {
  PromptForge forge;
  const auto inst = make_instance(5);
  const auto conv = forge.build_scp(inst, 4);
  ASSERT_EQ(conv.size(), 9u);
  EXPECT_NE(conv.messages[0].content.find("from 1 (oldest) to 1 (latest)"), std::string::npos);
  EXPECT_NE(conv.messages[0].content.find("## Target item\n{'title': 'Item 2'"),
            std::string::npos);
  for (std::size_t k = 2; k <= 5; ++k) {
    EXPECT_EQ(conv.messages[2 * (k - 1) - 1].content, "review " + std::to_string(k) + " by U1");
  }
  EXPECT_EQ(conv.messages.back().content,
            std::string(kAcceptanceHead) + render_item(inst.target_item));
}

TEST(Scp, TwoReviewsOneTurn) {
  PromptForge forge;
  const auto inst = make_instance(2);
  const auto conv = forge.build_scp(inst, 1);
  ASSERT_EQ(conv.size(), 3u);
  EXPECT_EQ(conv.messages[0].content,
            forge.render_first_instruction(std::span(inst.history.entries).first(1),
                                           inst.history.entries[1].item));
  EXPECT_EQ(conv.messages[1].content, "review 2 by U1");
  EXPECT_EQ(conv.messages[2].content, forge.render_acceptance(inst.target_item));
}

TEST(Scp, TurnsOutOfRange) {
  PromptForge forge;
  EXPECT_THROW(forge.build_scp(make_instance(5), 5), PromptError);
}

NegativeMap negatives_for(std::size_t n, std::size_t m) {
  NegativeMap out;
  for (std::size_t k = n - m + 1; k <= n; ++k) out[k] = "negative for " + std::to_string(k);
  return out;
}

TEST(Ccp, MessageCountLaw) {
  PromptForge forge;
  const auto inst = make_instance(5);
  for (std::size_t l = 1; l <= 4; ++l) {
    for (std::size_t m = 0; m <= l; ++m) {
      const auto conv = forge.build_ccp(inst, l, m, negatives_for(5, m));
      EXPECT_EQ(conv.size(), 1 + 2 * l + 2 * m) << "l=" << l << " m=" << m;
      EXPECT_TRUE(is_request(conv));
    }
  }
  EXPECT_EQ(forge.build_ccp(inst, 4, 4, negatives_for(5, 4)).size(), 17u);
}

TEST(Ccp, SingleNegativeSitsOnFinalTurn) {
  PromptForge forge;
  const auto conv = forge.build_ccp(make_instance(5), 4, 1, negatives_for(5, 1));
  ASSERT_EQ(conv.size(), 11u);
  EXPECT_EQ(conv.messages[7].content, "negative for 5");
  EXPECT_EQ(conv.messages[8].content, kRejection);
  EXPECT_EQ(conv.messages[9].content, "review 5 by U1");
  EXPECT_EQ(conv.messages[1].content, "review 2 by U1");
}

TEST(Ccp, RejectsBadNegatives) {
  PromptForge forge;
  const auto inst = make_instance(5);
  EXPECT_THROW(forge.build_ccp(inst, 2, 1, {{5, "review 5 by U1"}}), PromptError);
  EXPECT_THROW(forge.build_ccp(inst, 2, 1, {{4, "wrong turn"}}), PromptError);
  EXPECT_THROW(forge.build_ccp(inst, 2, 2, {{5, "only one"}}), PromptError);
  EXPECT_THROW(forge.build_ccp(inst, 2, 3, negatives_for(5, 3)), PromptError);
  EXPECT_THROW(forge.build_ccp(inst, 5, 1, negatives_for(5, 1)), PromptError);
  EXPECT_THROW(forge.build_ccp(inst, 2, 1, {{5, ""}}), PromptError);
}

TEST(PromptProperty, StructuralInvariants) {
  PromptForge forge;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const std::size_t l = rng() % n;
    const std::size_t m = l == 0 ? 0 : rng() % (l + 1);
    const auto inst = make_instance(n, "U" + std::to_string(trial));
    const auto negs = negatives_for(n, m);
    const auto conv = forge.build_ccp(inst, l, m, negs);

    ASSERT_TRUE(alternates(conv));
    ASSERT_TRUE(is_request(conv));
    EXPECT_EQ(conv, forge.build_ccp(inst, l, m, negs));

    // Every history review appears exactly once as a true review.
    for (const auto& e : inst.history.entries) {
      const std::string& text = e.review.text;
      const std::string quoted = python_repr(text);
      std::size_t count = 0;
      for (std::size_t i = 0; i < conv.size(); ++i) {
        const auto& msg = conv.messages[i];
        if (msg.role == Role::assistant && msg.content == text) ++count;
        if (i == 0) {
          for (auto pos = msg.content.find(quoted); pos != std::string::npos;
               pos = msg.content.find(quoted, pos + 1)) {
            ++count;
          }
        }
      }
      EXPECT_EQ(count, 1u) << text;
    }

    // Rejections sit between a negative and that turn's true review.
    for (std::size_t i = 0; i < conv.size(); ++i) {
      if (conv.messages[i].content != kRejection) continue;
      ASSERT_GE(i, 1u);
      ASSERT_LT(i + 1, conv.size());
      const std::string& before = conv.messages[i - 1].content;
      ASSERT_EQ(before.rfind("negative for ", 0), 0u);
      const std::string k = before.substr(13);
      EXPECT_EQ(conv.messages[i + 1].content, "review " + k + " by " + inst.id);
    }
  }
}

TEST(SelfRefine, CritiqueAndRewrite) {
  PromptForge forge;
  const auto base = forge.build_baseline(make_instance(3));
  const auto refine = forge.build_self_refine(base, "generated text");
  const auto& critique = refine.critique_conversation();
  ASSERT_EQ(critique.size(), 3u);
  EXPECT_EQ(critique.messages[1], (Message{Role::assistant, "generated text"}));
  EXPECT_EQ(critique.messages[2].content,
            "Thank you! However, could you please critically review the created review from "
            "the perspective of whether it reflects the user's past review style and way of "
            "thinking, and suggest how it could be improved further?");
  const auto rewrite = refine.rewrite("my critique");
  ASSERT_EQ(rewrite.size(), 5u);
  EXPECT_EQ(rewrite.messages[3], (Message{Role::assistant, "my critique"}));
  EXPECT_EQ(rewrite.messages[4].content,
            "OK. Then, taking your critique into account, please rewrite the review. Remember, "
            "your response should be only the generated review; do not include any irrelevant "
            "information.");
  EXPECT_TRUE(is_request(critique));
  EXPECT_TRUE(is_request(rewrite));
}

TEST(SelfRefine, Preconditions) {
  PromptForge forge;
  const auto base = forge.build_baseline(make_instance(3));
  EXPECT_THROW(forge.build_self_refine(base, ""), PromptError);
  Conversation not_request = base;
  not_request.messages.push_back({Role::assistant, "x"});
  EXPECT_THROW(forge.build_self_refine(not_request, "y"), PromptError);
  const auto refine = forge.build_self_refine(base, "y");
  EXPECT_THROW(refine.rewrite(""), PromptError);
}

TEST(Conversation, RequestChecks) {
  EXPECT_FALSE(is_request(Conversation{}));
  EXPECT_FALSE(is_request(Conversation{{{Role::assistant, "a"}}}));
  EXPECT_FALSE(is_request(Conversation{{{Role::user, "a"}, {Role::user, "b"}}}));
  EXPECT_FALSE(is_request(Conversation{{{Role::user, ""}}}));
  EXPECT_TRUE(is_request(Conversation{{{Role::user, "a"}, {Role::assistant, "b"}, {Role::user, "c"}}}));
  EXPECT_THROW(require_request(Conversation{{{Role::user, "a"}, {Role::assistant, "b"}}}),
               PromptError);
}

TEST(Templates, ShippedFilesMatchDefaults) {
  const auto loaded = PromptTemplates::load(std::string(CONVPROMPT_SOURCE_DIR) + "/config/templates");
  const auto defaults = PromptTemplates::defaults();
  EXPECT_EQ(loaded.first_instruction, defaults.first_instruction);
  EXPECT_EQ(loaded.acceptance, defaults.acceptance);
  EXPECT_EQ(loaded.rejection, defaults.rejection);
  EXPECT_EQ(loaded.refine_critique, defaults.refine_critique);
  EXPECT_EQ(loaded.refine_request, defaults.refine_request);
  EXPECT_EQ(defaults.rejection, kRejection);
}

TEST(Templates, OverridesAndValidation) {
  const auto dir = testing::temp_dir("templates");
  std::ofstream(dir / "rejection.txt") << "No.\n";
  std::ofstream(dir / "acceptance.txt") << "Next: {target_item}";
  const auto t = PromptTemplates::load(dir);
  EXPECT_EQ(t.rejection, "No.");
  EXPECT_EQ(t.acceptance, "Next: {target_item}");
  EXPECT_EQ(t.first_instruction, PromptTemplates::defaults().first_instruction);

  PromptForge forge(t);
  const auto conv = forge.build_ccp(make_instance(2), 1, 1, {{2, "neg"}});
  EXPECT_EQ(conv.messages[2].content, "No.");
  EXPECT_EQ(conv.messages[4].content, "Next: " + render_item(make_instance(2).target_item));

  PromptTemplates broken = PromptTemplates::defaults();
  broken.first_instruction = "no placeholders";
  EXPECT_THROW(broken.validate(), PromptError);
  std::ofstream(dir / "acceptance.txt") << "missing the item";
  EXPECT_THROW(PromptTemplates::load(dir), PromptError);
  std::filesystem::remove_all(dir);
}

TEST(PromptPlan, ParseAndName) {
  const auto ccp = PromptPlan::parse("CCP(B)", 5);
  EXPECT_EQ(ccp.method, PromptMethod::ccp);
  EXPECT_EQ(ccp.turns, 4u);
  EXPECT_EQ(ccp.negatives, 4u);
  EXPECT_EQ(ccp.negative_kind, NegativeKind::high_semantic);
  EXPECT_EQ(ccp.name(), "CCP(B)");

  const auto low = PromptPlan::parse("CCP(R)-", 5, 4, 1);
  EXPECT_EQ(low.negative_kind, NegativeKind::low_lexical);
  EXPECT_EQ(low.negatives, 1u);

  const auto sr = PromptPlan::parse("Self-Refine", 5);
  EXPECT_EQ(sr.method, PromptMethod::baseline);
  EXPECT_TRUE(sr.self_refine);
  EXPECT_EQ(sr.name(), "Self-Refine");
  EXPECT_EQ(PromptPlan::parse("SCP+SR", 5).name(), "SCP+SR");
  EXPECT_EQ(PromptPlan::parse("SCP", 3).turns, 2u);

  for (const char* name : {"Baseline", "SCP", "CCP(B)", "CCP(R)", "CCP(B)-", "CCP(R)-",
                           "CCP(G)", "CCP(G)+SR", "Self-Refine"}) {
    EXPECT_EQ(PromptPlan::parse(name, 5).name(), name);
  }
}

TEST(PromptPlan, Invariants) {
  EXPECT_THROW(PromptPlan::parse("SCP", 5, 5), PromptError);
  EXPECT_THROW(PromptPlan::parse("CCP(B)", 5, 2, 3), PromptError);
  EXPECT_THROW(PromptPlan::parse("Baseline", 5, 1), PromptError);
  EXPECT_THROW(PromptPlan::parse("CCP(X)", 5), PromptError);
  EXPECT_THROW(PromptPlan::parse("CCP(B)", 5, 2, 0), PromptError);
  EXPECT_THROW(PromptPlan::parse("SCP", 5, 2, 1), PromptError);
  EXPECT_NO_THROW(PromptPlan::parse("SCP", 5, 0));
}

}  // namespace
}  // namespace convprompt
