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

#include "convprompt/synthetic.hpp"

#include <array>
#include <random>
#include <string_view>
#include <vector>

#include "convprompt/detail/random.hpp"
#include "convprompt/errors.hpp"

namespace convprompt {
namespace {

constexpr std::array<std::string_view, 24> kSignatures = {
    "honestly speaking", "a real gem", "would buy again", "not my cup of tea",
    "hits the spot", "worth every penny", "for what it is", "in my humble opinion",
    "my whole family", "right out of the box", "a keeper for sure", "as expected",
    "to be fair", "no complaints here", "brings back memories", "just my two cents",
    "day in and day out", "if you ask me", "second time around", "plain and simple",
    "at the end of the day", "through and through", "long story short", "mark my words"};

constexpr std::array<std::string_view, 7> kPositive = {
    "great", "amazing", "excellent", "wonderful", "fantastic", "perfect", "good"};

constexpr std::array<std::string_view, 2> kPositiveVerbs = {"love", "enjoy"};

constexpr std::array<std::string_view, 7> kNegative = {
    "bad", "terrible", "awful", "disappointing", "poor", "boring", "broken"};

constexpr std::array<std::string_view, 3> kNegativeEndings = {
    "I hate it", "the worst buy this year", "a waste of money"};

constexpr std::array<std::string_view, 12> kNouns = {
    "album", "novel", "blender", "headset", "puzzle", "kettle",
    "camera", "jacket", "lamp", "speaker", "notebook", "backpack"};

constexpr std::array<std::string_view, 12> kAdjectives = {
    "classic", "deluxe", "compact", "vintage", "modern", "portable",
    "limited", "premium", "basic", "expanded", "rugged", "quiet"};

constexpr std::array<std::string_view, 8> kCategories = {
    "Music", "Books", "Kitchen", "Electronics", "Toys", "Sports", "Home", "Outdoors"};

constexpr std::array<std::string_view, 32> kFiller = {
    "the", "quality", "price", "delivery", "design", "sound", "feel", "weight",
    "color", "size", "story", "value", "packaging", "battery", "finish", "detail",
    "really", "quite", "very", "overall", "still", "also", "again", "today",
    "week", "month", "gift", "daily", "use", "time", "shipping", "experience"};

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& bank, std::mt19937_64& rng) {
  return bank[detail::draw_below(rng, N)];
}

}  // namespace

Corpus synthetic_corpus(const SyntheticOptions& options) {
  if (options.reviews_per_user > options.items) {
    throw CorpusError("reviews_per_user cannot exceed the number of items");
  }
  std::mt19937_64 rng(options.seed);
  Corpus corpus;

  std::vector<std::vector<std::string>> item_topics(options.items);
  std::vector<std::string> item_ids;
  for (std::size_t i = 0; i < options.items; ++i) {
    Item item;
    item.item_id = "I" + std::to_string(1000 + i);
    const auto adj = pick(kAdjectives, rng);
    const auto noun = kNouns[i % kNouns.size()];
    item.title = "The " + std::string(adj) + " " + std::string(noun) + " " +
                 std::to_string(i + 1);
    item.category = std::string(kCategories[i % kCategories.size()]);
    for (int t = 0; t < 3; ++t) item_topics[i].emplace_back(pick(kFiller, rng));
    item.description = "A " + std::string(adj) + " " + std::string(noun) +
                       " featuring " + item_topics[i][0] + " and " + item_topics[i][1] + ".";
    item_topics[i].emplace_back(noun);
    item_ids.push_back(item.item_id);
    corpus.items.emplace(item.item_id, std::move(item));
  }

  for (std::size_t u = 0; u < options.users; ++u) {
    const std::string user_id = "U" + std::to_string(100 + u);
    std::array<std::string_view, 3> signature{};
    for (auto& s : signature) s = pick(kSignatures, rng);
    // 0 = positive leaning, 1 = negative leaning, 2 = mixed.
    const auto roll = detail::draw_below(rng, 10);
    const int leaning = roll < 6 ? 0 : roll < 9 ? 1 : 2;
    const std::size_t verbosity = 22 + detail::draw_below(rng, 30);

    std::vector<std::size_t> order(options.items);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < options.reviews_per_user; ++i) {
      std::swap(order[i], order[i + detail::draw_below(rng, order.size() - i)]);
    }

    for (std::size_t k = 0; k < options.reviews_per_user; ++k) {
      const std::size_t item_index = order[k];
      const auto& topics = item_topics[item_index];
      int tone = leaning;
      if (leaning == 2) tone = static_cast<int>(detail::draw_below(rng, 3));
      std::string text(signature[k % 3]);
      text += ", this " + topics.back() + " is ";
      if (tone == 0) {
        text += std::string(pick(kPositive, rng)) + " and I " +
                std::string(pick(kPositiveVerbs, rng)) + " it.";
      } else if (tone == 1) {
        text += std::string(pick(kNegative, rng)) + ", frankly " +
                std::string(pick(kNegativeEndings, rng)) + ".";
      } else {
        text += "okay, nothing more and nothing less.";
      }
      text += " The " + topics[0] + " and the " + topics[1] + " stand out.";
      std::size_t words = 0;
      for (char c : text) words += c == ' ';
      while (words + 1 < verbosity) {
        text += " " + std::string(pick(kFiller, rng));
        ++words;
      }
      text += ". " + std::string(signature[(k + 1) % 3]) + ".";

      Review r;
      r.user_id = user_id;
      r.item_id = item_ids[item_index];
      r.text = std::move(text);
      r.rating = tone == 0 ? 5 : tone == 1 ? 1 : 3;
      r.timestamp = 1600000000 + static_cast<std::int64_t>(u) * 100000 +
                    static_cast<std::int64_t>(k) * 3600;
      corpus.reviews.push_back(std::move(r));
    }
  }
  return corpus;
}

}  // namespace convprompt
