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
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "convprompt/corpus.hpp"

namespace convprompt::testing {

inline Item make_item(int i) {
  return {"I" + std::to_string(i), "Item " + std::to_string(i), "Music",
          "Description of item " + std::to_string(i) + "."};
}

inline Review make_review(const std::string& user, const std::string& item, std::string text,
                          std::int64_t ts, std::optional<int> rating = 5) {
  return {user, item, std::move(text), rating, ts};
}

// Instance with history reviews "review k by U1" for k = 1..n and target n+1.
inline EvalInstance make_instance(std::size_t n, const std::string& user = "U1") {
  EvalInstance inst;
  inst.id = user;
  inst.dataset = "Fixture";
  inst.history.user_id = user;
  for (std::size_t k = 1; k <= n; ++k) {
    Item item = make_item(static_cast<int>(k));
    Review r = make_review(user, item.item_id, "review " + std::to_string(k) + " by " + user,
                           static_cast<std::int64_t>(k) * 100);
    inst.history.entries.push_back({item, r});
  }
  inst.target_item = make_item(static_cast<int>(n + 1));
  inst.target_review = make_review(user, inst.target_item.item_id,
                                   "target review by " + user,
                                   static_cast<std::int64_t>(n + 1) * 100);
  return inst;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  auto dir = std::filesystem::temp_directory_path() /
             ("convprompt_" + tag + "_" + std::to_string(rd()) + "_" +
              std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// A string of `n` distinct tokens.
inline std::string words(std::size_t n, const std::string& stem = "w") {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += stem + std::to_string(i);
  }
  return out;
}

}  // namespace convprompt::testing
