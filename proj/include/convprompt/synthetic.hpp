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
#include <cstdint>
#include <string>

#include "convprompt/corpus.hpp"

namespace convprompt {

struct SyntheticOptions {
  std::size_t users = 40;
  std::size_t items = 24;
  std::size_t reviews_per_user = 8;
  std::uint64_t seed = 1;
};

/// Small deterministic review corpus for tests and offline demos. Every user
/// has a recurring set of signature phrases and a sentiment leaning, so
/// personalized generation has something to pick up. Review lengths sit well
/// inside the default 20-300 token window.
Corpus synthetic_corpus(const SyntheticOptions& options = {});

}  // namespace convprompt
