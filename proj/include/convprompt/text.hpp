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
#include <string>
#include <string_view>
#include <vector>

namespace convprompt {

/// Unicode NFKC normalization of a UTF-8 string. Invalid UTF-8 sequences are
/// replaced with U+FFFD.
std::string nfkc_normalize(std::string_view text);

/// Number of whitespace-delimited tokens after NFKC normalization.
std::size_t whitespace_token_count(std::string_view text);

/// Replaces every `<...>` tag with a single space. Text without tags is
/// returned unchanged.
std::string strip_html_tags(std::string_view text);

/// Truncates to at most `max_code_points` code points without splitting a
/// UTF-8 sequence.
std::string truncate_utf8(std::string_view text, std::size_t max_code_points);

std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace convprompt
