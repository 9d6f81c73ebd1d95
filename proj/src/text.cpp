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

#include "convprompt/text.hpp"

#include <cctype>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "convprompt/errors.hpp"

namespace convprompt {
namespace {

icu::UnicodeString normalized(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFKC normalizer unavailable");
  const auto source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString out = nfkc->normalize(source, status);
  if (U_FAILURE(status)) throw Error("NFKC normalization failed");
  return out;
}

}  // namespace

std::string nfkc_normalize(std::string_view text) {
  std::string out;
  normalized(text).toUTF8String(out);
  return out;
}

std::size_t whitespace_token_count(std::string_view text) {
  const icu::UnicodeString s = normalized(text);
  std::size_t count = 0;
  bool in_token = false;
  for (int32_t i = 0; i < s.length();) {
    const UChar32 c = s.char32At(i);
    const bool space = u_isUWhiteSpace(c);
    if (!space && !in_token) ++count;
    in_token = !space;
    i += U16_LENGTH(c);
  }
  return count;
}

std::string strip_html_tags(std::string_view text) {
  if (text.find('<') == std::string_view::npos) return std::string(text);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      const auto close = text.find('>', i + 1);
      if (close == std::string_view::npos) {
        out.append(text.substr(i));
        break;
      }
      out.push_back(' ');
      i = close + 1;
    } else {
      out.push_back(text[i++]);
    }
  }
  return out;
}

std::string truncate_utf8(std::string_view text, std::size_t max_code_points) {
  std::size_t points = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (points == max_code_points) return std::string(text.substr(0, i));
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    i += len;
    ++points;
  }
  return std::string(text);
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

}  // namespace convprompt
