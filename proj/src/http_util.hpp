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

#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace convprompt::detail {

struct HttpResponse {
  int status = 0;
  std::string body;
};

struct HttpResult {
  std::optional<HttpResponse> response;  // empty on transport failure
  std::string transport_error;
};

/// Splits "scheme://host[:port][/base]" into ("scheme://host[:port]", "/base").
std::pair<std::string, std::string> split_url(const std::string& url);

HttpResult post_json(const std::string& url, const std::string& body,
                     const std::vector<std::pair<std::string, std::string>>& headers,
                     std::chrono::duration<double> timeout);

}  // namespace convprompt::detail
