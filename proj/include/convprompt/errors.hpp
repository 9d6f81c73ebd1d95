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

#include <stdexcept>
#include <string>

namespace convprompt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

/// A reference pool fell below the minimum size the corpus filter guarantees.
class PoolTooSmallError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};

class PromptError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class StatsError : public Error {
 public:
  using Error::Error;
};

/// All differences in a paired test were zero.
class DegenerateSampleError : public StatsError {
 public:
  using StatsError::StatsError;
};

// Chat backend failures. Transient ones are retried by the gateway.
class LlmError : public Error {
 public:
  using Error::Error;
};

class AuthError : public LlmError {
 public:
  using LlmError::LlmError;
};

class TransientError : public LlmError {
 public:
  using LlmError::LlmError;
};

class RateLimitError : public TransientError {
 public:
  using TransientError::TransientError;
};

class ProtocolError : public LlmError {
 public:
  using LlmError::LlmError;
};

class NegativeCollisionError : public LlmError {
 public:
  using LlmError::LlmError;
};

// Scoring / classification sidecar failures.
class ScorerError : public Error {
 public:
  using Error::Error;
};

class SidecarUnavailableError : public ScorerError {
 public:
  using ScorerError::ScorerError;
};

}  // namespace convprompt
