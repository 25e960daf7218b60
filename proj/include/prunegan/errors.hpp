// Copyright 2026 The prunegan Authors. All Rights Reserved.
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

namespace prunegan {

/// Failure categories. The CLI maps each to a distinct process exit code.
enum class ErrorCategory { Validation, Config, Data, Numeric, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Bad arguments to a library call: shapes, ranges, missing names.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorCategory::Validation, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ErrorCategory::Data, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorCategory::Numeric, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what)
      : Error(ErrorCategory::Io, what) {}
};

/// Exit codes: config=2, data=3, numeric=4, io=5. Validation errors come from
/// user-supplied values, so they share the config code.
inline int exit_code_for(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Validation:
    case ErrorCategory::Config:
      return 2;
    case ErrorCategory::Data:
      return 3;
    case ErrorCategory::Numeric:
      return 4;
    case ErrorCategory::Io:
      return 5;
  }
  return 1;
}

}  // namespace prunegan
