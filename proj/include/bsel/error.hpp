// Copyright 2026 The bsel Authors.
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

#ifndef BSEL_ERROR_HPP_
#define BSEL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace bsel {

enum class ErrorCode {
  NotPositiveDefinite,
  DimensionMismatch,
  ShapeMismatch,
  IndexOutOfRange,
  InvalidDimensions,
  InvalidHyperparameter,
  EmptyBatch,
  MissingExample,
  ParseError,
  LabelOutOfRange,
  InvalidRate,
  InsufficientClassCount,
  BatchTooSmall,
  ConfigError,
  CorruptCheckpoint,
  VersionMismatch,
  MismatchedTargets,
  GridTooCoarse,
  BoundViolation,
  DimensionLimit,
  IoError,
};

const char* to_string(ErrorCode code);

/// Failure category, used by the C API and the CLI to pick an exit code.
enum class ErrorCategory { Config, Data, Numerical, Oracle };

ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bsel

#endif  // BSEL_ERROR_HPP_
