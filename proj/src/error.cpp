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

#include "bsel/error.hpp"

namespace bsel {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidDimensions: return "InvalidDimensions";
    case ErrorCode::InvalidHyperparameter: return "InvalidHyperparameter";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::MissingExample: return "MissingExample";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::InvalidRate: return "InvalidRate";
    case ErrorCode::InsufficientClassCount: return "InsufficientClassCount";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MismatchedTargets: return "MismatchedTargets";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::BoundViolation: return "BoundViolation";
    case ErrorCode::DimensionLimit: return "DimensionLimit";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidHyperparameter:
    case ErrorCode::InvalidDimensions:
    case ErrorCode::InvalidRate:
    case ErrorCode::BatchTooSmall:
    case ErrorCode::MismatchedTargets:
      return ErrorCategory::Config;
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::EmptyBatch:
    case ErrorCode::DimensionLimit:
      return ErrorCategory::Numerical;
    case ErrorCode::GridTooCoarse:
    case ErrorCode::BoundViolation:
      return ErrorCategory::Oracle;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace bsel
