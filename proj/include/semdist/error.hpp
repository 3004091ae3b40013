// Copyright 2026 The semdist-eval Authors.
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

#ifndef SEMDIST_ERROR_HPP_
#define SEMDIST_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace semdist {

enum class ErrorKind {
  kConfig,
  kEmptyReference,
  kEmptySentence,
  kNotFound,
  kTransport,
  kBadDimension,
  kDimensionMismatch,
  kZeroVector,
  kParse,
  kDuplicateId,
  kConstraintViolation,
  kIo,
  kZeroVariance,
  kLengthMismatch,
  kInsufficientData,
  kRankDeficient,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "Config";
    case ErrorKind::kEmptyReference: return "EmptyReference";
    case ErrorKind::kEmptySentence: return "EmptySentence";
    case ErrorKind::kNotFound: return "NotFound";
    case ErrorKind::kTransport: return "Transport";
    case ErrorKind::kBadDimension: return "BadDimension";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kZeroVector: return "ZeroVector";
    case ErrorKind::kParse: return "Parse";
    case ErrorKind::kDuplicateId: return "DuplicateId";
    case ErrorKind::kConstraintViolation: return "ConstraintViolation";
    case ErrorKind::kIo: return "Io";
    case ErrorKind::kZeroVariance: return "ZeroVariance";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kRankDeficient: return "RankDeficient";
  }
  return "Unknown";
}

/// Every failure raised by the library. The kind is the contract; the
/// message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by batch embedding; carries the position of the first failing
/// sentence.
class BatchError : public Error {
 public:
  BatchError(ErrorKind kind, std::size_t index, const std::string &message)
      : Error(kind, "sentence #" + std::to_string(index) + ": " + message),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace semdist

#endif  // SEMDIST_ERROR_HPP_
