//
// Copyright 2026 The pate-asr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef PATE_ASR_ERROR_HPP_
#define PATE_ASR_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace pate_asr {

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidWeights,
  kInvalidOrder,
  kInvalidScale,
  kGridMismatch,
  kInvalidDelta,
  kNoConvergence,
  kInsufficientMass,
  kInvalidRange,
  kTooFewSpeakers,
  kEmptyReference,
  kInfeasibleAlignment,
  kDivergenceDetected,
  kEmptySubset,
  kBudgetExceeded,
  kBudgetExhaustedBeforeOneEpoch,
  kInfeasibleTarget,
  kZeroVector,
  kInvalidArgument,
  kIoError,
  kFormatError,
};

constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidWeights: return "InvalidWeights";
    case ErrorCode::kInvalidOrder: return "InvalidOrder";
    case ErrorCode::kInvalidScale: return "InvalidScale";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kInvalidDelta: return "InvalidDelta";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kInsufficientMass: return "InsufficientMass";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kTooFewSpeakers: return "TooFewSpeakers";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kInfeasibleAlignment: return "InfeasibleAlignment";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kEmptySubset: return "EmptySubset";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kBudgetExhaustedBeforeOneEpoch:
      return "BudgetExhaustedBeforeOneEpoch";
    case ErrorCode::kInfeasibleTarget: return "InfeasibleTarget";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
  }
  return "Unknown";
}

// All library failures are reported through this exception; `code()` is the
// machine-readable part.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace pate_asr

#endif  // PATE_ASR_ERROR_HPP_
