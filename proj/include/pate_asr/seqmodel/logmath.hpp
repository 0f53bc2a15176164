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

#ifndef PATE_ASR_SEQMODEL_LOGMATH_HPP_
#define PATE_ASR_SEQMODEL_LOGMATH_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "pate_asr/matrix.hpp"

namespace pate_asr {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double LogAdd(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double LogSumExp(std::span<const double> x) {
  double m = kLogZero;
  for (double v : x) m = std::max(m, v);
  if (m == kLogZero) return kLogZero;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

inline void LogSoftmaxInPlace(std::span<double> x) {
  const double lse = LogSumExp(x);
  for (double& v : x) v -= lse;
}

inline Matrix LogSoftmaxRows(const Matrix& logits) {
  Matrix out = logits;
  for (size_t r = 0; r < out.rows(); ++r) LogSoftmaxInPlace(out.row(r));
  return out;
}

inline Matrix ExpMatrix(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = std::exp(v);
  return out;
}

inline Matrix LogMatrix(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = v > 0.0 ? std::log(v) : kLogZero;
  return out;
}

// Rows non-negative and summing to one within `tol`.
inline bool IsRowStochastic(const Matrix& m, double tol = 1e-12) {
  for (size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (double v : m.row(r)) {
      if (!(v >= 0.0)) return false;
      s += v;
    }
    if (std::abs(s - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace pate_asr

#endif  // PATE_ASR_SEQMODEL_LOGMATH_HPP_
