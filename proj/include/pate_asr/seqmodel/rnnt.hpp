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

#ifndef PATE_ASR_SEQMODEL_RNNT_HPP_
#define PATE_ASR_SEQMODEL_RNNT_HPP_

#include <cmath>
#include <span>
#include <vector>

#include "pate_asr/error.hpp"
#include "pate_asr/matrix.hpp"
#include "pate_asr/seqmodel/logmath.hpp"
#include "pate_asr/seqmodel/model.hpp"

namespace pate_asr {

struct RnntResult {
  double loss = 0.0;
  Lattice grad_logits;  // d loss / d joint logits
};

// Transducer loss over the (t, u) lattice: blank advances t, label y_{u+1}
// advances u, and the path ends with a blank out of (T-1, U).
inline RnntResult RnntLossFromLogProbs(const Lattice& log_probs,
                                       std::span<const int> labels, int blank) {
  const size_t T = log_probs.frames(), U = labels.size(), O = log_probs.outputs();
  Require(T >= 1, ErrorCode::kDimensionMismatch, "no frames");
  Require(log_probs.positions() == U + 1, ErrorCode::kDimensionMismatch,
          "lattice does not match label length");
  Require(blank >= 0 && static_cast<size_t>(blank) < O,
          ErrorCode::kDimensionMismatch, "blank index outside lattice");
  for (int y : labels) {
    Require(y >= 0 && static_cast<size_t>(y) < O && y != blank,
            ErrorCode::kInvalidArgument, "label outside vocabulary");
  }

  Matrix alpha(T, U + 1, kLogZero), beta(T, U + 1, kLogZero);
  alpha(0, 0) = 0.0;
  for (size_t t = 0; t < T; ++t) {
    for (size_t u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double a = kLogZero;
      if (t > 0) a = alpha(t - 1, u) + log_probs(t - 1, u, blank);
      if (u > 0) a = LogAdd(a, alpha(t, u - 1) + log_probs(t, u - 1, labels[u - 1]));
      alpha(t, u) = std::isnan(a) ? kLogZero : a;
    }
  }
  // beta(t, u): log prob of finishing from (t, u), including its emissions.
  for (size_t t = T; t-- > 0;) {
    for (size_t u = U + 1; u-- > 0;) {
      double b;
      if (t == T - 1 && u == U) {
        b = log_probs(t, u, blank);
      } else {
        b = kLogZero;
        if (t + 1 < T) b = beta(t + 1, u) + log_probs(t, u, blank);
        if (u < U) b = LogAdd(b, beta(t, u + 1) + log_probs(t, u, labels[u]));
      }
      beta(t, u) = std::isnan(b) ? kLogZero : b;
    }
  }
  const double log_total = alpha(T - 1, U) + log_probs(T - 1, U, blank);
  Require(log_total > kLogZero, ErrorCode::kInfeasibleAlignment,
          "label sequence has zero probability");

  RnntResult result;
  result.loss = -log_total;
  result.grad_logits = Lattice(T, U + 1, O);
  std::vector<double> dlp(O);
  for (size_t t = 0; t < T; ++t) {
    for (size_t u = 0; u <= U; ++u) {
      std::fill(dlp.begin(), dlp.end(), 0.0);
      const double a = alpha(t, u);
      if (a > kLogZero) {
        double next_blank = kLogZero;
        if (t == T - 1 && u == U) {
          next_blank = 0.0;
        } else if (t + 1 < T) {
          next_blank = beta(t + 1, u);
        }
        if (next_blank > kLogZero) {
          dlp[blank] -= std::exp(a + log_probs(t, u, blank) + next_blank - log_total);
        }
        if (u < U && beta(t, u + 1) > kLogZero) {
          dlp[labels[u]] -=
              std::exp(a + log_probs(t, u, labels[u]) + beta(t, u + 1) - log_total);
        }
      }
      double sum = 0.0;
      for (double v : dlp) sum += v;
      for (size_t k = 0; k < O; ++k) {
        result.grad_logits(t, u, k) = dlp[k] - std::exp(log_probs(t, u, k)) * sum;
      }
    }
  }
  return result;
}

inline RnntResult RnntLoss(const Lattice& posteriors, std::span<const int> labels,
                           int blank) {
  Lattice lp = posteriors;
  for (double& v : lp.data()) v = v > 0.0 ? std::log(v) : kLogZero;
  return RnntLossFromLogProbs(lp, labels, blank);
}

}  // namespace pate_asr

#endif  // PATE_ASR_SEQMODEL_RNNT_HPP_
