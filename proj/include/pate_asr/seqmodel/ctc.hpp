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

#ifndef PATE_ASR_SEQMODEL_CTC_HPP_
#define PATE_ASR_SEQMODEL_CTC_HPP_

#include <cmath>
#include <span>
#include <vector>

#include "pate_asr/error.hpp"
#include "pate_asr/matrix.hpp"
#include "pate_asr/seqmodel/logmath.hpp"

namespace pate_asr {

struct CtcResult {
  double loss = 0.0;   // -log sum over alignments
  Matrix grad_logits;  // d loss / d pre-softmax logits, T x O
};

// Frames needed to emit `labels`: one per label plus a blank between repeats.
inline size_t CtcMinFrames(std::span<const int> labels) {
  size_t need = labels.size();
  for (size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++need;
  }
  return need;
}

inline bool CtcFeasible(size_t frames, std::span<const int> labels) {
  return CtcMinFrames(labels) <= frames;
}

// Forward-backward over the blank-expanded sequence
// (blank, y1, blank, y2, ..., yU, blank). `log_probs` rows are log-softmax
// outputs; entries may be -inf.
inline CtcResult CtcLossFromLogProbs(const Matrix& log_probs,
                                     std::span<const int> labels, int blank) {
  const size_t T = log_probs.rows(), O = log_probs.cols();
  Require(T >= 1, ErrorCode::kDimensionMismatch, "no frames");
  Require(blank >= 0 && static_cast<size_t>(blank) < O,
          ErrorCode::kDimensionMismatch, "blank index outside posterior row");
  for (int y : labels) {
    Require(y >= 0 && static_cast<size_t>(y) < O && y != blank,
            ErrorCode::kInvalidArgument, "label outside vocabulary");
  }
  Require(CtcFeasible(T, labels), ErrorCode::kInfeasibleAlignment,
          "label sequence needs more frames than available");

  const size_t S = 2 * labels.size() + 1;
  std::vector<int> ext(S, blank);
  for (size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
  auto can_skip = [&](size_t s) {
    return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
  };

  // alpha includes the emission at t; beta covers frames after t only.
  Matrix alpha(T, S, kLogZero), beta(T, S, kLogZero);
  alpha(0, 0) = log_probs(0, blank);
  if (S > 1) alpha(0, 1) = log_probs(0, ext[1]);
  for (size_t t = 1; t < T; ++t) {
    for (size_t s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = LogAdd(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = LogAdd(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kLogZero ? kLogZero : a + log_probs(t, ext[s]);
    }
  }
  beta(T - 1, S - 1) = 0.0;
  if (S > 1) beta(T - 1, S - 2) = 0.0;
  for (size_t t = T - 1; t-- > 0;) {
    for (size_t s = 0; s < S; ++s) {
      double b = beta(t + 1, s) + log_probs(t + 1, ext[s]);
      if (s + 1 < S) b = LogAdd(b, beta(t + 1, s + 1) + log_probs(t + 1, ext[s + 1]));
      if (s + 2 < S && can_skip(s + 2)) {
        b = LogAdd(b, beta(t + 1, s + 2) + log_probs(t + 1, ext[s + 2]));
      }
      beta(t, s) = std::isnan(b) ? kLogZero : b;
    }
  }
  double log_total = alpha(T - 1, S - 1);
  if (S > 1) log_total = LogAdd(log_total, alpha(T - 1, S - 2));
  Require(log_total > kLogZero, ErrorCode::kInfeasibleAlignment,
          "label sequence has zero probability");

  CtcResult result;
  result.loss = -log_total;
  result.grad_logits = Matrix(T, O);
  std::vector<double> occ(O);
  for (size_t t = 0; t < T; ++t) {
    std::fill(occ.begin(), occ.end(), 0.0);
    for (size_t s = 0; s < S; ++s) {
      const double lg = alpha(t, s) + beta(t, s);
      if (lg > kLogZero) occ[ext[s]] += std::exp(lg - log_total);
    }
    for (size_t k = 0; k < O; ++k) {
      result.grad_logits(t, k) = std::exp(log_probs(t, k)) - occ[k];
    }
  }
  return result;
}

// Same loss taking a posterior matrix (rows sum to one).
inline CtcResult CtcLoss(const Matrix& posteriors, std::span<const int> labels,
                         int blank) {
  return CtcLossFromLogProbs(LogMatrix(posteriors), labels, blank);
}

}  // namespace pate_asr

#endif  // PATE_ASR_SEQMODEL_CTC_HPP_
