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

#ifndef PATE_ASR_SEQMODEL_LOSSES_HPP_
#define PATE_ASR_SEQMODEL_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pate_asr/error.hpp"
#include "pate_asr/matrix.hpp"
#include "pate_asr/seqmodel/ctc.hpp"
#include "pate_asr/seqmodel/decode.hpp"
#include "pate_asr/seqmodel/model.hpp"
#include "pate_asr/seqmodel/params.hpp"
#include "pate_asr/seqmodel/rnnt.hpp"

namespace pate_asr {

// Log-space floor for student sequence probabilities inside the KD loss.
inline constexpr double kKdLogFloor = -700.0;

enum class LossKind {
  kSequence,     // CTC for frame/ctc models, transducer loss for rnnt models
  kFrameCe,      // cross-entropy against per-frame hard labels
  kSoftFrameCe,  // cross-entropy against per-frame target distributions
  kQuadratic,    // 0.5 * ||logits - target||^2, for exactness checks
  kNone,         // only the KD term
};

inline LossKind ParseLossKind(std::string_view s) {
  if (s == "sequence") return LossKind::kSequence;
  if (s == "frame_ce") return LossKind::kFrameCe;
  if (s == "soft_frame_ce") return LossKind::kSoftFrameCe;
  if (s == "quadratic") return LossKind::kQuadratic;
  if (s == "none") return LossKind::kNone;
  throw Error(ErrorCode::kInvalidArgument, "unknown loss '" + std::string(s) + "'");
}

constexpr std::string_view LossKindName(LossKind k) {
  switch (k) {
    case LossKind::kSequence: return "sequence";
    case LossKind::kFrameCe: return "frame_ce";
    case LossKind::kSoftFrameCe: return "soft_frame_ce";
    case LossKind::kQuadratic: return "quadratic";
    case LossKind::kNone: return "none";
  }
  return "sequence";
}

struct Objective {
  LossKind kind = LossKind::kSequence;
  double kd_weight = 0.0;  // weight of the sequence-level KD term
};

struct TrainingExample {
  Matrix features;
  std::vector<int> labels;        // kSequence target
  std::vector<int> frame_labels;  // kFrameCe target, one per frame
  Matrix frame_targets;           // kSoftFrameCe / kQuadratic target, T x O
  std::vector<Hypothesis> nbest;  // KD target with teacher probabilities
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as the parameters
  Matrix input_grad;         // filled only when requested
};

// log p(labels | x) under the model's sequence loss, with gradients.
inline LossGrad SequenceNll(const ModelParams& p, const Matrix& x,
                            std::span<const int> labels, bool want_input_grad) {
  LossGrad out;
  out.grad.assign(p.size(), 0.0);
  Matrix* dx = want_input_grad ? &out.input_grad : nullptr;
  if (p.arch() == Arch::kRnnt) {
    const RnntForward fwd = ForwardRnnt(p, x, labels);
    const RnntResult r = RnntLossFromLogProbs(fwd.log_probs, labels, p.dims().blank());
    BackwardRnnt(p, x, labels, fwd, r.grad_logits, out.grad, dx);
    out.loss = r.loss;
    return out;
  }
  const FrameForward fwd = ForwardFrames(p, x);
  const CtcResult r = CtcLossFromLogProbs(fwd.log_probs, labels, p.dims().blank());
  BackwardFrames(p, x, fwd, r.grad_logits, out.grad, dx);
  out.loss = r.loss;
  return out;
}

// Sequence-level distillation, -sum_n P_T(y_n) log p_S(y_n). Student log-probs
// are floored at kKdLogFloor; floored (or infeasible) hypotheses contribute no
// gradient.
inline LossGrad KdLoss(std::span<const Hypothesis> nbest, const ModelParams& student,
                       const Matrix& x, bool want_input_grad = false) {
  LossGrad out;
  out.grad.assign(student.size(), 0.0);
  if (want_input_grad) out.input_grad = Matrix(x.rows(), x.cols());
  const int blank = student.dims().blank();
  auto add_input = [&](const Matrix& dx, double w) {
    for (size_t i = 0; i < dx.data().size(); ++i) out.input_grad.data()[i] += w * dx.data()[i];
  };

  if (student.arch() == Arch::kRnnt) {
    for (const auto& h : nbest) {
      if (h.normalized_prob == 0.0) continue;
      LossGrad one = SequenceNll(student, x, h.tokens, want_input_grad);
      if (-one.loss < kKdLogFloor) {
        out.loss += h.normalized_prob * -kKdLogFloor;
        continue;
      }
      out.loss += h.normalized_prob * one.loss;
      for (size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += h.normalized_prob * one.grad[i];
      if (want_input_grad) add_input(one.input_grad, h.normalized_prob);
    }
    return out;
  }

  const FrameForward fwd = ForwardFrames(student, x);
  Matrix dlogits(x.rows(), student.dims().outputs());
  for (const auto& h : nbest) {
    if (h.normalized_prob == 0.0) continue;
    if (!CtcFeasible(x.rows(), h.tokens)) {
      out.loss += h.normalized_prob * -kKdLogFloor;
      continue;
    }
    const CtcResult r = CtcLossFromLogProbs(fwd.log_probs, h.tokens, blank);
    if (-r.loss < kKdLogFloor) {
      out.loss += h.normalized_prob * -kKdLogFloor;
      continue;
    }
    out.loss += h.normalized_prob * r.loss;
    for (size_t i = 0; i < dlogits.data().size(); ++i) {
      dlogits.data()[i] += h.normalized_prob * r.grad_logits.data()[i];
    }
  }
  BackwardFrames(student, x, fwd, dlogits, out.grad,
                 want_input_grad ? &out.input_grad : nullptr);
  return out;
}

// KD loss computed directly from student log posteriors (CTC scoring); the
// gradient is with respect to the student logits.
inline std::pair<double, Matrix> KdLossFromLogProbs(std::span<const Hypothesis> nbest,
                                                    const Matrix& log_probs, int blank) {
  double loss = 0.0;
  Matrix dlogits(log_probs.rows(), log_probs.cols());
  for (const auto& h : nbest) {
    if (h.normalized_prob == 0.0) continue;
    if (!CtcFeasible(log_probs.rows(), h.tokens)) {
      loss += h.normalized_prob * -kKdLogFloor;
      continue;
    }
    const CtcResult r = CtcLossFromLogProbs(log_probs, h.tokens, blank);
    if (-r.loss < kKdLogFloor) {
      loss += h.normalized_prob * -kKdLogFloor;
      continue;
    }
    loss += h.normalized_prob * r.loss;
    for (size_t i = 0; i < dlogits.data().size(); ++i) {
      dlogits.data()[i] += h.normalized_prob * r.grad_logits.data()[i];
    }
  }
  return {loss, std::move(dlogits)};
}

namespace internal {

inline Matrix FrameLossGradient(LossKind kind, const FrameForward& fwd,
                                const TrainingExample& ex, double& loss) {
  const size_t T = fwd.logits.rows(), O = fwd.logits.cols();
  Matrix d(T, O);
  loss = 0.0;
  switch (kind) {
    case LossKind::kFrameCe: {
      Require(ex.frame_labels.size() == T, ErrorCode::kDimensionMismatch,
              "need one frame label per frame");
      for (size_t t = 0; t < T; ++t) {
        const int y = ex.frame_labels[t];
        Require(y >= 0 && static_cast<size_t>(y) < O, ErrorCode::kInvalidArgument,
                "frame label out of range");
        loss -= fwd.log_probs(t, y);
        for (size_t k = 0; k < O; ++k) d(t, k) = std::exp(fwd.log_probs(t, k));
        d(t, y) -= 1.0;
      }
      break;
    }
    case LossKind::kSoftFrameCe: {
      Require(ex.frame_targets.rows() == T && ex.frame_targets.cols() == O,
              ErrorCode::kDimensionMismatch, "frame targets must be T x O");
      for (size_t t = 0; t < T; ++t) {
        double mass = 0.0;
        for (size_t k = 0; k < O; ++k) {
          const double q = ex.frame_targets(t, k);
          if (q > 0.0) loss -= q * fwd.log_probs(t, k);
          mass += q;
        }
        for (size_t k = 0; k < O; ++k) {
          d(t, k) = mass * std::exp(fwd.log_probs(t, k)) - ex.frame_targets(t, k);
        }
      }
      break;
    }
    case LossKind::kQuadratic: {
      Require(ex.frame_targets.rows() == T && ex.frame_targets.cols() == O,
              ErrorCode::kDimensionMismatch, "frame targets must be T x O");
      for (size_t i = 0; i < d.data().size(); ++i) {
        const double r = fwd.logits.data()[i] - ex.frame_targets.data()[i];
        loss += 0.5 * r * r;
        d.data()[i] = r;
      }
      break;
    }
    default:
      throw Error(ErrorCode::kInvalidArgument, "not a frame-level loss");
  }
  return d;
}

}  // namespace internal

// Loss and parameter gradient of one example under `obj`:
// hard loss + kd_weight * KD.
inline LossGrad ExampleLossGrad(const ModelParams& p, const TrainingExample& ex,
                                const Objective& obj, bool want_input_grad = false) {
  LossGrad out;
  if (obj.kind == LossKind::kSequence) {
    out = SequenceNll(p, ex.features, ex.labels, want_input_grad);
  } else if (obj.kind == LossKind::kNone) {
    out.grad.assign(p.size(), 0.0);
    if (want_input_grad) out.input_grad = Matrix(ex.features.rows(), ex.features.cols());
  } else {
    Require(p.arch() != Arch::kRnnt, ErrorCode::kInvalidArgument,
            "frame-level losses need a frame or ctc model");
    const FrameForward fwd = ForwardFrames(p, ex.features);
    const Matrix d = internal::FrameLossGradient(obj.kind, fwd, ex, out.loss);
    out.grad.assign(p.size(), 0.0);
    BackwardFrames(p, ex.features, fwd, d, out.grad,
                   want_input_grad ? &out.input_grad : nullptr);
  }
  if (obj.kd_weight != 0.0 && !ex.nbest.empty()) {
    const LossGrad kd = KdLoss(ex.nbest, p, ex.features, want_input_grad);
    out.loss += obj.kd_weight * kd.loss;
    for (size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += obj.kd_weight * kd.grad[i];
    if (want_input_grad) {
      for (size_t i = 0; i < out.input_grad.data().size(); ++i) {
        out.input_grad.data()[i] += obj.kd_weight * kd.input_grad.data()[i];
      }
    }
  }
  return out;
}

inline double ExampleLoss(const ModelParams& p, const TrainingExample& ex,
                          const Objective& obj) {
  return ExampleLossGrad(p, ex, obj).loss;
}

}  // namespace pate_asr

#endif  // PATE_ASR_SEQMODEL_LOSSES_HPP_
