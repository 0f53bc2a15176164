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

#ifndef PATE_ASR_SEQMODEL_MODEL_HPP_
#define PATE_ASR_SEQMODEL_MODEL_HPP_

#include <cmath>
#include <span>
#include <vector>

#include "pate_asr/error.hpp"
#include "pate_asr/matrix.hpp"
#include "pate_asr/seqmodel/logmath.hpp"
#include "pate_asr/seqmodel/params.hpp"

namespace pate_asr {

namespace internal {

// y[r] += sum_c W[r, c] x[c] for a row-major R x C block.
inline void MatVecAdd(const double* w, size_t rows, size_t cols,
                      const double* x, double* y) {
  for (size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    double acc = 0.0;
    for (size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] += acc;
  }
}

// y[c] += sum_r W[r, c] g[r].
inline void MatTVecAdd(const double* w, size_t rows, size_t cols,
                       const double* g, double* y) {
  for (size_t r = 0; r < rows; ++r) {
    const double* wr = w + r * cols;
    const double gr = g[r];
    if (gr == 0.0) continue;
    for (size_t c = 0; c < cols; ++c) y[c] += wr[c] * gr;
  }
}

// dW[r, c] += g[r] x[c].
inline void OuterAdd(double* dw, size_t rows, size_t cols, const double* g,
                     const double* x) {
  for (size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* dr = dw + r * cols;
    for (size_t c = 0; c < cols; ++c) dr[c] += gr * x[c];
  }
}

inline void CheckFeatures(const ModelParams& p, const Matrix& x) {
  Require(x.cols() == static_cast<size_t>(p.dims().input),
          ErrorCode::kDimensionMismatch, "feature dimension does not match model");
  Require(x.rows() >= 1, ErrorCode::kDimensionMismatch, "empty feature matrix");
}

}  // namespace internal

// tanh recurrence h_t = tanh(Wx x_t + Wh h_{t-1} + bh), h_{-1} = 0.
inline Matrix EncoderForward(const ModelParams& p, const Matrix& x) {
  const ParamLayout l = p.layout();
  const size_t T = x.rows(), F = x.cols(), H = p.dims().hidden;
  const double* w = p.values().data();
  Matrix h(T, H);
  std::vector<double> a(H);
  for (size_t t = 0; t < T; ++t) {
    for (size_t i = 0; i < H; ++i) a[i] = w[l.bh + i];
    internal::MatVecAdd(w + l.wx, H, F, x.row(t).data(), a.data());
    if (t > 0) internal::MatVecAdd(w + l.wh, H, H, h.row(t - 1).data(), a.data());
    for (size_t i = 0; i < H; ++i) h(t, i) = std::tanh(a[i]);
  }
  return h;
}

// Backpropagates dh (T x H, gradient w.r.t. encoder outputs) through the
// recurrence. Accumulates into `grad`; writes d/dx into `dx` when given.
inline void EncoderBackward(const ModelParams& p, const Matrix& x, const Matrix& h,
                            const Matrix& dh, std::span<double> grad, Matrix* dx) {
  const ParamLayout l = p.layout();
  const size_t T = x.rows(), F = x.cols(), H = p.dims().hidden;
  const double* w = p.values().data();
  double* g = grad.data();
  std::vector<double> carry(H, 0.0), da(H);
  for (size_t t = T; t-- > 0;) {
    for (size_t i = 0; i < H; ++i) {
      const double ht = h(t, i);
      da[i] = (dh(t, i) + carry[i]) * (1.0 - ht * ht);
    }
    internal::OuterAdd(g + l.wx, H, F, da.data(), x.row(t).data());
    for (size_t i = 0; i < H; ++i) g[l.bh + i] += da[i];
    if (dx) internal::MatTVecAdd(w + l.wx, H, F, da.data(), dx->row(t).data());
    std::fill(carry.begin(), carry.end(), 0.0);
    if (t > 0) {
      internal::OuterAdd(g + l.wh, H, H, da.data(), h.row(t - 1).data());
      internal::MatTVecAdd(w + l.wh, H, H, da.data(), carry.data());
    }
  }
}

// Per-frame activations of the frame classifier and CTC architectures.
struct FrameForward {
  Matrix hidden;     // T x H (empty for the frame classifier)
  Matrix logits;     // T x O
  Matrix log_probs;  // T x O
};

inline FrameForward ForwardFrames(const ModelParams& p, const Matrix& x) {
  Require(p.arch() != Arch::kRnnt, ErrorCode::kInvalidArgument,
          "rnnt models have no label-independent frame forward");
  internal::CheckFeatures(p, x);
  const ParamLayout l = p.layout();
  const size_t T = x.rows(), O = p.dims().outputs();
  const double* w = p.values().data();
  FrameForward out;
  out.logits = Matrix(T, O);
  size_t in_dim = x.cols();
  const Matrix* src = &x;
  if (p.arch() == Arch::kCtc) {
    out.hidden = EncoderForward(p, x);
    src = &out.hidden;
    in_dim = p.dims().hidden;
  }
  for (size_t t = 0; t < T; ++t) {
    double* z = out.logits.row(t).data();
    for (size_t k = 0; k < O; ++k) z[k] = w[l.bo + k];
    internal::MatVecAdd(w + l.wo, O, in_dim, src->row(t).data(), z);
  }
  out.log_probs = LogSoftmaxRows(out.logits);
  return out;
}

inline void BackwardFrames(const ModelParams& p, const Matrix& x,
                           const FrameForward& fwd, const Matrix& dlogits,
                           std::span<double> grad, Matrix* dx) {
  const ParamLayout l = p.layout();
  const size_t T = x.rows(), O = p.dims().outputs();
  const double* w = p.values().data();
  double* g = grad.data();
  if (dx) *dx = Matrix(T, x.cols());
  if (p.arch() == Arch::kFrameClassifier) {
    const size_t F = x.cols();
    for (size_t t = 0; t < T; ++t) {
      const double* dz = dlogits.row(t).data();
      internal::OuterAdd(g + l.wo, O, F, dz, x.row(t).data());
      for (size_t k = 0; k < O; ++k) g[l.bo + k] += dz[k];
      if (dx) internal::MatTVecAdd(w + l.wo, O, F, dz, dx->row(t).data());
    }
    return;
  }
  const size_t H = p.dims().hidden;
  Matrix dh(T, H);
  for (size_t t = 0; t < T; ++t) {
    const double* dz = dlogits.row(t).data();
    internal::OuterAdd(g + l.wo, O, H, dz, fwd.hidden.row(t).data());
    for (size_t k = 0; k < O; ++k) g[l.bo + k] += dz[k];
    internal::MatTVecAdd(w + l.wo, O, H, dz, dh.row(t).data());
  }
  EncoderBackward(p, x, fwd.hidden, dh, grad, dx);
}

// Joint-network lattice indexed (t, u, k) for t < T, u <= U, k < O.
class Lattice {
 public:
  Lattice() = default;
  Lattice(size_t frames, size_t label_positions, size_t outputs, double fill = 0.0)
      : T_(frames), U1_(label_positions), O_(outputs),
        data_(frames * label_positions * outputs, fill) {}

  size_t frames() const { return T_; }
  size_t positions() const { return U1_; }  // U + 1
  size_t outputs() const { return O_; }

  double& operator()(size_t t, size_t u, size_t k) { return data_[(t * U1_ + u) * O_ + k]; }
  double operator()(size_t t, size_t u, size_t k) const {
    return data_[(t * U1_ + u) * O_ + k];
  }
  std::span<double> cell(size_t t, size_t u) { return {&data_[(t * U1_ + u) * O_], O_}; }
  std::span<const double> cell(size_t t, size_t u) const {
    return {&data_[(t * U1_ + u) * O_], O_};
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  size_t T_ = 0, U1_ = 0, O_ = 0;
  std::vector<double> data_;
};

inline Lattice LogSoftmaxLattice(const Lattice& logits) {
  Lattice out = logits;
  for (size_t t = 0; t < out.frames(); ++t) {
    for (size_t u = 0; u < out.positions(); ++u) LogSoftmaxInPlace(out.cell(t, u));
  }
  return out;
}

struct RnntForward {
  Matrix hidden;      // encoder, T x H
  Matrix prediction;  // (U+1) x H
  Lattice logits;
  Lattice log_probs;
};

// Prediction network g_u = tanh(E[ctx_u] + Wg g_{u-1} + bg) with ctx_0 the
// start row and ctx_u = labels[u-1].
inline Matrix PredictionForward(const ModelParams& p, std::span<const int> labels) {
  const ParamLayout l = p.layout();
  const size_t H = p.dims().hidden, U = labels.size();
  const double* w = p.values().data();
  Matrix g(U + 1, H);
  std::vector<double> a(H);
  for (size_t u = 0; u <= U; ++u) {
    const size_t ctx = u == 0 ? static_cast<size_t>(p.dims().vocab)
                              : static_cast<size_t>(labels[u - 1]);
    for (size_t i = 0; i < H; ++i) a[i] = w[l.emb + ctx * H + i] + w[l.bg + i];
    if (u > 0) internal::MatVecAdd(w + l.wg, H, H, g.row(u - 1).data(), a.data());
    for (size_t i = 0; i < H; ++i) g(u, i) = std::tanh(a[i]);
  }
  return g;
}

// Ae h_t + c, one row per frame.
inline Matrix EncoderProjection(const ModelParams& p, const Matrix& hidden) {
  const ParamLayout l = p.layout();
  const size_t O = p.dims().outputs(), H = p.dims().hidden;
  const double* w = p.values().data();
  Matrix out(hidden.rows(), O);
  for (size_t t = 0; t < hidden.rows(); ++t) {
    double* z = out.row(t).data();
    for (size_t k = 0; k < O; ++k) z[k] = w[l.bo + k];
    internal::MatVecAdd(w + l.wo, O, H, hidden.row(t).data(), z);
  }
  return out;
}

// Ap g_u, one row per label position.
inline Matrix PredictionProjection(const ModelParams& p, const Matrix& prediction) {
  const ParamLayout l = p.layout();
  const size_t O = p.dims().outputs(), H = p.dims().hidden;
  Matrix out(prediction.rows(), O);
  for (size_t u = 0; u < prediction.rows(); ++u) {
    internal::MatVecAdd(p.values().data() + l.ap, O, H, prediction.row(u).data(),
                        out.row(u).data());
  }
  return out;
}

inline void CheckLabels(const ModelParams& p, std::span<const int> labels) {
  for (int y : labels) {
    Require(y >= 0 && y < p.dims().vocab, ErrorCode::kInvalidArgument,
            "label outside vocabulary");
  }
}

inline RnntForward ForwardRnnt(const ModelParams& p, const Matrix& x,
                               std::span<const int> labels) {
  Require(p.arch() == Arch::kRnnt, ErrorCode::kInvalidArgument, "not an rnnt model");
  internal::CheckFeatures(p, x);
  CheckLabels(p, labels);
  const size_t T = x.rows(), U1 = labels.size() + 1, O = p.dims().outputs();
  RnntForward out;
  out.hidden = EncoderForward(p, x);
  out.prediction = PredictionForward(p, labels);
  const Matrix enc = EncoderProjection(p, out.hidden);
  const Matrix pred = PredictionProjection(p, out.prediction);
  out.logits = Lattice(T, U1, O);
  for (size_t t = 0; t < T; ++t) {
    for (size_t u = 0; u < U1; ++u) {
      for (size_t k = 0; k < O; ++k) out.logits(t, u, k) = enc(t, k) + pred(u, k);
    }
  }
  out.log_probs = LogSoftmaxLattice(out.logits);
  return out;
}

inline void BackwardRnnt(const ModelParams& p, const Matrix& x,
                         std::span<const int> labels, const RnntForward& fwd,
                         const Lattice& dlogits, std::span<double> grad, Matrix* dx) {
  const ParamLayout l = p.layout();
  const size_t T = x.rows(), U1 = labels.size() + 1, O = p.dims().outputs();
  const size_t H = p.dims().hidden;
  const double* w = p.values().data();
  double* g = grad.data();

  Matrix d_enc(T, O), d_pred(U1, O);
  for (size_t t = 0; t < T; ++t) {
    for (size_t u = 0; u < U1; ++u) {
      for (size_t k = 0; k < O; ++k) {
        const double v = dlogits(t, u, k);
        d_enc(t, k) += v;
        d_pred(u, k) += v;
      }
    }
  }
  Matrix dh(T, H);
  for (size_t t = 0; t < T; ++t) {
    internal::OuterAdd(g + l.wo, O, H, d_enc.row(t).data(), fwd.hidden.row(t).data());
    for (size_t k = 0; k < O; ++k) g[l.bo + k] += d_enc(t, k);
    internal::MatTVecAdd(w + l.wo, O, H, d_enc.row(t).data(), dh.row(t).data());
  }
  std::vector<double> dg(H), carry(H, 0.0), da(H);
  for (size_t u = U1; u-- > 0;) {
    std::fill(dg.begin(), dg.end(), 0.0);
    internal::OuterAdd(g + l.ap, O, H, d_pred.row(u).data(),
                       fwd.prediction.row(u).data());
    internal::MatTVecAdd(w + l.ap, O, H, d_pred.row(u).data(), dg.data());
    for (size_t i = 0; i < H; ++i) {
      const double gu = fwd.prediction(u, i);
      da[i] = (dg[i] + carry[i]) * (1.0 - gu * gu);
    }
    const size_t ctx = u == 0 ? static_cast<size_t>(p.dims().vocab)
                              : static_cast<size_t>(labels[u - 1]);
    for (size_t i = 0; i < H; ++i) {
      g[l.emb + ctx * H + i] += da[i];
      g[l.bg + i] += da[i];
    }
    std::fill(carry.begin(), carry.end(), 0.0);
    if (u > 0) {
      internal::OuterAdd(g + l.wg, H, H, da.data(), fwd.prediction.row(u - 1).data());
      internal::MatTVecAdd(w + l.wg, H, H, da.data(), carry.data());
    }
  }
  if (dx) *dx = Matrix(T, x.cols());
  EncoderBackward(p, x, fwd.hidden, dh, grad, dx);
}

}  // namespace pate_asr

#endif  // PATE_ASR_SEQMODEL_MODEL_HPP_
