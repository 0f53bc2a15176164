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

#ifndef PATE_ASR_SEQMODEL_PARAMS_HPP_
#define PATE_ASR_SEQMODEL_PARAMS_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pate_asr/error.hpp"
#include "pate_asr/random.hpp"

namespace pate_asr {

enum class Arch : uint32_t { kFrameClassifier = 0, kCtc = 1, kRnnt = 2 };

constexpr std::string_view ArchName(Arch arch) {
  switch (arch) {
    case Arch::kFrameClassifier: return "frame";
    case Arch::kCtc: return "ctc";
    case Arch::kRnnt: return "rnnt";
  }
  return "ctc";
}

inline Arch ParseArch(std::string_view s) {
  if (s == "frame") return Arch::kFrameClassifier;
  if (s == "ctc") return Arch::kCtc;
  if (s == "rnnt") return Arch::kRnnt;
  throw Error(ErrorCode::kInvalidArgument, "unknown arch '" + std::string(s) + "'");
}

// Output layer has vocab + 1 units; the blank symbol is index `vocab`.
struct ModelDims {
  int input = 8;
  int hidden = 32;
  int vocab = 8;

  int outputs() const { return vocab + 1; }
  int blank() const { return vocab; }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Offsets of each weight block inside the flat parameter vector. Matrices are
// row-major with the output dimension as rows.
//
//   frame: Wo[O,F] bo[O]
//   ctc:   Wx[H,F] Wh[H,H] bh[H] Wo[O,H] bo[O]
//   rnnt:  Wx[H,F] Wh[H,H] bh[H] E[V+1,H] Wg[H,H] bg[H] Ae[O,H] Ap[O,H] c[O]
//
// In the rnnt layout row V of E embeds the start-of-sequence context.
struct ParamLayout {
  size_t wx = 0, wh = 0, bh = 0;
  size_t emb = 0, wg = 0, bg = 0;
  size_t wo = 0, bo = 0;  // frame/ctc output; for rnnt: Ae and c
  size_t ap = 0;
  size_t total = 0;

  static ParamLayout For(Arch arch, const ModelDims& d) {
    const size_t F = d.input, H = d.hidden, O = d.outputs();
    ParamLayout l;
    size_t off = 0;
    auto take = [&off](size_t n) {
      const size_t at = off;
      off += n;
      return at;
    };
    switch (arch) {
      case Arch::kFrameClassifier:
        l.wo = take(O * F);
        l.bo = take(O);
        break;
      case Arch::kCtc:
        l.wx = take(H * F);
        l.wh = take(H * H);
        l.bh = take(H);
        l.wo = take(O * H);
        l.bo = take(O);
        break;
      case Arch::kRnnt:
        l.wx = take(H * F);
        l.wh = take(H * H);
        l.bh = take(H);
        l.emb = take((d.vocab + 1) * H);
        l.wg = take(H * H);
        l.bg = take(H);
        l.wo = take(O * H);
        l.ap = take(O * H);
        l.bo = take(O);
        break;
    }
    l.total = off;
    return l;
  }
};

class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(Arch arch, ModelDims dims)
      : arch_(arch), dims_(dims), values_(ParamLayout::For(arch, dims).total, 0.0) {
    Require(dims.input >= 1 && dims.vocab >= 1 &&
                (arch == Arch::kFrameClassifier || dims.hidden >= 1),
            ErrorCode::kInvalidArgument, "bad model dimensions");
  }
  ModelParams(Arch arch, ModelDims dims, std::vector<double> values)
      : arch_(arch), dims_(dims), values_(std::move(values)) {
    Require(values_.size() == ParamLayout::For(arch, dims).total,
            ErrorCode::kDimensionMismatch, "parameter count does not match layout");
  }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per block, biases zero.
  static ModelParams Init(Arch arch, ModelDims dims, uint64_t seed) {
    ModelParams p(arch, dims);
    const ParamLayout l = p.layout();
    Rng rng(seed);
    auto fill = [&](size_t off, size_t n, double fan_in) {
      const double s = 1.0 / std::sqrt(fan_in);
      for (size_t i = 0; i < n; ++i) p.values_[off + i] = s * (2.0 * rng.Uniform() - 1.0);
    };
    const size_t F = dims.input, H = dims.hidden, O = dims.outputs();
    if (arch == Arch::kFrameClassifier) {
      fill(l.wo, O * F, F);
      return p;
    }
    fill(l.wx, H * F, F);
    fill(l.wh, H * H, H);
    fill(l.wo, O * H, H);
    if (arch == Arch::kRnnt) {
      fill(l.emb, (dims.vocab + 1) * H, 1.0);
      fill(l.wg, H * H, H);
      fill(l.ap, O * H, H);
    }
    return p;
  }

  Arch arch() const { return arch_; }
  const ModelDims& dims() const { return dims_; }
  ParamLayout layout() const { return ParamLayout::For(arch_, dims_); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  size_t size() const { return values_.size(); }

  bool AllFinite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  Arch arch_ = Arch::kCtc;
  ModelDims dims_;
  std::vector<double> values_;
};

}  // namespace pate_asr

#endif  // PATE_ASR_SEQMODEL_PARAMS_HPP_
