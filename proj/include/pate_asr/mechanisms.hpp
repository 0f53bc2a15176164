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

#ifndef PATE_ASR_MECHANISMS_HPP_
#define PATE_ASR_MECHANISMS_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pate_asr/error.hpp"
#include "pate_asr/random.hpp"

namespace pate_asr {

enum class NoiseKind { kNone, kLaplace, kGaussian };

constexpr std::string_view NoiseKindName(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kNone: return "none";
    case NoiseKind::kLaplace: return "laplace";
    case NoiseKind::kGaussian: return "gaussian";
  }
  return "none";
}

inline NoiseKind ParseNoiseKind(std::string_view name) {
  if (name == "none") return NoiseKind::kNone;
  if (name == "laplace" || name == "lnmax") return NoiseKind::kLaplace;
  if (name == "gaussian" || name == "gnmax") return NoiseKind::kGaussian;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown noise kind '" + std::string(name) + "'");
}

// Additive noise distribution. `scale` is the Laplace scale b or the Gaussian
// standard deviation, in the units of the perturbed quantity.
class NoiseSpec {
 public:
  NoiseSpec() = default;
  NoiseSpec(NoiseKind kind, double scale) : kind_(kind), scale_(scale) {
    Require(std::isfinite(scale) && scale >= 0.0, ErrorCode::kInvalidScale,
            "noise scale must be finite and non-negative");
  }

  static NoiseSpec None() { return {}; }
  static NoiseSpec Laplace(double b) { return {NoiseKind::kLaplace, b}; }
  static NoiseSpec Gaussian(double sigma) { return {NoiseKind::kGaussian, sigma}; }

  NoiseKind kind() const { return kind_; }
  double scale() const { return kind_ == NoiseKind::kNone ? 0.0 : scale_; }
  // True when draws are identically zero.
  bool is_zero() const { return kind_ == NoiseKind::kNone || scale_ == 0.0; }

 private:
  NoiseKind kind_ = NoiseKind::kNone;
  double scale_ = 0.0;
};

// Zero-scale specs return exactly 0 and leave the stream untouched, so None
// and scale 0 are interchangeable bit for bit.
inline double SampleNoise(const NoiseSpec& spec, Rng& rng) {
  if (spec.is_zero()) return 0.0;
  if (spec.kind() == NoiseKind::kLaplace) return spec.scale() * rng.Laplace();
  return spec.scale() * rng.Normal();
}

// Per-class vote counts from I teachers over J classes.
class VoteHistogram {
 public:
  explicit VoteHistogram(std::vector<int> counts) : counts_(std::move(counts)) {
    Require(counts_.size() >= 2, ErrorCode::kInvalidArgument,
            "vote histogram needs at least two classes");
    for (int c : counts_) {
      Require(c >= 0, ErrorCode::kInvalidArgument, "negative vote count");
    }
  }

  static VoteHistogram FromVotes(std::span<const int> votes, size_t num_classes) {
    std::vector<int> counts(num_classes, 0);
    for (int v : votes) {
      Require(v >= 0 && static_cast<size_t>(v) < num_classes,
              ErrorCode::kInvalidArgument, "vote out of range");
      ++counts[static_cast<size_t>(v)];
    }
    return VoteHistogram(std::move(counts));
  }

  const std::vector<int>& counts() const { return counts_; }
  size_t num_classes() const { return counts_.size(); }
  int num_voters() const {
    int total = 0;
    for (int c : counts_) total += c;
    return total;
  }

 private:
  std::vector<int> counts_;
};

// counts[j] + Y_j for every class. This is the released quantity; argmax and
// any normalisation of it are post-processing.
inline std::vector<double> NoisyCounts(const VoteHistogram& votes,
                                       const NoiseSpec& spec, Rng& rng) {
  std::vector<double> noisy(votes.num_classes());
  for (size_t j = 0; j < noisy.size(); ++j) {
    noisy[j] = static_cast<double>(votes.counts()[j]) + SampleNoise(spec, rng);
  }
  return noisy;
}

// First index of the maximum (lowest index wins ties).
inline size_t ArgMax(std::span<const double> values) {
  size_t best = 0;
  for (size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return best;
}

// Report-noisy-max over a vote histogram (GNMax / LNMax).
inline size_t NoisyMax(const VoteHistogram& votes, const NoiseSpec& spec,
                       Rng& rng) {
  const std::vector<double> noisy = NoisyCounts(votes, spec, rng);
  return ArgMax(noisy);
}

namespace internal {

inline void ValidateSimplex(std::span<const double> w, double tol,
                            ErrorCode code, const char* what) {
  double sum = 0.0;
  for (double x : w) {
    Require(std::isfinite(x) && x >= 0.0, code,
            std::string(what) + " has a negative or non-finite entry");
    sum += x;
  }
  Require(std::abs(sum - 1.0) <= tol, code,
          std::string(what) + " does not sum to 1");
}

}  // namespace internal

// What NoisyAggregatePosterior returns when every noisy entry clips to zero.
// kUniform never looks at the clean average again, so it keeps the output a
// function of the noisy sum alone.
enum class ClipFallback { kCleanAverage, kUniform };

// Weighted average of teacher posteriors, sum_i w_i (T_i + Y_i), with a fresh
// noise vector per teacher. Negative entries are clipped and the result is
// L1-renormalised; if nothing survives the clip the `fallback` is returned.
// With zero noise the plain weighted average comes back untouched.
inline std::vector<double> NoisyAggregatePosterior(
    std::span<const std::span<const double>> posteriors,
    std::span<const double> weights, const NoiseSpec& spec, Rng& rng,
    ClipFallback fallback = ClipFallback::kCleanAverage) {
  Require(!posteriors.empty(), ErrorCode::kInvalidArgument, "no teachers");
  Require(weights.size() == posteriors.size(), ErrorCode::kInvalidWeights,
          "one weight per teacher required");
  internal::ValidateSimplex(weights, 1e-9, ErrorCode::kInvalidWeights, "weights");
  const size_t num_classes = posteriors.front().size();
  for (const auto& p : posteriors) {
    Require(p.size() == num_classes, ErrorCode::kDimensionMismatch,
            "teacher posteriors differ in length");
    internal::ValidateSimplex(p, 1e-9, ErrorCode::kInvalidArgument, "posterior");
  }

  std::vector<double> clean(num_classes, 0.0);
  std::vector<double> noisy(num_classes, 0.0);
  for (size_t i = 0; i < posteriors.size(); ++i) {
    for (size_t j = 0; j < num_classes; ++j) {
      clean[j] += weights[i] * posteriors[i][j];
      noisy[j] += weights[i] * (posteriors[i][j] + SampleNoise(spec, rng));
    }
  }
  if (spec.is_zero()) return clean;

  double total = 0.0;
  for (double& x : noisy) {
    if (!(x > 0.0)) x = 0.0;
    total += x;
  }
  if (total <= 0.0) {
    if (fallback == ClipFallback::kCleanAverage) return clean;
    return std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes));
  }
  for (double& x : noisy) x /= total;
  return noisy;
}

inline std::vector<double> NoisyAggregatePosterior(
    const std::vector<std::vector<double>>& posteriors,
    std::span<const double> weights, const NoiseSpec& spec, Rng& rng,
    ClipFallback fallback = ClipFallback::kCleanAverage) {
  std::vector<std::span<const double>> views(posteriors.begin(),
                                             posteriors.end());
  return NoisyAggregatePosterior(std::span<const std::span<const double>>(views),
                                 weights, spec, rng, fallback);
}

}  // namespace pate_asr

#endif  // PATE_ASR_MECHANISMS_HPP_
