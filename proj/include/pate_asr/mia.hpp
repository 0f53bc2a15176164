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
#ifndef PATE_ASR_MIA_HPP_
#define PATE_ASR_MIA_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pate_asr/csv.hpp"
#include "pate_asr/error.hpp"
#include "pate_asr/matrix.hpp"
#include "pate_asr/parallel.hpp"
#include "pate_asr/random.hpp"
#include "pate_asr/seqmodel/ctc.hpp"
#include "pate_asr/seqmodel/losses.hpp"
#include "pate_asr/seqmodel/params.hpp"

namespace pate_asr {

enum class InitKind { kZeros, kRandom };

inline InitKind ParseInitKind(std::string_view s) {
  if (s == "zeros") return InitKind::kZeros;
  if (s == "random") return InitKind::kRandom;
  throw Error(ErrorCode::kInvalidArgument, "unknown init '" + std::string(s) + "'");
}

struct InversionConfig {
  size_t frames = 16;
  int steps = 200;
  double step_size = 1.0;
  InitKind init = InitKind::kRandom;
  uint64_t seed = 1;
  int query_budget = 10000;  // forward evaluations of the attacked model
};

struct InversionResult {
  Matrix features;          // frames x F
  std::vector<double> trace;  // log p(target | x) after each accepted step, trace[0] at init
  int queries = 0;
};

inline Matrix InitialFeatures(size_t frames, size_t dim, InitKind init, uint64_t seed) {
  Matrix x(frames, dim, 0.0);
  if (init == InitKind::kRandom) {
    Rng rng(DeriveSeed(seed, {0x1a17}));
    for (double& v : x.data()) v = rng.Normal();
  }
  return x;
}

// Gradient ascent on log p(target | x) over the input features. Each step
// starts at step_size and halves (at most 20 times) until the likelihood does
// not drop; if no halving works the search stops.
inline InversionResult Invert(const ModelParams& model, std::span<const int> target,
                              const InversionConfig& config) {
  Require(!target.empty(), ErrorCode::kInfeasibleTarget, "empty target");
  for (int tok : target) {
    Require(tok >= 0 && tok < model.dims().vocab, ErrorCode::kInfeasibleTarget,
            "target token out of vocabulary");
  }
  Require(config.frames >= 1, ErrorCode::kInfeasibleTarget, "need at least one frame");
  Require(model.arch() == Arch::kRnnt || CtcFeasible(config.frames, target),
          ErrorCode::kInfeasibleTarget, "target needs more frames than the attack uses");

  InversionResult r;
  r.features = InitialFeatures(config.frames, model.dims().input, config.init, config.seed);
  if (config.steps <= 0 || config.query_budget <= 0) return r;
  LossGrad cur = SequenceNll(model, r.features, target, true);
  ++r.queries;
  r.trace.push_back(-cur.loss);
  for (int step = 0; step < config.steps; ++step) {
    bool accepted = false;
    double s = config.step_size;
    for (int halving = 0; halving <= 20 && r.queries < config.query_budget; ++halving, s *= 0.5) {
      Matrix cand = r.features;
      for (size_t i = 0; i < cand.data().size(); ++i) {
        cand.data()[i] -= s * cur.input_grad.data()[i];
      }
      LossGrad next = SequenceNll(model, cand, target, true);
      ++r.queries;
      if (std::isfinite(next.loss) && -next.loss >= -cur.loss) {
        r.features = std::move(cand);
        cur = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    r.trace.push_back(-cur.loss);
  }
  return r;
}

// Mean of `segments` contiguous, near-equal runs of rows.
inline Matrix PoolSegments(const Matrix& m, size_t segments) {
  Require(segments >= 1 && segments <= m.rows(), ErrorCode::kDimensionMismatch,
          "cannot pool " + std::to_string(m.rows()) + " frames into " +
              std::to_string(segments) + " segments");
  Matrix out(segments, m.cols(), 0.0);
  for (size_t k = 0; k < segments; ++k) {
    const size_t lo = k * m.rows() / segments, hi = (k + 1) * m.rows() / segments;
    for (size_t t = lo; t < hi; ++t) {
      for (size_t c = 0; c < m.cols(); ++c) out(k, c) += m(t, c);
    }
    for (size_t c = 0; c < m.cols(); ++c) out(k, c) /= static_cast<double>(hi - lo);
  }
  return out;
}

// Each column shifted to zero mean and scaled to unit variance; constant
// columns become zero.
inline Matrix StandardizeColumns(const Matrix& m) {
  Matrix out = m;
  const double n = static_cast<double>(m.rows());
  for (size_t c = 0; c < m.cols(); ++c) {
    double mean = 0.0;
    for (size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
    mean /= n;
    double var = 0.0;
    for (size_t r = 0; r < m.rows(); ++r) var += (m(r, c) - mean) * (m(r, c) - mean);
    const double sd = std::sqrt(var / n);
    for (size_t r = 0; r < m.rows(); ++r) {
      out(r, c) = sd > 0.0 ? (m(r, c) - mean) / sd : 0.0;
    }
  }
  return out;
}

// Cosine between the column-standardised, flattened matrices. A reference
// with fewer rows than the reconstruction is compared against the
// reconstruction pooled to that many segments.
inline double Similarity(const Matrix& reconstruction, const Matrix& reference) {
  Require(reconstruction.cols() == reference.cols(), ErrorCode::kDimensionMismatch,
          "feature dimensions differ");
  const Matrix a = StandardizeColumns(reconstruction.rows() == reference.rows()
                                          ? reconstruction
                                          : PoolSegments(reconstruction, reference.rows()));
  const Matrix b = StandardizeColumns(reference);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) {
    dot += a.data()[i] * b.data()[i];
    na += a.data()[i] * a.data()[i];
    nb += b.data()[i] * b.data()[i];
  }
  Require(na > 0.0 && nb > 0.0, ErrorCode::kZeroVector, "nothing left after standardising");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

// Class means of the target tokens, one row per token.
inline Matrix TargetTemplate(const Matrix& class_means, std::span<const int> target) {
  Matrix out(target.size(), class_means.cols());
  for (size_t k = 0; k < target.size(); ++k) {
    const auto row = class_means.row(static_cast<size_t>(target[k]));
    std::copy(row.begin(), row.end(), out.row(k).begin());
  }
  return out;
}

struct AttackModel {
  std::string name;
  double epsilon = std::numeric_limits<double>::infinity();
  ModelParams params;
};

struct AttackRow {
  std::string model;
  double epsilon = 0.0;
  int trial = 0;
  double similarity = 0.0;
  double final_loglik = 0.0;
};

struct AttackSummary {
  std::string model;
  double epsilon = 0.0;
  int trials = 0;
  double mean = 0.0;
  double se = 0.0;
  bool is_protected = false;
};

struct AttackReport {
  std::vector<AttackRow> rows;
  std::vector<AttackSummary> summary;

  std::string RowsCsv() const {
    std::string out = "epsilon,trial,similarity,final_loglik\n";
    for (const auto& r : rows) {
      out += FormatDouble(r.epsilon) + "," + std::to_string(r.trial) + "," +
             FormatDouble(r.similarity) + "," + FormatDouble(r.final_loglik) + "\n";
    }
    return out;
  }

  std::string SummaryCsv() const {
    std::string out = "model,epsilon,trials,mean_similarity,se,protected\n";
    for (const auto& s : summary) {
      out += s.model + "," + FormatDouble(s.epsilon) + "," + std::to_string(s.trials) + "," +
             FormatDouble(s.mean) + "," + FormatDouble(s.se) + "," +
             (s.is_protected ? "true" : "false") + "\n";
    }
    return out;
  }
};

inline std::pair<double, double> MeanAndSe(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

// Runs `trials` inversions against every model (trial k uses the same random
// start for all models) and flags a model as protected when its mean
// similarity is below the baseline's mean by more than two pooled standard
// errors. `baseline` names the model without privacy.
inline AttackReport RunAttack(std::span<const AttackModel> models, std::span<const int> target,
                              const Matrix& reference, const InversionConfig& config,
                              int trials, std::string_view baseline = "no_dp", int jobs = 1) {
  Require(trials >= 5, ErrorCode::kInvalidArgument, "need at least 5 trials");
  Require(!models.empty(), ErrorCode::kInvalidArgument, "no models to attack");
  AttackReport report;
  report.rows.resize(models.size() * static_cast<size_t>(trials));
  ParallelFor(report.rows.size(), jobs, [&](size_t idx) {
    const size_t m = idx / static_cast<size_t>(trials);
    const int trial = static_cast<int>(idx % static_cast<size_t>(trials));
    InversionConfig c = config;
    c.seed = DeriveSeed(config.seed, {static_cast<uint64_t>(trial)});
    const InversionResult r = Invert(models[m].params, target, c);
    report.rows[idx] = {models[m].name, models[m].epsilon, trial,
                        Similarity(r.features, reference),
                        r.trace.empty() ? -SequenceNll(models[m].params, r.features, target,
                                                       false).loss
                                        : r.trace.back()};
  });
  for (size_t m = 0; m < models.size(); ++m) {
    std::vector<double> sims;
    for (int t = 0; t < trials; ++t) {
      sims.push_back(report.rows[m * static_cast<size_t>(trials) + t].similarity);
    }
    const auto [mean, se] = MeanAndSe(sims);
    report.summary.push_back({models[m].name, models[m].epsilon, trials, mean, se, false});
  }
  const AttackSummary* base = nullptr;
  for (const auto& s : report.summary) {
    if (s.model == baseline) base = &s;
  }
  Require(base != nullptr, ErrorCode::kInvalidArgument,
          "baseline model '" + std::string(baseline) + "' not among the attacked models");
  const double base_mean = base->mean, base_se = base->se;
  for (auto& s : report.summary) {
    const double pooled = std::sqrt(s.se * s.se + base_se * base_se);
    s.is_protected = s.mean < base_mean - 2.0 * pooled;
  }
  return report;
}

}  // namespace pate_asr

#endif  // PATE_ASR_MIA_HPP_
