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
#ifndef PATE_ASR_DPSGD_HPP_
#define PATE_ASR_DPSGD_HPP_

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "pate_asr/accountant.hpp"
#include "pate_asr/csv.hpp"
#include "pate_asr/error.hpp"
#include "pate_asr/parallel.hpp"
#include "pate_asr/random.hpp"
#include "pate_asr/seqmodel/losses.hpp"
#include "pate_asr/seqmodel/params.hpp"
#include "pate_asr/seqmodel/train.hpp"

namespace pate_asr {

struct DpSgdConfig {
  double clip_norm = 1.0;         // C
  double noise_multiplier = 1.0;  // sigma; the noise std is sigma * C
  double lr = 0.5;
  int epochs = 10;
  int batch_size = 16;
  PrivacyBudget target = PrivacyBudget::Unbounded();
  uint64_t seed = 1;
  int jobs = 1;

  void Validate() const {
    Require(clip_norm > 0.0, ErrorCode::kInvalidArgument, "clip norm must be positive");
    Require(std::isfinite(noise_multiplier) && noise_multiplier >= 0.0,
            ErrorCode::kInvalidArgument, "noise multiplier must be non-negative");
    Require(batch_size >= 1 && epochs >= 0, ErrorCode::kInvalidArgument,
            "bad batch size or epoch count");
  }
};

inline void to_json(nlohmann::json& j, const DpSgdConfig& c) {
  j = {{"clip_norm", c.clip_norm},
       {"noise_multiplier", c.noise_multiplier},
       {"lr", c.lr},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size}};
}

inline void from_json(const nlohmann::json& j, DpSgdConfig& c) {
  DpSgdConfig d;
  c.clip_norm = j.value("clip_norm", d.clip_norm);
  c.noise_multiplier = j.value("noise_multiplier", d.noise_multiplier);
  c.lr = j.value("lr", d.lr);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
}

inline double L2Norm(std::span<const double> g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

// g * min(1, C / ||g||).
inline std::vector<double> ClipGradient(std::span<const double> g, double clip_norm) {
  Require(clip_norm > 0.0, ErrorCode::kInvalidArgument, "clip norm must be positive");
  std::vector<double> out(g.begin(), g.end());
  const double norm = L2Norm(g);
  if (norm > clip_norm) {
    const double s = clip_norm / norm;
    for (double& x : out) x *= s;
  }
  return out;
}

// Sum of clipped per-example gradients plus N(0, (sigma C)^2 I), in the
// fixed order of `per_example`.
inline std::vector<double> NoisyClippedSum(std::span<const std::vector<double>> per_example,
                                           const DpSgdConfig& config, Rng& rng) {
  Require(!per_example.empty(), ErrorCode::kInvalidArgument, "empty batch");
  std::vector<double> sum(per_example.front().size(), 0.0);
  for (const auto& g : per_example) {
    Require(g.size() == sum.size(), ErrorCode::kDimensionMismatch,
            "per-example gradients differ in length");
    const std::vector<double> c = ClipGradient(g, config.clip_norm);
    assert(L2Norm(c) <= config.clip_norm * (1.0 + 1e-12));
    for (size_t i = 0; i < sum.size(); ++i) sum[i] += c[i];
  }
  const NoiseSpec noise = NoiseSpec::Gaussian(config.noise_multiplier * config.clip_norm);
  for (double& x : sum) x += SampleNoise(noise, rng);
  return sum;
}

// -lr * (sum_i clip(g_i) + noise) / batch.
inline std::vector<double> DpSgdStep(std::span<const std::vector<double>> per_example,
                                     const DpSgdConfig& config, Rng& rng) {
  std::vector<double> update = NoisyClippedSum(per_example, config, rng);
  const double n = static_cast<double>(per_example.size());
  for (double& x : update) x = -config.lr * (x / n);
  return update;
}

// Every step is a Gaussian release of a sum whose sensitivity is C; with no
// subsampling the steps compose in full.
inline double DpSgdEpsilon(double noise_multiplier, size_t steps, double delta) {
  if (steps == 0) return 0.0;
  return AccountedEpsilon(NoiseSpec::Gaussian(noise_multiplier), static_cast<double>(steps),
                          1.0, delta);
}

// Noise multiplier that lets `steps` steps fit the target budget.
inline double CalibrateNoiseMultiplier(const PrivacyBudget& target, size_t steps) {
  return CalibrateNoise(target, static_cast<double>(steps), NoiseKind::kGaussian, 1.0).scale();
}

struct DpSgdTrace {
  std::vector<double> epoch_losses;  // mean example loss over completed epochs
  std::vector<double> step_epsilons;  // spent epsilon after each step
};

struct DpSgdResult {
  ModelParams params;
  PrivacyBudget spent;
  size_t steps = 0;
  bool stopped_early = false;
  DpSgdTrace trace;
};

// Trains with per-example clipping and Gaussian noise, refusing any step that
// would take the spent budget past config.target.
inline DpSgdResult DpSgdTrain(ModelParams params, std::span<const TrainingExample> data,
                              const Objective& objective, const DpSgdConfig& config) {
  config.Validate();
  Require(!data.empty(), ErrorCode::kInvalidArgument, "empty training set");
  DpSgdResult result;
  Rng rng(DeriveSeed(config.seed, {0xd95d}));
  const double delta = config.target.delta > 0.0 ? config.target.delta : kDefaultDelta;
  const size_t steps_per_epoch =
      (data.size() + static_cast<size_t>(config.batch_size) - 1) /
      static_cast<size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs && !result.stopped_early; ++epoch) {
    double epoch_loss = 0.0;
    for (const auto& batch : BatchSchedule(data.size(), config.batch_size, config.seed, epoch)) {
      const double next_eps = DpSgdEpsilon(config.noise_multiplier, result.steps + 1, delta);
      if (next_eps > config.target.epsilon) {
        result.stopped_early = true;
        break;
      }
      std::vector<std::vector<double>> grads(batch.size());
      std::vector<double> losses(batch.size());
      ParallelFor(batch.size(), config.jobs, [&](size_t k) {
        LossGrad lg = ExampleLossGrad(params, data[batch[k]], objective);
        losses[k] = lg.loss;
        grads[k] = std::move(lg.grad);
      });
      for (double l : losses) {
        Require(std::isfinite(l), ErrorCode::kDivergenceDetected, "non-finite training loss");
        epoch_loss += l;
      }
      const std::vector<double> sum = NoisyClippedSum(grads, config, rng);
      SgdUpdate(params.values(), sum, batch.size(), config.lr);
      ++result.steps;
      result.trace.step_epsilons.push_back(next_eps);
    }
    if (result.stopped_early) break;
    epoch_loss /= static_cast<double>(data.size());
    Require(std::isfinite(epoch_loss) && params.AllFinite(), ErrorCode::kDivergenceDetected,
            "training diverged");
    result.trace.epoch_losses.push_back(epoch_loss);
  }
  Require(config.epochs == 0 || result.steps >= steps_per_epoch,
          ErrorCode::kBudgetExhaustedBeforeOneEpoch,
          "budget exhausted after " + std::to_string(result.steps) + " of " +
              std::to_string(steps_per_epoch) + " steps of the first epoch");
  result.spent = PrivacyBudget(DpSgdEpsilon(config.noise_multiplier, result.steps, delta), delta);
  result.params = std::move(params);
  return result;
}

}  // namespace pate_asr

#endif  // PATE_ASR_DPSGD_HPP_
