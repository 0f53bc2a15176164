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

#ifndef PATE_ASR_SEQMODEL_TRAIN_HPP_
#define PATE_ASR_SEQMODEL_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pate_asr/corpus.hpp"
#include "pate_asr/error.hpp"
#include "pate_asr/random.hpp"
#include "pate_asr/seqmodel/losses.hpp"
#include "pate_asr/seqmodel/params.hpp"

namespace pate_asr {

enum class OptimizerKind { kSgd, kAdam };

inline OptimizerKind ParseOptimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw Error(ErrorCode::kInvalidArgument, "unknown optimizer '" + std::string(s) + "'");
}

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double lr = 0.01;
  int epochs = 10;
  int batch_size = 8;
  uint64_t seed = 1;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_losses;  // mean example loss seen during each epoch
};

// Example order of one epoch: a seeded permutation cut into consecutive
// batches (the last one may be short).
inline std::vector<std::vector<size_t>> BatchSchedule(size_t n, int batch_size,
                                                      uint64_t seed, int epoch) {
  Require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be positive");
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(DeriveSeed(seed, {0xba7c, static_cast<uint64_t>(epoch)}));
  Shuffle(order, rng);
  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < n; start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(n, start + static_cast<size_t>(batch_size));
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

// params -= lr * summed_grad / batch_size. Shared by plain and DP training so
// the two agree bit for bit when no privacy noise or clipping is active.
inline void SgdUpdate(std::vector<double>& params, const std::vector<double>& summed_grad,
                      size_t batch_size, double lr) {
  const double n = static_cast<double>(batch_size);
  for (size_t i = 0; i < params.size(); ++i) params[i] -= lr * (summed_grad[i] / n);
}

class AdamState {
 public:
  explicit AdamState(size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  void Update(std::vector<double>& params, const std::vector<double>& summed_grad,
              size_t batch_size, double lr) {
    ++step_;
    const double n = static_cast<double>(batch_size);
    const double c1 = 1.0 - std::pow(kBeta1, step_);
    const double c2 = 1.0 - std::pow(kBeta2, step_);
    for (size_t i = 0; i < params.size(); ++i) {
      const double g = summed_grad[i] / n;
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g;
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g * g;
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<double> m_, v_;
  int step_ = 0;
};

inline TrainResult Train(ModelParams params, std::span<const TrainingExample> data,
                         const Objective& objective, const TrainConfig& config) {
  Require(!data.empty(), ErrorCode::kInvalidArgument, "empty training set");
  Require(config.epochs >= 0, ErrorCode::kInvalidArgument, "negative epoch count");
  TrainResult result;
  AdamState adam(params.size());
  std::vector<double> sum(params.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const auto& batch : BatchSchedule(data.size(), config.batch_size, config.seed, epoch)) {
      std::fill(sum.begin(), sum.end(), 0.0);
      for (size_t idx : batch) {
        const LossGrad lg = ExampleLossGrad(params, data[idx], objective);
        Require(std::isfinite(lg.loss), ErrorCode::kDivergenceDetected,
                "non-finite training loss");
        epoch_loss += lg.loss;
        for (size_t i = 0; i < sum.size(); ++i) sum[i] += lg.grad[i];
      }
      if (config.optimizer == OptimizerKind::kSgd) {
        SgdUpdate(params.values(), sum, batch.size(), config.lr);
      } else {
        adam.Update(params.values(), sum, batch.size(), config.lr);
      }
    }
    epoch_loss /= static_cast<double>(data.size());
    Require(std::isfinite(epoch_loss) && params.AllFinite(),
            ErrorCode::kDivergenceDetected, "training diverged");
    result.epoch_losses.push_back(epoch_loss);
  }
  result.params = std::move(params);
  return result;
}

// Largest relative error between the analytic gradient and central
// differences at step h over a random `fraction` of the parameters (at least
// one). Relative error is |a - n| / max(|a|, |n|, floor).
inline double GradCheck(const ModelParams& params, const TrainingExample& ex,
                        const Objective& objective, uint64_t seed,
                        double fraction = 0.05, double h = 1e-5, double floor = 1e-6) {
  const std::vector<double> analytic = ExampleLossGrad(params, ex, objective).grad;
  std::vector<size_t> idx(params.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  Shuffle(idx, rng);
  const size_t count = std::max<size_t>(
      1, static_cast<size_t>(std::ceil(fraction * static_cast<double>(idx.size()))));
  ModelParams probe = params;
  double worst = 0.0;
  for (size_t c = 0; c < count && c < idx.size(); ++c) {
    const size_t i = idx[c];
    const double orig = probe.values()[i];
    probe.values()[i] = orig + h;
    const double up = ExampleLoss(probe, ex, objective);
    probe.values()[i] = orig - h;
    const double down = ExampleLoss(probe, ex, objective);
    probe.values()[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace pate_asr

#endif  // PATE_ASR_SEQMODEL_TRAIN_HPP_
