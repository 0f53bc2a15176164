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

#ifndef PATE_ASR_ACCOUNTANT_HPP_
#define PATE_ASR_ACCOUNTANT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pate_asr/csv.hpp"
#include "pate_asr/error.hpp"
#include "pate_asr/mechanisms.hpp"
#include "pate_asr/random.hpp"

namespace pate_asr {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultDelta = 1e-3;

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = kDefaultDelta;

  PrivacyBudget() = default;
  PrivacyBudget(double eps, double del) : epsilon(eps), delta(del) {
    Require(!std::isnan(eps) && eps >= 0.0, ErrorCode::kInvalidArgument,
            "epsilon must be non-negative");
    Require(del >= 0.0 && del < 1.0, ErrorCode::kInvalidDelta,
            "delta must lie in [0, 1)");
  }

  static PrivacyBudget Unbounded(double delta = kDefaultDelta) {
    return {kInfinity, delta};
  }
};

inline std::vector<double> DefaultOrders() {
  return {1.25, 1.5, 2, 3, 4, 8, 16, 32, 64, 256, 1024};
}

// Renyi-DP epsilon at each order of a fixed grid. Composition is entry-wise
// addition over a shared grid.
class RdpCurve {
 public:
  RdpCurve() : RdpCurve(DefaultOrders()) {}
  explicit RdpCurve(std::vector<double> orders)
      : orders_(std::move(orders)), epsilons_(orders_.size(), 0.0) {
    Validate();
  }
  RdpCurve(std::vector<double> orders, std::vector<double> epsilons)
      : orders_(std::move(orders)), epsilons_(std::move(epsilons)) {
    Validate();
  }

  const std::vector<double>& orders() const { return orders_; }
  const std::vector<double>& epsilons() const { return epsilons_; }
  size_t size() const { return orders_.size(); }

  RdpCurve Scaled(double k) const {
    RdpCurve out = *this;
    for (double& e : out.epsilons_) e *= k;
    return out;
  }

  friend bool operator==(const RdpCurve&, const RdpCurve&) = default;

 private:
  void Validate() const {
    Require(!orders_.empty(), ErrorCode::kInvalidOrder, "empty order grid");
    Require(orders_.size() == epsilons_.size(), ErrorCode::kGridMismatch,
            "orders and epsilons differ in length");
    for (size_t k = 0; k < orders_.size(); ++k) {
      Require(orders_[k] > 1.0, ErrorCode::kInvalidOrder, "order must exceed 1");
      Require(k == 0 || orders_[k] > orders_[k - 1], ErrorCode::kInvalidOrder,
              "orders must be strictly increasing");
      Require(!std::isnan(epsilons_[k]) && epsilons_[k] >= 0.0,
              ErrorCode::kInvalidArgument, "rdp epsilon must be non-negative");
    }
  }

  std::vector<double> orders_;
  std::vector<double> epsilons_;
};

// alpha * sensitivity^2 / (2 sigma^2).
inline double RdpGaussian(double sigma, double sensitivity, double alpha) {
  Require(alpha > 1.0, ErrorCode::kInvalidOrder, "order must exceed 1");
  Require(sigma > 0.0, ErrorCode::kInvalidScale, "sigma must be positive");
  Require(sensitivity >= 0.0, ErrorCode::kInvalidArgument,
          "sensitivity must be non-negative");
  return alpha * sensitivity * sensitivity / (2.0 * sigma * sigma);
}

// (1/(a-1)) log[ a/(2a-1) e^{(a-1)D/b} + (a-1)/(2a-1) e^{-aD/b} ], evaluated
// as (a-1)D/b + log1p(c * expm1(-(2a-1)D/b)) with c = (a-1)/(2a-1) so large
// orders do not overflow.
inline double RdpLaplace(double b, double sensitivity, double alpha) {
  Require(alpha > 1.0, ErrorCode::kInvalidOrder, "order must exceed 1");
  Require(b > 0.0, ErrorCode::kInvalidScale, "laplace scale must be positive");
  Require(sensitivity >= 0.0, ErrorCode::kInvalidArgument,
          "sensitivity must be non-negative");
  const double r = sensitivity / b;
  const double c = (alpha - 1.0) / (2.0 * alpha - 1.0);
  const double log_moment =
      (alpha - 1.0) * r + std::log1p(c * std::expm1(-(2.0 * alpha - 1.0) * r));
  return std::max(0.0, log_moment / (alpha - 1.0));
}

// Per-release curve of a noise spec at the given sensitivity. A zero-noise
// release of a sensitive quantity has infinite cost.
inline RdpCurve MechanismCurve(const NoiseSpec& spec, double sensitivity,
                               const std::vector<double>& orders = DefaultOrders()) {
  std::vector<double> eps(orders.size(), 0.0);
  for (size_t k = 0; k < orders.size(); ++k) {
    if (sensitivity == 0.0) {
      eps[k] = 0.0;
    } else if (spec.is_zero()) {
      eps[k] = kInfinity;
    } else if (spec.kind() == NoiseKind::kGaussian) {
      eps[k] = RdpGaussian(spec.scale(), sensitivity, orders[k]);
    } else {
      eps[k] = RdpLaplace(spec.scale(), sensitivity, orders[k]);
    }
  }
  return RdpCurve(orders, std::move(eps));
}

inline RdpCurve Compose(const std::vector<RdpCurve>& curves) {
  Require(!curves.empty(), ErrorCode::kInvalidArgument, "nothing to compose");
  std::vector<double> total(curves.front().size(), 0.0);
  for (const RdpCurve& c : curves) {
    Require(c.orders() == curves.front().orders(), ErrorCode::kGridMismatch,
            "curves use different order grids");
    for (size_t k = 0; k < total.size(); ++k) total[k] += c.epsilons()[k];
  }
  return RdpCurve(curves.front().orders(), std::move(total));
}

// min over orders of eps_a + log(1/delta)/(a-1).
inline double RdpToDp(const RdpCurve& curve, double delta) {
  Require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidDelta,
          "delta must lie in (0, 1)");
  const double log_inv_delta = -std::log(delta);
  double best = kInfinity;
  for (size_t k = 0; k < curve.size(); ++k) {
    const double alpha = curve.orders()[k];
    best = std::min(best, curve.epsilons()[k] + log_inv_delta / (alpha - 1.0));
  }
  return best;
}

// Sensitivity of a vote histogram when one teacher changes its vote: two
// counts move by one.
inline double VoteSensitivity(NoiseKind kind) {
  return kind == NoiseKind::kGaussian ? std::numbers::sqrt2 : 2.0;
}

// Epsilon spent by `releases` independent uses of `spec` at `sensitivity`.
inline double AccountedEpsilon(const NoiseSpec& spec, double releases,
                               double sensitivity, double delta,
                               const std::vector<double>& orders = DefaultOrders()) {
  if (releases <= 0.0) return 0.0;
  return RdpToDp(MechanismCurve(spec, sensitivity, orders).Scaled(releases), delta);
}

// Smallest noise scale (up to 1% relative slack in epsilon) whose K-fold
// composition stays within `target`.
inline NoiseSpec CalibrateNoise(const PrivacyBudget& target, double queries,
                                NoiseKind kind, double sensitivity,
                                const std::vector<double>& orders = DefaultOrders()) {
  Require(target.epsilon > 0.0, ErrorCode::kInvalidArgument,
          "target epsilon must be positive");
  Require(queries >= 1.0, ErrorCode::kInvalidArgument, "need at least one query");
  Require(kind != NoiseKind::kNone, ErrorCode::kInvalidArgument,
          "cannot calibrate a noiseless mechanism");
  if (sensitivity == 0.0 || std::isinf(target.epsilon)) return NoiseSpec(kind, 0.0);

  auto eps_at = [&](double scale) {
    return AccountedEpsilon(NoiseSpec(kind, scale), queries, sensitivity,
                            target.delta, orders);
  };
  double hi = sensitivity;
  int guard = 0;
  while (eps_at(hi) > target.epsilon) {
    hi *= 2.0;
    Require(++guard < 200 && std::isfinite(hi), ErrorCode::kNoConvergence,
            "no noise scale meets the target budget");
  }
  double lo = hi / 2.0;
  guard = 0;
  while (eps_at(lo) <= target.epsilon) {
    hi = lo;
    lo /= 2.0;
    Require(++guard < 200 && lo > 0.0, ErrorCode::kNoConvergence,
            "could not bracket the calibrated scale");
  }
  // Invariant: eps_at(lo) > target >= eps_at(hi).
  for (int iter = 0; iter < 200; ++iter) {
    if (eps_at(hi) >= 0.99 * target.epsilon) break;
    const double mid = std::sqrt(lo * hi);
    if (!(mid > lo && mid < hi)) break;
    if (eps_at(mid) <= target.epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return NoiseSpec(kind, hi);
}

// The lambda = K / (2 epsilon) reporting convention. Not used for noise.
inline double LambdaFromBudget(double k, double epsilon) {
  Require(epsilon > 0.0, ErrorCode::kInvalidArgument, "epsilon must be positive");
  Require(k >= 1.0, ErrorCode::kInvalidArgument, "K must be at least 1");
  return k / (2.0 * epsilon);
}

struct EmpiricalEpsilon {
  double epsilon = 0.0;
  double standard_error = 0.0;
  bool diverged = false;  // some event is possible under one input only
  size_t worst_event = 0;
};

// Monte Carlo lower estimate of epsilon from Pr[M(d) in S] <= e^eps
// Pr[M(d') in S] + delta, maximised over the events of a finite partition.
// `mechanism(rng, use_neighbor)` returns the event index of one output.
inline EmpiricalEpsilon EstimateEpsilonEmpirical(
    const std::function<size_t(Rng&, bool)>& mechanism, size_t num_events,
    size_t trials, double delta, uint64_t seed) {
  Require(trials >= 100000, ErrorCode::kInvalidArgument,
          "at least 1e5 trials are required");
  Require(num_events >= 1, ErrorCode::kInvalidArgument, "empty event partition");
  std::vector<double> hits_d(num_events, 0.0), hits_n(num_events, 0.0);
  Rng rng_d(DeriveSeed(seed, {0}));
  Rng rng_n(DeriveSeed(seed, {1}));
  for (size_t t = 0; t < trials; ++t) {
    const size_t a = mechanism(rng_d, false);
    const size_t b = mechanism(rng_n, true);
    Require(a < num_events && b < num_events, ErrorCode::kInvalidArgument,
            "mechanism returned an event outside the partition");
    hits_d[a] += 1.0;
    hits_n[b] += 1.0;
  }

  const double n = static_cast<double>(trials);
  EmpiricalEpsilon result;
  result.epsilon = 0.0;
  bool any = false;
  for (size_t e = 0; e < num_events; ++e) {
    Require(hits_d[e] >= 100.0 || hits_n[e] >= 100.0,
            ErrorCode::kInsufficientMass,
            "event " + std::to_string(e) + " has fewer than 100 hits");
    const double p = hits_d[e] / n;
    const double q = hits_n[e] / n;
    for (int dir = 0; dir < 2; ++dir) {
      const double num = (dir == 0 ? p : q) - delta;
      const double den = dir == 0 ? q : p;
      if (num <= 0.0) continue;
      if (den == 0.0) {
        result.diverged = true;
        result.epsilon = kInfinity;
        result.standard_error = 0.0;
        result.worst_event = e;
        return result;
      }
      const double est = std::log(num / den);
      if (!any || est > result.epsilon) {
        any = true;
        result.epsilon = est;
        result.worst_event = e;
        result.standard_error = std::sqrt((1.0 - p) / (n * p) + (1.0 - q) / (n * q));
      }
    }
  }
  return result;
}

struct AccountingReport {
  std::string mechanism;
  double scale = 0.0;
  double queries = 0.0;  // K
  RdpCurve rdp;
  double epsilon = 0.0;
  double delta = kDefaultDelta;
  double lambda = 0.0;

  nlohmann::json ToJson() const {
    return {{"mechanism", mechanism},
            {"scale", JsonNumber(scale)},
            {"K", queries},
            {"orders", rdp.orders()},
            {"rdp", JsonNumbers(rdp.epsilons())},
            {"epsilon", JsonNumber(epsilon)},
            {"delta", delta},
            {"lambda", JsonNumber(lambda)}};
  }

  static AccountingReport FromJson(const nlohmann::json& j) {
    AccountingReport r;
    r.mechanism = j.at("mechanism").get<std::string>();
    r.scale = JsonToDouble(j.at("scale"));
    r.queries = j.at("K").get<double>();
    r.rdp = RdpCurve(j.at("orders").get<std::vector<double>>(), JsonToDoubles(j.at("rdp")));
    r.epsilon = JsonToDouble(j.at("epsilon"));
    r.delta = j.at("delta").get<double>();
    r.lambda = JsonToDouble(j.at("lambda"));
    return r;
  }
};

}  // namespace pate_asr

#endif  // PATE_ASR_ACCOUNTANT_HPP_
