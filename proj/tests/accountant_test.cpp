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
#include "pate_asr/accountant.hpp"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "rdp_oracle.hpp"

namespace pate_asr {
namespace {

constexpr double kScales[] = {0.5, 1.0, 2.0, 5.0, 10.0};
constexpr double kSensitivities[] = {0.1, 0.5, 1.0, 2.0, 3.0};

double RelErr(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

TEST(RdpGaussianTest, MatchesQuadratureOracle) {
  for (double s : kScales) {
    for (double d : kSensitivities) {
      for (double a : DefaultOrders()) {
        EXPECT_LE(RelErr(RdpGaussian(s, d, a), testing::GaussianRenyiByQuadrature(s, d, a)),
                  1e-6)
            << "sigma=" << s << " d=" << d << " alpha=" << a;
      }
    }
  }
}

TEST(RdpLaplaceTest, MatchesQuadratureOracle) {
  for (double b : kScales) {
    for (double d : kSensitivities) {
      for (double a : DefaultOrders()) {
        EXPECT_LE(RelErr(RdpLaplace(b, d, a), testing::LaplaceRenyiByQuadrature(b, d, a)), 1e-6)
            << "b=" << b << " d=" << d << " alpha=" << a;
      }
    }
  }
}

TEST(RdpLaplaceTest, ApproachesPureEpsilonAtLargeOrder) {
  EXPECT_NEAR(RdpLaplace(1.0, 1.0, 1e6), 1.0, 1e-5);
  EXPECT_LE(RdpLaplace(1.0, 1.0, 1024), 1.0);
}

// A moved vote shifts two counts by one each. Its cost is bounded by the
// single-coordinate shift of two that the vote accounting charges.
TEST(RdpLaplaceTest, TwoUnitShiftsCostNoMoreThanOneDoubleShift) {
  for (double b : kScales) {
    for (double a : DefaultOrders()) {
      EXPECT_LE(2.0 * RdpLaplace(b, 1.0, a), RdpLaplace(b, 2.0, a) + 1e-12);
    }
  }
}

TEST(RdpCurveTest, GaussianCurvesNonNegativeAndNonDecreasing) {
  for (double s : kScales) {
    const RdpCurve c = MechanismCurve(NoiseSpec::Gaussian(s), 1.0);
    for (size_t k = 0; k < c.size(); ++k) {
      EXPECT_GE(c.epsilons()[k], 0.0);
      if (k > 0) {
        EXPECT_GE(c.epsilons()[k], c.epsilons()[k - 1]);
      }
    }
  }
}

TEST(RdpCurveTest, RejectsBadGrids) {
  EXPECT_THROW(RdpCurve(std::vector<double>{}), Error);
  EXPECT_THROW(RdpCurve(std::vector<double>{1.0, 2.0}), Error);
  EXPECT_THROW(RdpCurve(std::vector<double>{3.0, 2.0}), Error);
  EXPECT_THROW(RdpCurve({2.0}, {1.0, 2.0}), Error);
  EXPECT_THROW(RdpCurve({2.0}, {-1.0}), Error);
}

TEST(ComposeTest, AddsEntrywiseAndRejectsGridMismatch) {
  const RdpCurve a({2.0, 4.0}, {1.0, 2.0});
  const RdpCurve b({2.0, 4.0}, {0.5, 0.25});
  EXPECT_EQ(Compose({a, b}).epsilons(), (std::vector<double>{1.5, 2.25}));
  try {
    Compose({a, RdpCurve({2.0, 8.0}, {1.0, 1.0})});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGridMismatch);
  }
}

TEST(ComposeTest, NeverReducesCost) {
  for (double s : kScales) {
    for (NoiseKind kind : {NoiseKind::kGaussian, NoiseKind::kLaplace}) {
      const RdpCurve c = MechanismCurve(NoiseSpec(kind, s), 1.0);
      EXPECT_GE(RdpToDp(Compose({c, c}), 1e-3), RdpToDp(c, 1e-3));
    }
  }
}

// Reference values from an independent 50-digit evaluation of
// min_a eps_a + log(1/delta)/(a-1).
TEST(RdpToDpTest, SpotValues) {
  EXPECT_NEAR(RdpToDp(RdpCurve({2.0}, {1.0}), 1e-3), 7.9077552789821371, 1e-9);
  EXPECT_NEAR(RdpToDp(MechanismCurve(NoiseSpec::Gaussian(1.0), 1.0), 1e-3),
              4.3025850929940457, 1e-9);
  EXPECT_NEAR(RdpToDp(MechanismCurve(NoiseSpec::Gaussian(3.0), std::sqrt(2.0)).Scaled(50), 1e-5),
              22.423129399151781, 1e-9);
  EXPECT_NEAR(RdpToDp(MechanismCurve(NoiseSpec::Laplace(10.0), 2.0).Scaled(100), 1e-3),
              8.8795309826068272, 1e-9);
  EXPECT_NEAR(RdpToDp(MechanismCurve(NoiseSpec::Laplace(1.0), 1.0), 1e-3),
              1.0060753631465497, 1e-9);
}

TEST(RdpToDpTest, RejectsBadDelta) {
  const RdpCurve c({2.0}, {1.0});
  for (double d : {0.0, 1.0, -0.1}) {
    try {
      RdpToDp(c, d);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidDelta);
    }
  }
}

TEST(MechanismCurveTest, ZeroNoiseIsInfinite) {
  EXPECT_TRUE(std::isinf(RdpToDp(MechanismCurve(NoiseSpec::None(), 1.0), 1e-3)));
  EXPECT_EQ(RdpToDp(MechanismCurve(NoiseSpec::None(), 0.0), 1e-3),
            std::log(1e3) / (1024 - 1.0));
}

TEST(CalibrateNoiseTest, SingleGaussianQueryMeetsLargeTarget) {
  const PrivacyBudget target(50.0, 1e-3);
  const NoiseSpec s = CalibrateNoise(target, 1, NoiseKind::kGaussian, 1.0);
  EXPECT_LT(s.scale(), 1.0);
  EXPECT_LE(AccountedEpsilon(s, 1, 1.0, 1e-3), 50.0);
}

TEST(CalibrateNoiseTest, LaplaceHundredQueries) {
  const NoiseSpec s = CalibrateNoise({1.0, 1e-3}, 100, NoiseKind::kLaplace, 2.0);
  const double eps = AccountedEpsilon(s, 100, 2.0, 1e-3);
  EXPECT_GT(eps, 0.99);
  EXPECT_LE(eps, 1.0);
}

TEST(CalibrateNoiseTest, ScaleNonDecreasingInQueries) {
  for (NoiseKind kind : {NoiseKind::kGaussian, NoiseKind::kLaplace}) {
    double prev = 0.0;
    for (double k = 1; k <= 4096; k *= 2) {
      const double s = CalibrateNoise({10.0, 1e-3}, k, kind, 1.0).scale();
      EXPECT_GE(s, prev) << "K=" << k;
      prev = s;
    }
  }
}

TEST(CalibrateNoiseTest, ReaccountedNeverExceedsTarget) {
  for (double eps : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
    for (double k : {1.0, 240.0, 5000.0}) {
      for (NoiseKind kind : {NoiseKind::kGaussian, NoiseKind::kLaplace}) {
        const NoiseSpec s = CalibrateNoise({eps, 1e-3}, k, kind, 2.0);
        EXPECT_LE(AccountedEpsilon(s, k, 2.0, 1e-3), eps);
      }
    }
  }
}

TEST(CalibrateNoiseTest, RejectsNoiselessKind) {
  EXPECT_THROW(CalibrateNoise({1.0, 1e-3}, 1, NoiseKind::kNone, 1.0), Error);
}

TEST(LambdaFromBudgetTest, Arithmetic) {
  EXPECT_EQ(LambdaFromBudget(100, 10), 5.0);
  EXPECT_EQ(LambdaFromBudget(1000, 1), 500.0);
  EXPECT_LT(LambdaFromBudget(1000, 1e12), 1e-8);
  EXPECT_THROW(LambdaFromBudget(100, 0), Error);
}

TEST(EstimateEpsilonEmpiricalTest, IdenticalInputsGiveNearZero) {
  const auto mech = [](Rng& rng, bool) -> size_t {
    return NoisyMax(VoteHistogram({3, 2}), NoiseSpec::Laplace(1.0), rng);
  };
  const EmpiricalEpsilon e = EstimateEpsilonEmpirical(mech, 2, 200000, 0.0, 3);
  EXPECT_FALSE(e.diverged);
  EXPECT_LE(e.epsilon, 3.0 * e.standard_error);
}

TEST(EstimateEpsilonEmpiricalTest, DeterministicMechanismDiverges) {
  const auto mech = [](Rng&, bool neighbor) -> size_t { return neighbor ? 1 : 0; };
  const EmpiricalEpsilon e = EstimateEpsilonEmpirical(mech, 2, 100000, 0.0, 3);
  EXPECT_TRUE(e.diverged);
  EXPECT_TRUE(std::isinf(e.epsilon));
}

TEST(EstimateEpsilonEmpiricalTest, InsufficientMass) {
  const auto mech = [](Rng&, bool) -> size_t { return 0; };
  try {
    EstimateEpsilonEmpirical(mech, 2, 100000, 0.0, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientMass);
  }
  EXPECT_THROW(EstimateEpsilonEmpirical(mech, 1, 1000, 0.0, 3), Error);
}

TEST(EstimateEpsilonEmpiricalTest, NoisyMaxWithinAnalyticBound) {
  for (double b : {1.0, 2.0}) {
    const auto mech = [b](Rng& rng, bool neighbor) -> size_t {
      return NoisyMax(VoteHistogram(neighbor ? std::vector<int>{2, 3} : std::vector<int>{3, 2}),
                      NoiseSpec::Laplace(b), rng);
    };
    const EmpiricalEpsilon e = EstimateEpsilonEmpirical(mech, 2, 200000, 0.0, 17);
    EXPECT_LE(e.epsilon, 2.0 / b + 3.0 * e.standard_error);
    EXPECT_GT(e.epsilon, 0.0);
  }
}

TEST(AccountingReportTest, JsonRoundTripWithInfinity) {
  AccountingReport r;
  r.mechanism = "vote_noisy_max/gaussian";
  r.scale = 0.0;
  r.queries = 240;
  r.rdp = MechanismCurve(NoiseSpec::None(), 1.0);
  r.epsilon = kInfinity;
  r.lambda = 0.0;
  const nlohmann::json j = r.ToJson();
  for (const char* key : {"mechanism", "scale", "K", "orders", "rdp", "epsilon", "delta",
                          "lambda"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const AccountingReport back = AccountingReport::FromJson(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.rdp, r.rdp);
  EXPECT_TRUE(std::isinf(back.epsilon));
  EXPECT_EQ(back.queries, 240);
}

}  // namespace
}  // namespace pate_asr
