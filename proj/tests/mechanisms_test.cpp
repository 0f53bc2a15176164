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
#include "pate_asr/mechanisms.hpp"

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gtest/gtest.h"

namespace pate_asr {
namespace {

constexpr int kNumSamples = 1000000;

TEST(SampleNoiseTest, ZeroScaleReturnsZeroWithoutDrawing) {
  Rng a(5), b(5);
  EXPECT_EQ(SampleNoise(NoiseSpec::Laplace(0.0), a), 0.0);
  EXPECT_EQ(SampleNoise(NoiseSpec::Gaussian(0.0), a), 0.0);
  EXPECT_EQ(SampleNoise(NoiseSpec::None(), a), 0.0);
  EXPECT_EQ(a.NextU64(), b.NextU64());
}

TEST(SampleNoiseTest, LaplaceVariance) {
  Rng rng(11);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < kNumSamples; ++i) {
    const double x = SampleNoise(NoiseSpec::Laplace(1.0), rng);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / kNumSamples;
  const double var = sq / kNumSamples - mean * mean;
  EXPECT_GE(var, 1.98);
  EXPECT_LE(var, 2.02);
}

TEST(SampleNoiseTest, GaussianMeanAndVariance) {
  Rng rng(12);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < kNumSamples; ++i) {
    const double x = SampleNoise(NoiseSpec::Gaussian(2.0), rng);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / kNumSamples;
  // 2 / sqrt(1e6) is one standard error of the mean.
  EXPECT_LE(std::abs(mean), 4.0 * 2.0 / std::sqrt(kNumSamples));
  EXPECT_NEAR(sq / kNumSamples - mean * mean, 4.0, 0.04);
}

TEST(NoiseSpecTest, RejectsNegativeScale) {
  EXPECT_THROW(NoiseSpec::Laplace(-1.0), Error);
  EXPECT_THROW(NoiseSpec(NoiseKind::kGaussian, std::nan("")), Error);
}

TEST(NoiseSpecTest, ParsesNames) {
  EXPECT_EQ(ParseNoiseKind("gnmax"), NoiseKind::kGaussian);
  EXPECT_EQ(ParseNoiseKind("lnmax"), NoiseKind::kLaplace);
  EXPECT_EQ(ParseNoiseKind("none"), NoiseKind::kNone);
  EXPECT_THROW(ParseNoiseKind("uniform"), Error);
}

TEST(VoteHistogramTest, Invariants) {
  const std::vector<int> votes = {0, 2, 2, 1, 2};
  const VoteHistogram h = VoteHistogram::FromVotes(votes, 3);
  EXPECT_EQ(h.counts(), (std::vector<int>{1, 1, 3}));
  EXPECT_EQ(h.num_voters(), 5);
  EXPECT_THROW(VoteHistogram({4}), Error);
  EXPECT_THROW(VoteHistogram({1, -1}), Error);
  const std::vector<int> bad = {3};
  EXPECT_THROW(VoteHistogram::FromVotes(bad, 3), Error);
}

TEST(NoisyMaxTest, ZeroNoiseIsPlurality) {
  Rng rng(1);
  EXPECT_EQ(NoisyMax(VoteHistogram({5, 3, 2}), NoiseSpec::None(), rng), 0u);
  EXPECT_EQ(NoisyMax(VoteHistogram({2, 3, 5}), NoiseSpec::Gaussian(0.0), rng), 2u);
}

TEST(NoisyMaxTest, TiesGoToLowestIndex) {
  Rng rng(1);
  EXPECT_EQ(NoisyMax(VoteHistogram({4, 4}), NoiseSpec::None(), rng), 0u);
  EXPECT_EQ(NoisyMax(VoteHistogram({1, 4, 4}), NoiseSpec::Laplace(0.0), rng), 1u);
}

// P(Y1 - Y0 > 10) for iid Laplace(1), by numerical convolution.
double LaplaceGapTail(double gap) {
  auto density = [](double y) { return 0.5 * std::exp(-std::abs(y)); };
  auto survival = [](double z) {
    return z >= 0.0 ? 0.5 * std::exp(-z) : 1.0 - 0.5 * std::exp(z);
  };
  auto integrand = [&](double y0) { return density(y0) * survival(gap + y0); };
  using boost::math::quadrature::gauss_kronrod;
  const double inf = std::numeric_limits<double>::infinity();
  return gauss_kronrod<double, 61>::integrate(integrand, -inf, -gap, 15, 1e-14) +
         gauss_kronrod<double, 61>::integrate(integrand, -gap, 0.0, 15, 1e-14) +
         gauss_kronrod<double, 61>::integrate(integrand, 0.0, inf, 15, 1e-14);
}

TEST(NoisyMaxTest, LaplaceFlipRateMatchesConvolution) {
  const double p = LaplaceGapTail(10.0);
  constexpr int kTrials = 100000;
  Rng rng(2024);
  int hits = 0;
  const VoteHistogram h({10, 0});
  for (int i = 0; i < kTrials; ++i) hits += NoisyMax(h, NoiseSpec::Laplace(1.0), rng) == 1;
  const double se = std::sqrt(p * (1.0 - p) / kTrials);
  EXPECT_NEAR(static_cast<double>(hits) / kTrials, p, 3.0 * se);
}

TEST(NoisyCountsTest, SameSeedSameOutput) {
  Rng a(9), b(9);
  const VoteHistogram h({3, 1, 0, 6});
  EXPECT_EQ(NoisyCounts(h, NoiseSpec::Gaussian(1.5), a),
            NoisyCounts(h, NoiseSpec::Gaussian(1.5), b));
}

std::vector<double> Aggregate(const std::vector<std::vector<double>>& p,
                              const std::vector<double>& w, const NoiseSpec& spec,
                              uint64_t seed = 1,
                              ClipFallback fallback = ClipFallback::kCleanAverage) {
  Rng rng(seed);
  return NoisyAggregatePosterior(p, w, spec, rng, fallback);
}

TEST(NoisyAggregatePosteriorTest, SingleTeacherIdentity) {
  EXPECT_EQ(Aggregate({{0.7, 0.3}}, {1.0}, NoiseSpec::None()),
            (std::vector<double>{0.7, 0.3}));
}

TEST(NoisyAggregatePosteriorTest, SymmetricPair) {
  EXPECT_EQ(Aggregate({{1, 0}, {0, 1}}, {0.5, 0.5}, NoiseSpec::None()),
            (std::vector<double>{0.5, 0.5}));
}

TEST(NoisyAggregatePosteriorTest, WeightedPair) {
  const auto out = Aggregate({{0.8, 0.2}, {0.6, 0.4}}, {0.25, 0.75}, NoiseSpec::None());
  EXPECT_NEAR(out[0], 0.65, 1e-15);
  EXPECT_NEAR(out[1], 0.35, 1e-15);
}

TEST(NoisyAggregatePosteriorTest, NoneAndZeroScaleAreBitIdentical) {
  const std::vector<std::vector<double>> p = {{0.1, 0.2, 0.7}, {0.3, 0.3, 0.4}};
  const std::vector<double> w = {0.4, 0.6};
  EXPECT_EQ(Aggregate(p, w, NoiseSpec::None()), Aggregate(p, w, NoiseSpec::Laplace(0.0)));
  EXPECT_EQ(Aggregate(p, w, NoiseSpec::None()), Aggregate(p, w, NoiseSpec::Gaussian(0.0)));
}

TEST(NoisyAggregatePosteriorTest, OutputAlwaysOnSimplex) {
  const std::vector<std::vector<double>> p = {{0.1, 0.2, 0.7}, {0.3, 0.3, 0.4}, {1, 0, 0}};
  const std::vector<double> w = {0.2, 0.3, 0.5};
  for (uint64_t seed = 0; seed < 500; ++seed) {
    for (const NoiseSpec& spec : {NoiseSpec::Laplace(0.5), NoiseSpec::Gaussian(3.0)}) {
      const auto out = Aggregate(p, w, spec, seed, ClipFallback::kUniform);
      double sum = 0.0;
      for (double x : out) {
        EXPECT_GE(x, 0.0);
        sum += x;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(NoisyAggregatePosteriorTest, FallbackWhenEverythingClips) {
  // Enormous noise makes every entry negative for some seed.
  const std::vector<std::vector<double>> p = {{0.9, 0.1}};
  const std::vector<double> w = {1.0};
  bool saw_fallback = false;
  for (uint64_t seed = 0; seed < 64 && !saw_fallback; ++seed) {
    const auto clean = Aggregate(p, w, NoiseSpec::Gaussian(1e6), seed);
    const auto uniform = Aggregate(p, w, NoiseSpec::Gaussian(1e6), seed, ClipFallback::kUniform);
    if (clean == p[0]) {
      saw_fallback = true;
      EXPECT_EQ(uniform, (std::vector<double>{0.5, 0.5}));
    }
  }
  EXPECT_TRUE(saw_fallback);
}

TEST(NoisyAggregatePosteriorTest, Errors) {
  EXPECT_THROW(Aggregate({{0.5, 0.5}, {1.0}}, {0.5, 0.5}, NoiseSpec::None()), Error);
  try {
    Aggregate({{0.5, 0.5}, {0.5, 0.5}}, {0.7, 0.7}, NoiseSpec::None());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidWeights);
  }
  try {
    Aggregate({{0.5, 0.5}, {1.0, 0.0, 0.0}}, {0.5, 0.5}, NoiseSpec::None());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

}  // namespace
}  // namespace pate_asr
