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
#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "pate_asr/corpus.hpp"
#include "pate_asr/mia.hpp"
#include "pate_asr/pate.hpp"

namespace pate_asr {
namespace {

constexpr ModelDims kTiny{4, 8, 3};

TEST(InvertTest, ZeroStepsReturnsTheInitialisation) {
  const ModelParams p = ModelParams::Init(Arch::kCtc, kTiny, 1);
  InversionConfig c;
  c.steps = 0;
  c.frames = 6;
  const std::vector<int> target = {0, 1};
  for (InitKind init : {InitKind::kZeros, InitKind::kRandom}) {
    c.init = init;
    const InversionResult r = Invert(p, target, c);
    EXPECT_EQ(r.features, InitialFeatures(6, 4, init, c.seed));
    EXPECT_EQ(r.queries, 0);
  }
  const Matrix zeros = InitialFeatures(6, 4, InitKind::kZeros, 3);
  for (double v : zeros.data()) EXPECT_EQ(v, 0.0);
}

TEST(InvertTest, LikelihoodTraceNeverDecreases) {
  for (Arch arch : {Arch::kCtc, Arch::kRnnt}) {
    const ModelParams p = ModelParams::Init(arch, kTiny, 2);
    InversionConfig c;
    c.steps = 40;
    c.frames = 6;
    const std::vector<int> target = {2, 0, 1};
    const InversionResult r = Invert(p, target, c);
    ASSERT_GE(r.trace.size(), 2u);
    for (size_t i = 1; i < r.trace.size(); ++i) EXPECT_GE(r.trace[i], r.trace[i - 1]);
    EXPECT_GT(r.trace.back(), r.trace.front());
    EXPECT_LE(r.queries, c.query_budget);
  }
}

TEST(InvertTest, QueryBudgetIsRespected) {
  const ModelParams p = ModelParams::Init(Arch::kCtc, kTiny, 2);
  InversionConfig c;
  c.frames = 6;
  c.query_budget = 7;
  const InversionResult r = Invert(p, std::vector<int>{0, 1}, c);
  EXPECT_LE(r.queries, 7);
}

TEST(InvertTest, InfeasibleTargets) {
  const ModelParams p = ModelParams::Init(Arch::kCtc, kTiny, 2);
  InversionConfig c;
  c.frames = 2;
  for (const std::vector<int>& target :
       {std::vector<int>{}, std::vector<int>{3}, std::vector<int>{1, 1}}) {
    try {
      Invert(p, target, c);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInfeasibleTarget);
    }
  }
}

TEST(SimilarityTest, Examples) {
  const Matrix a(3, 2, std::vector<double>{1, 5, 2, 3, 4, 9});
  EXPECT_NEAR(Similarity(a, a), 1.0, 1e-15);
  Matrix neg = a;
  for (double& v : neg.data()) v = -v;
  EXPECT_NEAR(Similarity(a, neg), -1.0, 1e-15);
  // Affine changes per column do not matter.
  Matrix scaled = a;
  for (size_t r = 0; r < 3; ++r) {
    scaled(r, 0) = 3.0 * a(r, 0) + 7.0;
    scaled(r, 1) = 0.5 * a(r, 1) - 2.0;
  }
  EXPECT_NEAR(Similarity(a, scaled), 1.0, 1e-14);
  // Orthogonal after standardising.
  const Matrix x(4, 1, std::vector<double>{1, -1, 1, -1});
  const Matrix y(4, 1, std::vector<double>{1, 1, -1, -1});
  EXPECT_NEAR(Similarity(x, y), 0.0, 1e-15);
}

TEST(SimilarityTest, SymmetricAndBounded) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix a(5, 3), b(5, 3);
    for (double& v : a.data()) v = rng.Normal();
    for (double& v : b.data()) v = rng.Normal();
    const double s = Similarity(a, b);
    EXPECT_NEAR(s, Similarity(b, a), 1e-15);
    EXPECT_LE(std::abs(s), 1.0);
  }
}

TEST(SimilarityTest, PoolsLongerReconstructions) {
  const Matrix ref(2, 1, std::vector<double>{0.0, 1.0});
  const Matrix rec(4, 1, std::vector<double>{0.1, -0.1, 2.0, 2.2});
  EXPECT_NEAR(Similarity(rec, ref), 1.0, 1e-15);
  const Matrix pooled = PoolSegments(rec, 2);
  EXPECT_NEAR(pooled(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(pooled(1, 0), 2.1, 1e-15);
  EXPECT_THROW(PoolSegments(rec, 5), Error);
}

TEST(SimilarityTest, ConstantInputIsRejected) {
  const Matrix flat(3, 2, 1.0);
  const Matrix a(3, 2, std::vector<double>{1, 5, 2, 3, 4, 9});
  try {
    Similarity(flat, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroVector);
  }
}

TEST(AttackTest, BaselineIsNeverProtectedFromItself) {
  const ModelParams p = ModelParams::Init(Arch::kCtc, kTiny, 5);
  const std::vector<AttackModel> models = {{"no_dp", INFINITY, p}, {"copy", 10.0, p}};
  InversionConfig c;
  c.frames = 6;
  c.steps = 10;
  const std::vector<int> target = {0, 1};
  const Matrix ref(2, 4, std::vector<double>{1, 0, 0, 1, 0, 1, 1, 0});
  const AttackReport r = RunAttack(models, target, ref, c, 5);
  ASSERT_EQ(r.summary.size(), 2u);
  EXPECT_FALSE(r.summary[0].is_protected);
  EXPECT_FALSE(r.summary[1].is_protected);
  EXPECT_EQ(r.summary[0].mean, r.summary[1].mean);
  EXPECT_EQ(r.rows.size(), 10u);
  EXPECT_EQ(RunAttack(models, target, ref, c, 5, "no_dp", 3).RowsCsv(), r.RowsCsv());
  EXPECT_THROW(RunAttack(models, target, ref, c, 4), Error);
  EXPECT_THROW(RunAttack(models, target, ref, c, 5, "missing"), Error);
}

TEST(AttackTest, MeanAndSe) {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const auto [m, se] = MeanAndSe(xs);
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_NEAR(se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

// Against a model that learned the data, inversion recovers the class means
// of the target far better than its own random starting point.
TEST(AttackTest, InversionBeatsTheRandomStart) {
  CorpusConfig cc;
  cc.vocab = 3;
  cc.feat_dim = 4;
  cc.utterances = 120;
  cc.min_frames_per_token = 2;
  cc.max_frames_per_token = 4;
  const Corpus corpus = GenerateCorpus(cc);
  std::vector<size_t> ids(corpus.size());
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  TrainConfig tc;
  tc.epochs = 15;
  tc.batch_size = 4;
  const ModelParams model = TrainTeacher(corpus, ids, {Arch::kCtc, kTiny}, tc, 1);
  const std::vector<int> target = {1, 2};
  const Matrix ref = TargetTemplate(corpus.class_means, target);
  InversionConfig c;
  c.frames = 8;
  c.steps = 100;
  double inverted = 0.0, start = 0.0;
  for (uint64_t trial = 0; trial < 10; ++trial) {
    c.seed = trial + 1;
    inverted += Similarity(Invert(model, target, c).features, ref);
    start += Similarity(InitialFeatures(c.frames, 4, c.init, c.seed), ref);
  }
  inverted /= 10.0;
  start /= 10.0;
  RecordProperty("inverted", std::to_string(inverted));
  RecordProperty("start", std::to_string(start));
  EXPECT_GT(inverted - start, 0.5) << "inverted " << inverted << " start " << start;
}

}  // namespace
}  // namespace pate_asr
