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
#include "pate_asr/seqmodel/checkpoint.hpp"
#include "pate_asr/seqmodel/ctc.hpp"
#include "pate_asr/seqmodel/decode.hpp"
#include "pate_asr/seqmodel/losses.hpp"
#include "pate_asr/seqmodel/rnnt.hpp"
#include "pate_asr/seqmodel/train.hpp"
#include "seq_oracle.hpp"

namespace pate_asr {
namespace {

using testing::CtcProbByEnumeration;
using testing::DropBlankProbByEnumeration;
using testing::RandomLabels;
using testing::RandomLatticeLogits;
using testing::RandomLogits;
using testing::RnntProbByEnumeration;

constexpr ModelDims kTiny{3, 4, 3};

TEST(CtcLossTest, MatchesEnumeration) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t T = 1 + rng.UniformIndex(4);
    const int V = 1 + static_cast<int>(rng.UniformIndex(2));  // O = V + 1 <= 3
    const Matrix lp = LogSoftmaxRows(RandomLogits(rng, T, V + 1));
    const auto y = RandomLabels(rng, rng.UniformIndex(T + 1), V);
    if (!CtcFeasible(T, y)) continue;
    const double expect = CtcProbByEnumeration(lp, y, V);
    const double got = std::exp(-CtcLossFromLogProbs(lp, y, V).loss);
    EXPECT_NEAR(got, expect, 1e-10 * std::max(1.0, expect));
  }
}

TEST(CtcLossTest, GradientMatchesFiniteDifferences) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix logits = RandomLogits(rng, 4, 3);
    const std::vector<int> y = RandomLabels(rng, 2, 2);
    const CtcResult r = CtcLossFromLogProbs(LogSoftmaxRows(logits), y, 2);
    for (size_t i = 0; i < logits.data().size(); ++i) {
      Matrix up = logits, down = logits;
      up.data()[i] += 1e-6;
      down.data()[i] -= 1e-6;
      const double num = (CtcLossFromLogProbs(LogSoftmaxRows(up), y, 2).loss -
                          CtcLossFromLogProbs(LogSoftmaxRows(down), y, 2).loss) /
                         2e-6;
      EXPECT_NEAR(r.grad_logits.data()[i], num, 1e-6);
    }
  }
}

TEST(CtcLossTest, KnownValues) {
  // One frame, one label: the loss is -log p(label).
  Matrix post(1, 2, std::vector<double>{0.25, 0.75});
  EXPECT_NEAR(CtcLoss(post, std::vector<int>{0}, 1).loss, -std::log(0.25), 1e-15);
  // Empty label on two frames: only the all-blank path.
  Matrix two(2, 2, std::vector<double>{0.5, 0.5, 0.1, 0.9});
  EXPECT_NEAR(CtcLoss(two, std::vector<int>{}, 1).loss, -std::log(0.45), 1e-14);
}

TEST(CtcLossTest, Errors) {
  Matrix post(2, 3, 1.0 / 3.0);
  try {
    CtcLoss(post, std::vector<int>{0, 0}, 2);  // needs three frames
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleAlignment);
  }
  EXPECT_THROW(CtcLoss(post, std::vector<int>{2}, 2), Error);
  EXPECT_THROW(CtcLoss(post, std::vector<int>{0}, 5), Error);
  EXPECT_EQ(CtcMinFrames(std::vector<int>{1, 1, 2, 2}), 6u);
}

TEST(RnntLossTest, MatchesEnumeration) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t T = 1 + rng.UniformIndex(3);
    const size_t U = rng.UniformIndex(3);
    const Lattice lp = LogSoftmaxLattice(RandomLatticeLogits(rng, T, U + 1, 3));
    const auto y = RandomLabels(rng, U, 2);
    const double expect = RnntProbByEnumeration(lp, y, 2);
    const double got = std::exp(-RnntLossFromLogProbs(lp, y, 2).loss);
    EXPECT_NEAR(got, expect, 1e-10 * std::max(1.0, expect));
  }
}

TEST(RnntLossTest, GradientMatchesFiniteDifferences) {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Lattice logits = RandomLatticeLogits(rng, 3, 3, 3);
    const std::vector<int> y = RandomLabels(rng, 2, 2);
    const RnntResult r = RnntLossFromLogProbs(LogSoftmaxLattice(logits), y, 2);
    for (size_t i = 0; i < logits.data().size(); ++i) {
      Lattice up = logits, down = logits;
      up.data()[i] += 1e-6;
      down.data()[i] -= 1e-6;
      const double num = (RnntLossFromLogProbs(LogSoftmaxLattice(up), y, 2).loss -
                          RnntLossFromLogProbs(LogSoftmaxLattice(down), y, 2).loss) /
                         2e-6;
      EXPECT_NEAR(r.grad_logits.data()[i], num, 1e-6);
    }
  }
}

TEST(RnntLossTest, SingleFrameEmptyLabel) {
  Lattice post(1, 1, 2);
  post(0, 0, 0) = 0.3;
  post(0, 0, 1) = 0.7;
  EXPECT_NEAR(RnntLoss(post, std::vector<int>{}, 1).loss, -std::log(0.7), 1e-15);
}

TrainingExample RandomExample(Rng& rng, size_t T, int vocab, size_t U) {
  TrainingExample ex;
  ex.features = RandomLogits(rng, T, kTiny.input, 1.0);
  ex.labels = RandomLabels(rng, U, vocab);
  ex.frame_labels.resize(T);
  for (int& v : ex.frame_labels) v = static_cast<int>(rng.UniformIndex(vocab + 1));
  ex.frame_targets = ExpMatrix(LogSoftmaxRows(RandomLogits(rng, T, vocab + 1)));
  return ex;
}

struct GradCase {
  Arch arch;
  LossKind kind;
  double kd_weight;
};

TEST(GradCheckTest, AllModelsAndLosses) {
  const std::vector<GradCase> cases = {
      {Arch::kCtc, LossKind::kSequence, 0.0},
      {Arch::kRnnt, LossKind::kSequence, 0.0},
      {Arch::kFrameClassifier, LossKind::kSequence, 0.0},
      {Arch::kCtc, LossKind::kFrameCe, 0.0},
      {Arch::kCtc, LossKind::kSoftFrameCe, 0.0},
      {Arch::kFrameClassifier, LossKind::kQuadratic, 0.0},
      {Arch::kCtc, LossKind::kFrameCe, 0.3},
      {Arch::kCtc, LossKind::kNone, 1.0},
      {Arch::kRnnt, LossKind::kSequence, 0.5},
  };
  Rng rng(15);
  for (const auto& c : cases) {
    for (int trial = 0; trial < 5; ++trial) {
      const ModelParams p = ModelParams::Init(c.arch, kTiny, 100 + trial);
      TrainingExample ex = RandomExample(rng, 5, kTiny.vocab, 2);
      ex.nbest = {{{0, 1}, 0.0, 0.6}, {{1}, 0.0, 0.3}, {{2, 2}, 0.0, 0.1}};
      const double err = GradCheck(p, ex, {c.kind, c.kd_weight}, trial, 1.0);
      EXPECT_LT(err, 1e-4) << ArchName(c.arch) << " " << LossKindName(c.kind) << " kd "
                           << c.kd_weight;
    }
  }
}

TEST(GradCheckTest, InputGradientMatchesFiniteDifferences) {
  Rng rng(16);
  for (Arch arch : {Arch::kCtc, Arch::kRnnt}) {
    const ModelParams p = ModelParams::Init(arch, kTiny, 3);
    const TrainingExample ex = RandomExample(rng, 4, kTiny.vocab, 2);
    const LossGrad lg = SequenceNll(p, ex.features, ex.labels, true);
    for (size_t i = 0; i < ex.features.data().size(); ++i) {
      Matrix up = ex.features, down = ex.features;
      up.data()[i] += 1e-6;
      down.data()[i] -= 1e-6;
      const double num = (SequenceNll(p, up, ex.labels, false).loss -
                          SequenceNll(p, down, ex.labels, false).loss) /
                         2e-6;
      EXPECT_NEAR(lg.input_grad.data()[i], num, 1e-6);
    }
  }
}

TEST(KdLossTest, SingleHypothesisIsSequenceNll) {
  Rng rng(17);
  for (Arch arch : {Arch::kCtc, Arch::kRnnt}) {
    const ModelParams p = ModelParams::Init(arch, kTiny, 4);
    const Matrix x = RandomLogits(rng, 5, kTiny.input, 1.0);
    const std::vector<Hypothesis> one = {{{0, 2}, -1.0, 1.0}};
    EXPECT_NEAR(KdLoss(one, p, x).loss, SequenceNll(p, x, one[0].tokens, false).loss, 1e-12);
  }
}

TEST(KdLossTest, BoundedBelowByTeacherEntropy) {
  Rng rng(18);
  const std::vector<Hypothesis> nbest = {{{0}, 0.0, 0.5}, {{1}, 0.0, 0.25}, {{0, 1}, 0.0, 0.25}};
  double entropy = 0.0;
  for (const auto& h : nbest) entropy -= h.normalized_prob * std::log(h.normalized_prob);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams p = ModelParams::Init(Arch::kCtc, kTiny, trial);
    const Matrix x = RandomLogits(rng, 4, kTiny.input, 1.0);
    EXPECT_GE(KdLoss(nbest, p, x).loss, entropy - 1e-12);
  }
}

TEST(KdLossTest, InfeasibleHypothesisIsFloored) {
  const Matrix lp = LogSoftmaxRows(Matrix(2, 3, 0.0));
  const std::vector<Hypothesis> nbest = {{{0, 0}, 0.0, 1.0}};  // needs 3 frames
  const auto [loss, grad] = KdLossFromLogProbs(nbest, lp, 2);
  EXPECT_EQ(loss, -kKdLogFloor);
  for (double g : grad.data()) EXPECT_EQ(g, 0.0);
}

// Rows dominated by one symbol.
Matrix PeakyLogProbs(Rng& rng, size_t T, size_t O) {
  Matrix logits(T, O, 0.0);
  for (size_t t = 0; t < T; ++t) logits(t, rng.UniformIndex(O)) = 6.0;
  return LogSoftmaxRows(logits);
}

TEST(DecodeTest, BeamOneMatchesGreedyOnPeakyInput) {
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix lp = PeakyLogProbs(rng, 6, 4);
    EXPECT_EQ(CtcPrefixBeamSearch(lp, 3, 1).at(0).tokens, CtcGreedy(lp, 3));
    EXPECT_EQ(DropBlankBeamSearch(lp, 3, 1).at(0).tokens, DropBlanks(FramewiseArgMax(lp), 3));
  }
}

TEST(DecodeTest, WideBeamScoresAreExact) {
  Rng rng(20);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix lp = LogSoftmaxRows(RandomLogits(rng, 3, 3));
    for (const auto& h : CtcPrefixBeamSearch(lp, 2, 1000)) {
      EXPECT_NEAR(std::exp(h.log_prob), CtcProbByEnumeration(lp, h.tokens, 2), 1e-12);
    }
    double mass = 0.0;
    for (const auto& h : DropBlankBeamSearch(lp, 2, 1000)) {
      EXPECT_NEAR(std::exp(h.log_prob), DropBlankProbByEnumeration(lp, h.tokens, 2), 1e-12);
      mass += std::exp(h.log_prob);
    }
    EXPECT_NEAR(mass, 1.0, 1e-12);
  }
}

TEST(DecodeTest, NBestIsSortedAndNormalized) {
  Rng rng(21);
  const Matrix lp = LogSoftmaxRows(RandomLogits(rng, 6, 4));
  const auto hyps = CtcPrefixBeamSearch(lp, 3, 4);
  ASSERT_EQ(hyps.size(), 4u);
  double mass = 0.0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    if (i > 0) {
      EXPECT_GE(hyps[i - 1].log_prob, hyps[i].log_prob);
    }
    mass += hyps[i].normalized_prob;
  }
  EXPECT_NEAR(mass, 1.0, 1e-12);
  EXPECT_THROW(CtcPrefixBeamSearch(lp, 3, 0), Error);
}

TEST(DecodeTest, CollapseRules) {
  const std::vector<int> path = {1, 1, 3, 1, 0, 0, 3};
  EXPECT_EQ(CtcCollapse(path, 3), (std::vector<int>{1, 1, 0}));
  EXPECT_EQ(DropBlanks(path, 3), (std::vector<int>{1, 1, 1, 0, 0}));
}

TEST(DecodeTest, RnntBeamAndGreedyAreConsistent) {
  Rng rng(22);
  const ModelParams p = ModelParams::Init(Arch::kRnnt, kTiny, 5);
  const Matrix x = RandomLogits(rng, 6, kTiny.input, 1.0);
  const RnntGreedyResult g = RnntGreedy(p, x);
  EXPECT_EQ(g.frame_labels.size(), 6u);
  EXPECT_TRUE(IsRowStochastic(g.frame_posteriors, 1e-12));
  const auto hyps = RnntBeamSearch(p, x, 4);
  ASSERT_FALSE(hyps.empty());
  for (const auto& h : hyps) {
    // Beam scores are path scores, so they bound the summed sequence probability.
    EXPECT_LE(h.log_prob, -SequenceNll(p, x, h.tokens, false).loss + 1e-9);
  }
}

TEST(CheckpointTest, RoundTripAndCorruption) {
  for (Arch arch : {Arch::kFrameClassifier, Arch::kCtc, Arch::kRnnt}) {
    const ModelParams p = ModelParams::Init(arch, kTiny, 6);
    const std::string bytes = SerializeCheckpoint(p, 42);
    const Checkpoint ck = DeserializeCheckpoint(bytes);
    EXPECT_EQ(ck.params, p);
    EXPECT_EQ(ck.seed, 42u);
    EXPECT_EQ(SerializeCheckpoint(ck.params, ck.seed), bytes);
    std::string bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(DeserializeCheckpoint(bad), Error);
    EXPECT_THROW(DeserializeCheckpoint(bytes.substr(0, bytes.size() - 1)), Error);
  }
}

TEST(TrainTest, LossDecreasesAndIsDeterministic) {
  Rng rng(23);
  std::vector<TrainingExample> data;
  for (int i = 0; i < 12; ++i) data.push_back(RandomExample(rng, 6, kTiny.vocab, 2));
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 4;
  cfg.lr = 0.05;
  const ModelParams init = ModelParams::Init(Arch::kCtc, kTiny, 7);
  const TrainResult a = Train(init, data, {LossKind::kSequence, 0.0}, cfg);
  const TrainResult b = Train(init, data, {LossKind::kSequence, 0.0}, cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_LT(a.epoch_losses.back(), a.epoch_losses.front());
}

TEST(TrainTest, BatchScheduleCoversEveryExampleOnce) {
  for (int bs : {1, 3, 5, 100}) {
    const auto batches = BatchSchedule(17, bs, 9, 2);
    std::vector<int> seen(17, 0);
    for (const auto& b : batches) {
      EXPECT_LE(b.size(), static_cast<size_t>(bs));
      for (size_t i : b) ++seen[i];
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

}  // namespace
}  // namespace pate_asr
