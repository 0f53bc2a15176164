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
#ifndef PATE_ASR_PATE_HPP_
#define PATE_ASR_PATE_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pate_asr/accountant.hpp"
#include "pate_asr/corpus.hpp"
#include "pate_asr/csv.hpp"
#include "pate_asr/edit_distance.hpp"
#include "pate_asr/error.hpp"
#include "pate_asr/matrix.hpp"
#include "pate_asr/mechanisms.hpp"
#include "pate_asr/parallel.hpp"
#include "pate_asr/random.hpp"
#include "pate_asr/seqmodel/checkpoint.hpp"
#include "pate_asr/seqmodel/decode.hpp"
#include "pate_asr/seqmodel/logmath.hpp"
#include "pate_asr/seqmodel/losses.hpp"
#include "pate_asr/seqmodel/params.hpp"
#include "pate_asr/seqmodel/train.hpp"

namespace pate_asr {

struct ModelSpec {
  Arch arch = Arch::kCtc;
  ModelDims dims;
};

inline void to_json(nlohmann::json& j, const ModelSpec& m) {
  j = {{"arch", ArchName(m.arch)},
       {"input", m.dims.input},
       {"hidden", m.dims.hidden},
       {"vocab", m.dims.vocab}};
}

inline void from_json(const nlohmann::json& j, ModelSpec& m) {
  ModelSpec d;
  m.arch = ParseArch(j.value("arch", std::string(ArchName(d.arch))));
  m.dims.input = j.value("input", d.dims.input);
  m.dims.hidden = j.value("hidden", d.dims.hidden);
  m.dims.vocab = j.value("vocab", d.dims.vocab);
}

struct TeacherEnsemble {
  std::vector<ModelParams> teachers;
  std::vector<double> weights;

  static TeacherEnsemble Uniform(std::vector<ModelParams> teachers) {
    TeacherEnsemble e;
    const double w = 1.0 / static_cast<double>(teachers.size());
    e.weights.assign(teachers.size(), w);
    e.teachers = std::move(teachers);
    e.Validate();
    return e;
  }

  void Validate() const {
    Require(!teachers.empty(), ErrorCode::kInvalidArgument, "empty ensemble");
    Require(weights.size() == teachers.size(), ErrorCode::kInvalidWeights,
            "one weight per teacher required");
    internal::ValidateSimplex(weights, 1e-9, ErrorCode::kInvalidWeights, "weights");
    for (const auto& t : teachers) {
      Require(t.arch() == teachers.front().arch() &&
                  t.dims().input == teachers.front().dims().input &&
                  t.dims().hidden == teachers.front().dims().hidden &&
                  t.dims().vocab == teachers.front().dims().vocab,
              ErrorCode::kDimensionMismatch, "teachers differ in architecture");
    }
  }

  size_t size() const { return teachers.size(); }
  Arch arch() const { return teachers.front().arch(); }
  const ModelDims& dims() const { return teachers.front().dims(); }
};

inline std::vector<TrainingExample> SequenceExamples(const Corpus& corpus,
                                                     std::span<const size_t> ids) {
  std::vector<TrainingExample> out;
  out.reserve(ids.size());
  for (size_t id : ids) {
    Require(id < corpus.size(), ErrorCode::kInvalidArgument, "utterance id out of range");
    TrainingExample ex;
    ex.features = corpus.utterances[id].features;
    ex.labels = corpus.utterances[id].tokens;
    out.push_back(std::move(ex));
  }
  return out;
}

// A teacher's seed depends on its shard contents, not its position, so
// reordering shards reorders teachers and nothing else.
inline uint64_t TeacherSeed(uint64_t seed, std::span<const size_t> ids) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t id : ids) h = Mix64(h ^ static_cast<uint64_t>(id));
  return DeriveSeed(seed, {0x7eac, h});
}

inline ModelParams TrainTeacher(const Corpus& corpus, std::span<const size_t> ids,
                                const ModelSpec& spec, TrainConfig config, uint64_t seed,
                                const ModelParams* init = nullptr) {
  Require(!ids.empty(), ErrorCode::kEmptySubset, "teacher shard is empty");
  const uint64_t s = TeacherSeed(seed, ids);
  ModelParams params = init ? *init : ModelParams::Init(spec.arch, spec.dims, DeriveSeed(s, {0}));
  config.seed = DeriveSeed(s, {1});
  const auto data = SequenceExamples(corpus, ids);
  return Train(std::move(params), data, Objective{}, config).params;
}

// Teacher i sees only partition.subsets[i]. `init` (e.g. a model pretrained on
// another corpus) replaces the random initialisation.
inline TeacherEnsemble TrainTeachers(const Corpus& corpus, const CorpusPartition& partition,
                                     const ModelSpec& spec, const TrainConfig& config,
                                     uint64_t seed, int jobs = 1,
                                     const ModelParams* init = nullptr) {
  Require(!partition.subsets.empty(), ErrorCode::kEmptySubset, "no teacher shards");
  for (const auto& s : partition.subsets) {
    Require(!s.empty(), ErrorCode::kEmptySubset, "teacher shard is empty");
  }
  std::vector<ModelParams> teachers(partition.subsets.size());
  ParallelFor(teachers.size(), jobs, [&](size_t i) {
    teachers[i] = TrainTeacher(corpus, partition.subsets[i], spec, config, seed, init);
  });
  return TeacherEnsemble::Uniform(std::move(teachers));
}

// Frame-wise sum_i w_i T_i(s | x).
inline Matrix Aggregate(const TeacherEnsemble& ensemble, const Matrix& x) {
  ensemble.Validate();
  Require(x.cols() == static_cast<size_t>(ensemble.dims().input),
          ErrorCode::kDimensionMismatch, "feature dimension does not match the teachers");
  Matrix out(x.rows(), static_cast<size_t>(ensemble.dims().outputs()), 0.0);
  for (size_t i = 0; i < ensemble.size(); ++i) {
    const Matrix p = FramePosteriors(ensemble.teachers[i], x);
    for (size_t k = 0; k < out.data().size(); ++k) {
      out.data()[k] += ensemble.weights[i] * p.data()[k];
    }
  }
  return out;
}

inline std::vector<int> EnsembleGreedy(const TeacherEnsemble& ensemble, const Matrix& x) {
  return CollapseFrameLabels(ensemble.arch(), FramewiseArgMax(Aggregate(ensemble, x)),
                             ensemble.dims().blank());
}

template <typename Decoder>
double EvaluateTer(std::span<const SyntheticUtterance> utts, Decoder&& decode) {
  TerAccumulator acc;
  for (const auto& u : utts) acc.Add(u.tokens, decode(u.features));
  return acc.Rate();
}

inline double ModelTer(const ModelParams& p, std::span<const SyntheticUtterance> utts) {
  return EvaluateTer(utts, [&](const Matrix& x) { return GreedyDecode(p, x); });
}

inline double EnsembleTer(const TeacherEnsemble& e, std::span<const SyntheticUtterance> utts) {
  return EvaluateTer(utts, [&](const Matrix& x) { return EnsembleGreedy(e, x); });
}

enum class RelabelMode { kVoteNoisyMax, kPosteriorNoise };

inline RelabelMode ParseRelabelMode(std::string_view s) {
  if (s == "vote_noisy_max") return RelabelMode::kVoteNoisyMax;
  if (s == "posterior_noise") return RelabelMode::kPosteriorNoise;
  throw Error(ErrorCode::kInvalidArgument, "unknown relabel mode '" + std::string(s) + "'");
}

constexpr std::string_view RelabelModeName(RelabelMode m) {
  return m == RelabelMode::kVoteNoisyMax ? "vote_noisy_max" : "posterior_noise";
}

// Per-frame sensitivity of the released vector, in units of the noise scale
// each teacher (vote mode: each class count) receives.
//   vote:      one teacher moves one vote, L1 2 / L2 sqrt(2).
//   posterior: the release is avg + sum_i w_i Y_i. One teacher moves avg by
//              w_max * (L1 2 / L2 sqrt(2)); Gaussian noise has std
//              sigma * ||w||_2, and for Laplace the heaviest teacher's own
//              noise w_max * Y alone already covers the change.
inline double RelabelSensitivity(RelabelMode mode, NoiseKind kind,
                                 std::span<const double> weights) {
  if (mode == RelabelMode::kVoteNoisyMax || kind != NoiseKind::kGaussian) {
    return VoteSensitivity(kind == NoiseKind::kNone ? NoiseKind::kLaplace : kind);
  }
  double w_max = 0.0, sq = 0.0;
  for (double w : weights) {
    w_max = std::max(w_max, w);
    sq += w * w;
  }
  return std::numbers::sqrt2 * w_max / std::sqrt(sq);
}

inline size_t TotalFrames(const Corpus& corpus, std::span<const size_t> ids) {
  size_t total = 0;
  for (size_t id : ids) total += corpus.utterances.at(id).frames();
  return total;
}

// One public utterance is one query. Its frames are released together, and the
// cost of that vector release is the sum of the per-frame curves.
inline AccountingReport AccountRelabel(RelabelMode mode, const NoiseSpec& spec,
                                       std::span<const double> weights, size_t queries,
                                       size_t total_frames, double delta) {
  AccountingReport r;
  r.mechanism = std::string(RelabelModeName(mode)) + "/" +
                std::string(NoiseKindName(spec.kind()));
  r.scale = spec.scale();
  r.queries = static_cast<double>(queries);
  r.delta = delta;
  const double sens = RelabelSensitivity(mode, spec.kind(), weights);
  r.rdp = MechanismCurve(spec, sens).Scaled(static_cast<double>(total_frames));
  r.epsilon = RdpToDp(r.rdp, delta);
  if (std::isfinite(r.epsilon) && r.epsilon > 0.0 && queries > 0) {
    r.lambda = LambdaFromBudget(static_cast<double>(queries), r.epsilon);
  }
  return r;
}

// Smallest scale whose relabeling of `ids` stays within `target`.
inline NoiseSpec CalibrateRelabelNoise(const PrivacyBudget& target, RelabelMode mode,
                                       NoiseKind kind, std::span<const double> weights,
                                       const Corpus& corpus, std::span<const size_t> ids) {
  return CalibrateNoise(target, static_cast<double>(TotalFrames(corpus, ids)), kind,
                        RelabelSensitivity(mode, kind, weights));
}

struct LabelEntry {
  size_t utterance_id = 0;
  std::vector<int> frame_labels;
  Matrix frame_posteriors;  // T x O, row-stochastic
  std::vector<Hypothesis> nbest;

  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

struct StudentLabelSet {
  RelabelMode mode = RelabelMode::kVoteNoisyMax;
  NoiseSpec spec;
  Arch arch = Arch::kCtc;
  int blank = 0;
  std::vector<LabelEntry> entries;
  PrivacyBudget spent;
  AccountingReport accounting;

  size_t queries() const { return entries.size(); }
};

struct RelabelConfig {
  RelabelMode mode = RelabelMode::kVoteNoisyMax;
  NoiseSpec spec;
  size_t nbest = 4;
  uint64_t seed = 1;
  std::optional<PrivacyBudget> target;
  double delta = kDefaultDelta;
  int jobs = 1;
};

namespace internal {

// Clip at zero and L1-normalise; uniform when nothing is positive.
inline void ClipNormalize(std::span<double> row) {
  double total = 0.0;
  for (double& x : row) {
    if (!(x > 0.0)) x = 0.0;
    total += x;
  }
  const double n = static_cast<double>(row.size());
  for (double& x : row) x = total > 0.0 ? x / total : 1.0 / n;
}

}  // namespace internal

// Labels every public utterance through one noisy release per utterance.
// The vote histograms (or noisy posterior sums) of all its frames are the
// released quantity; frame labels are their argmax and the N-best list is a
// beam search over their normalised form, so both come at no extra cost.
inline StudentLabelSet RelabelPublic(const TeacherEnsemble& ensemble, const Corpus& corpus,
                                     std::span<const size_t> public_ids,
                                     const RelabelConfig& config) {
  ensemble.Validate();
  Require(!public_ids.empty(), ErrorCode::kInvalidArgument, "public set is empty");
  Require(config.nbest >= 1, ErrorCode::kInvalidArgument, "nbest must be positive");
  StudentLabelSet out;
  out.mode = config.mode;
  out.spec = config.spec;
  out.arch = ensemble.arch();
  out.blank = ensemble.dims().blank();
  out.accounting = AccountRelabel(config.mode, config.spec, ensemble.weights,
                                  public_ids.size(), TotalFrames(corpus, public_ids),
                                  config.delta);
  out.spent = PrivacyBudget(out.accounting.epsilon, config.delta);
  if (config.target) {
    Require(out.spent.epsilon <= config.target->epsilon, ErrorCode::kBudgetExceeded,
            "relabeling would spend epsilon " + FormatDouble(out.spent.epsilon) +
                " > target " + FormatDouble(config.target->epsilon));
  }

  const size_t O = static_cast<size_t>(ensemble.dims().outputs());
  out.entries.resize(public_ids.size());
  ParallelFor(public_ids.size(), config.jobs, [&](size_t q) {
    const size_t id = public_ids[q];
    const Matrix& x = corpus.utterances.at(id).features;
    const size_t T = x.rows();
    Rng rng(DeriveSeed(config.seed, {0x4e1a, static_cast<uint64_t>(id)}));
    LabelEntry e;
    e.utterance_id = id;
    e.frame_labels.resize(T);
    e.frame_posteriors = Matrix(T, O);
    if (config.mode == RelabelMode::kVoteNoisyMax) {
      std::vector<std::vector<int>> paths;
      for (const auto& t : ensemble.teachers) paths.push_back(FrameLabels(t, x));
      std::vector<int> votes(ensemble.size());
      for (size_t t = 0; t < T; ++t) {
        for (size_t i = 0; i < ensemble.size(); ++i) votes[i] = paths[i][t];
        std::vector<double> noisy =
            NoisyCounts(VoteHistogram::FromVotes(votes, O), config.spec, rng);
        e.frame_labels[t] = static_cast<int>(ArgMax(noisy));
        internal::ClipNormalize(noisy);
        std::copy(noisy.begin(), noisy.end(), e.frame_posteriors.row(t).begin());
      }
    } else {
      std::vector<Matrix> post;
      for (const auto& t : ensemble.teachers) post.push_back(FramePosteriors(t, x));
      std::vector<std::span<const double>> rows(ensemble.size());
      for (size_t t = 0; t < T; ++t) {
        for (size_t i = 0; i < ensemble.size(); ++i) rows[i] = post[i].row(t);
        const std::vector<double> p = NoisyAggregatePosterior(
            std::span<const std::span<const double>>(rows), ensemble.weights, config.spec,
            rng, ClipFallback::kUniform);
        e.frame_labels[t] = static_cast<int>(ArgMax(p));
        std::copy(p.begin(), p.end(), e.frame_posteriors.row(t).begin());
      }
    }
    e.nbest = FrameLabelBeamSearch(out.arch, LogMatrix(e.frame_posteriors), out.blank,
                                   config.nbest);
    out.entries[q] = std::move(e);
  });
  return out;
}

// Noiseless labels computed straight from the vote plurality or the weighted
// average, with no random stream involved.
inline StudentLabelSet CleanLabels(const TeacherEnsemble& ensemble, const Corpus& corpus,
                                   std::span<const size_t> public_ids, RelabelMode mode,
                                   size_t nbest, double delta = kDefaultDelta) {
  ensemble.Validate();
  StudentLabelSet out;
  out.mode = mode;
  out.arch = ensemble.arch();
  out.blank = ensemble.dims().blank();
  out.accounting = AccountRelabel(mode, NoiseSpec::None(), ensemble.weights,
                                  public_ids.size(), TotalFrames(corpus, public_ids), delta);
  out.spent = PrivacyBudget(out.accounting.epsilon, delta);
  const size_t O = static_cast<size_t>(ensemble.dims().outputs());
  const double I = static_cast<double>(ensemble.size());
  for (size_t id : public_ids) {
    const Matrix& x = corpus.utterances.at(id).features;
    LabelEntry e;
    e.utterance_id = id;
    if (mode == RelabelMode::kPosteriorNoise) {
      e.frame_posteriors = Aggregate(ensemble, x);
    } else {
      e.frame_posteriors = Matrix(x.rows(), O, 0.0);
      for (const auto& t : ensemble.teachers) {
        const auto path = FrameLabels(t, x);
        for (size_t f = 0; f < path.size(); ++f) e.frame_posteriors(f, path[f]) += 1.0;
      }
      for (double& v : e.frame_posteriors.data()) v /= I;
    }
    e.frame_labels = FramewiseArgMax(e.frame_posteriors);
    e.nbest = FrameLabelBeamSearch(out.arch, LogMatrix(e.frame_posteriors), out.blank, nbest);
    out.entries.push_back(std::move(e));
  }
  return out;
}

struct StudentConfig {
  LossKind hard_loss = LossKind::kFrameCe;
  double kd_weight = 0.0;
  TrainConfig train;
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"optimizer", c.optimizer == OptimizerKind::kSgd ? "sgd" : "adam"},
       {"lr", c.lr},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.optimizer = ParseOptimizer(j.value("optimizer", d.optimizer == OptimizerKind::kSgd ? "sgd" : "adam"));
  c.lr = j.value("lr", d.lr);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
}

inline void to_json(nlohmann::json& j, const StudentConfig& c) {
  j = {{"hard_loss", LossKindName(c.hard_loss)}, {"kd_weight", c.kd_weight}, {"train", c.train}};
}

inline void from_json(const nlohmann::json& j, StudentConfig& c) {
  StudentConfig d;
  c.hard_loss = ParseLossKind(j.value("hard_loss", std::string(LossKindName(d.hard_loss))));
  c.kd_weight = j.value("kd_weight", d.kd_weight);
  c.train = j.value("train", d.train);
}

inline std::vector<TrainingExample> StudentExamples(const StudentLabelSet& labels,
                                                    const Corpus& corpus) {
  std::vector<TrainingExample> out;
  out.reserve(labels.entries.size());
  for (const auto& e : labels.entries) {
    TrainingExample ex;
    ex.features = corpus.utterances.at(e.utterance_id).features;
    Require(ex.features.rows() == e.frame_labels.size(), ErrorCode::kDimensionMismatch,
            "label set does not match the corpus");
    ex.labels = CollapseFrameLabels(labels.arch, e.frame_labels, labels.blank);
    ex.frame_labels = e.frame_labels;
    ex.frame_targets = e.frame_posteriors;
    ex.nbest = e.nbest;
    out.push_back(std::move(ex));
  }
  return out;
}

struct StudentResult {
  ModelParams params;
  PrivacyBudget spent;
  AccountingReport accounting;
  std::vector<double> epoch_losses;
};

// Training on released labels is post-processing, so the certified budget is
// the label set's, copied through unchanged.
inline StudentResult TrainStudent(const StudentLabelSet& labels, const Corpus& corpus,
                                  const ModelSpec& spec, StudentConfig config,
                                  uint64_t seed, const ModelParams* init = nullptr) {
  Require(!labels.entries.empty(), ErrorCode::kInvalidArgument, "empty label set");
  const auto data = StudentExamples(labels, corpus);
  ModelParams params =
      init ? *init : ModelParams::Init(spec.arch, spec.dims, DeriveSeed(seed, {0x57d, 0}));
  config.train.seed = DeriveSeed(seed, {0x57d, 1});
  TrainResult r = Train(std::move(params), data,
                        Objective{config.hard_loss, config.kd_weight}, config.train);
  return {std::move(r.params), labels.spent, labels.accounting, std::move(r.epoch_losses)};
}

// Label set files: labels.csv with one row per frame
//   utterance_id,frame,label,p0,...,p{O-1}
// and nbest.json with the mechanism, the spent budget and the N-best lists.
inline void SaveLabelSet(const StudentLabelSet& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const size_t O = s.entries.empty() ? 0 : s.entries.front().frame_posteriors.cols();
  std::string csv = "utterance_id,frame,label";
  for (size_t k = 0; k < O; ++k) csv += ",p" + std::to_string(k);
  csv += '\n';
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : s.entries) {
    for (size_t t = 0; t < e.frame_labels.size(); ++t) {
      csv += std::to_string(e.utterance_id) + "," + std::to_string(t) + "," +
             std::to_string(e.frame_labels[t]);
      for (double p : e.frame_posteriors.row(t)) csv += "," + FormatDouble(p);
      csv += '\n';
    }
    nlohmann::json nb = nlohmann::json::array();
    for (const auto& h : e.nbest) {
      nb.push_back({{"tokens", h.tokens},
                    {"log_prob", JsonNumber(h.log_prob)},
                    {"prob", h.normalized_prob}});
    }
    entries.push_back({{"utterance_id", e.utterance_id}, {"nbest", nb}});
  }
  nlohmann::json side = {{"format", "pate-asr-labels"},
                         {"version", 1},
                         {"mode", RelabelModeName(s.mode)},
                         {"mechanism", NoiseKindName(s.spec.kind())},
                         {"scale", s.spec.scale()},
                         {"arch", ArchName(s.arch)},
                         {"blank", s.blank},
                         {"spent", {{"epsilon", JsonNumber(s.spent.epsilon)},
                                    {"delta", s.spent.delta}}},
                         {"accounting", s.accounting.ToJson()},
                         {"entries", entries}};
  WriteFile((dir / "labels.csv").string(), csv);
  WriteFile((dir / "nbest.json").string(), side.dump(2) + "\n");
}

inline StudentLabelSet LoadLabelSet(const std::filesystem::path& dir) {
  const auto side = nlohmann::json::parse(ReadFile((dir / "nbest.json").string()));
  Require(side.value("format", "") == "pate-asr-labels", ErrorCode::kFormatError,
          dir.string() + " is not a label set");
  StudentLabelSet s;
  s.mode = ParseRelabelMode(side.at("mode").get<std::string>());
  const NoiseKind kind = ParseNoiseKind(side.at("mechanism").get<std::string>());
  s.spec = NoiseSpec(kind, side.at("scale").get<double>());
  s.arch = ParseArch(side.at("arch").get<std::string>());
  s.blank = side.at("blank").get<int>();
  s.spent = PrivacyBudget(JsonToDouble(side.at("spent").at("epsilon")),
                          side.at("spent").at("delta").get<double>());
  s.accounting = AccountingReport::FromJson(side.at("accounting"));

  const auto lines = ReadLines((dir / "labels.csv").string());
  Require(!lines.empty(), ErrorCode::kFormatError, "labels.csv is empty");
  const size_t O = SplitFields(lines[0], ',').size() - 3;
  std::vector<std::vector<std::vector<double>>> rows;
  for (const auto& entry : side.at("entries")) {
    LabelEntry e;
    e.utterance_id = entry.at("utterance_id").get<size_t>();
    for (const auto& h : entry.at("nbest")) {
      e.nbest.push_back({h.at("tokens").get<std::vector<int>>(),
                         JsonToDouble(h.at("log_prob")), h.at("prob").get<double>()});
    }
    s.entries.push_back(std::move(e));
    rows.emplace_back();
  }
  size_t q = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto f = SplitFields(lines[i], ',');
    Require(f.size() == O + 3, ErrorCode::kFormatError, "bad labels.csv row");
    const auto id = static_cast<size_t>(ParseInt(f[0]));
    const auto t = static_cast<size_t>(ParseInt(f[1]));
    while (q < s.entries.size() && s.entries[q].utterance_id != id) ++q;
    Require(q < s.entries.size() && t == s.entries[q].frame_labels.size(),
            ErrorCode::kFormatError, "labels.csv rows out of order");
    s.entries[q].frame_labels.push_back(static_cast<int>(ParseInt(f[2])));
    std::vector<double> p(O);
    for (size_t k = 0; k < O; ++k) p[k] = ParseDouble(f[3 + k]);
    rows[q].push_back(std::move(p));
  }
  for (size_t k = 0; k < s.entries.size(); ++k) {
    Matrix m(rows[k].size(), O);
    for (size_t t = 0; t < rows[k].size(); ++t) {
      std::copy(rows[k][t].begin(), rows[k][t].end(), m.row(t).begin());
    }
    s.entries[k].frame_posteriors = std::move(m);
  }
  return s;
}

}  // namespace pate_asr

#endif  // PATE_ASR_PATE_HPP_
