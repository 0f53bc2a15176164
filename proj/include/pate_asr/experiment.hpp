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
#ifndef PATE_ASR_EXPERIMENT_HPP_
#define PATE_ASR_EXPERIMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pate_asr/accountant.hpp"
#include "pate_asr/corpus.hpp"
#include "pate_asr/csv.hpp"
#include "pate_asr/dpsgd.hpp"
#include "pate_asr/error.hpp"
#include "pate_asr/mia.hpp"
#include "pate_asr/parallel.hpp"
#include "pate_asr/pate.hpp"
#include "pate_asr/seqmodel/checkpoint.hpp"

namespace pate_asr {

inline constexpr int kConfigVersion = 1;

struct PartitionConfig {
  int teachers = 15;
  PartitionStrategy strategy = PartitionStrategy::kRoundRobin;
  double public_fraction = 1.0 / 6.0;
};

struct PretrainConfig {
  bool enabled = false;
  double mean_shift = 0.5;
  int utterances = 1440;
  TrainConfig train{OptimizerKind::kAdam, 0.01, 20, 8, 1};
};

struct AttackConfig {
  std::vector<int> target{1, 2};
  size_t frames = 16;
  int steps = 200;
  double step_size = 1.0;
  int trials = 5;
  int query_budget = 10000;
};

struct ExperimentConfig {
  CorpusConfig corpus;
  int test_utterances = 240;
  PartitionConfig partition;
  ModelSpec model;
  TrainConfig teacher_train{OptimizerKind::kAdam, 0.01, 60, 4, 1};
  StudentConfig student{LossKind::kFrameCe, 0.3, {OptimizerKind::kAdam, 0.01, 10, 8, 1}};
  RelabelMode relabel_mode = RelabelMode::kVoteNoisyMax;
  size_t nbest = 4;
  DpSgdConfig dpsgd;
  std::vector<double> epsilons{1, 10, 100, 1000};
  double delta = kDefaultDelta;
  int seeds = 5;
  PretrainConfig pretrain;
  AttackConfig attack;

  void Validate() const {
    corpus.Validate();
    Require(test_utterances >= 1, ErrorCode::kInvalidArgument, "need test utterances");
    Require(partition.teachers >= 1, ErrorCode::kInvalidArgument, "need a teacher");
    Require(model.dims.input == corpus.feat_dim && model.dims.vocab == corpus.vocab,
            ErrorCode::kInvalidArgument, "model dims must match the corpus");
    Require(!epsilons.empty(), ErrorCode::kInvalidArgument, "empty epsilon grid");
    for (double e : epsilons) {
      Require(e > 0.0, ErrorCode::kInvalidArgument, "epsilons must be positive");
    }
    Require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidDelta, "delta must lie in (0, 1)");
    Require(seeds >= 1, ErrorCode::kInvalidArgument, "need at least one seed");
    Require(nbest >= 1, ErrorCode::kInvalidArgument, "nbest must be positive");
    dpsgd.Validate();
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"version", kConfigVersion},
       {"corpus", c.corpus},
       {"test_utterances", c.test_utterances},
       {"partition",
        {{"teachers", c.partition.teachers},
         {"strategy", c.partition.strategy == PartitionStrategy::kBySpeaker ? "by_speaker"
                                                                              : "round_robin"},
         {"public_fraction", c.partition.public_fraction}}},
       {"model", c.model},
       {"teacher_train", c.teacher_train},
       {"student", c.student},
       {"relabel", {{"mode", RelabelModeName(c.relabel_mode)}, {"nbest", c.nbest}}},
       {"dpsgd", c.dpsgd},
       {"budget", {{"epsilons", c.epsilons}, {"delta", c.delta}}},
       {"seeds", c.seeds},
       {"pretrain",
        {{"enabled", c.pretrain.enabled},
         {"mean_shift", c.pretrain.mean_shift},
         {"utterances", c.pretrain.utterances},
         {"train", c.pretrain.train}}},
       {"attack",
        {{"target", c.attack.target},
         {"frames", c.attack.frames},
         {"steps", c.attack.steps},
         {"step_size", c.attack.step_size},
         {"trials", c.attack.trials},
         {"query_budget", c.attack.query_budget}}}};
}

// Missing keys keep their defaults; unknown keys are rejected so typos in a
// config file do not pass silently.
inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const std::vector<std::string> kKeys = {
      "version", "corpus",  "test_utterances", "partition", "model",    "teacher_train",
      "student", "relabel", "dpsgd",           "budget",    "seeds",    "pretrain",
      "attack"};
  Require(j.is_object(), ErrorCode::kFormatError, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    Require(std::find(kKeys.begin(), kKeys.end(), key) != kKeys.end(),
            ErrorCode::kFormatError, "unknown config key '" + key + "'");
  }
  Require(j.value("version", kConfigVersion) == kConfigVersion, ErrorCode::kFormatError,
          "unsupported config version");
  ExperimentConfig d;
  c.corpus = j.value("corpus", d.corpus);
  c.test_utterances = j.value("test_utterances", d.test_utterances);
  if (j.contains("partition")) {
    const auto& p = j.at("partition");
    c.partition.teachers = p.value("teachers", d.partition.teachers);
    c.partition.strategy = ParsePartitionStrategy(p.value("strategy", "round_robin"));
    c.partition.public_fraction = p.value("public_fraction", d.partition.public_fraction);
  }
  c.model = j.value("model", d.model);
  c.teacher_train = j.value("teacher_train", d.teacher_train);
  c.student = j.value("student", d.student);
  if (j.contains("relabel")) {
    c.relabel_mode = ParseRelabelMode(j.at("relabel").value("mode", "vote_noisy_max"));
    c.nbest = j.at("relabel").value("nbest", d.nbest);
  }
  c.dpsgd = j.value("dpsgd", d.dpsgd);
  if (j.contains("budget")) {
    c.epsilons = j.at("budget").value("epsilons", d.epsilons);
    c.delta = j.at("budget").value("delta", d.delta);
  }
  c.seeds = j.value("seeds", d.seeds);
  if (j.contains("pretrain")) {
    const auto& p = j.at("pretrain");
    c.pretrain.enabled = p.value("enabled", d.pretrain.enabled);
    c.pretrain.mean_shift = p.value("mean_shift", d.pretrain.mean_shift);
    c.pretrain.utterances = p.value("utterances", d.pretrain.utterances);
    c.pretrain.train = p.value("train", d.pretrain.train);
  }
  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    c.attack.target = a.value("target", d.attack.target);
    c.attack.frames = a.value("frames", d.attack.frames);
    c.attack.steps = a.value("steps", d.attack.steps);
    c.attack.step_size = a.value("step_size", d.attack.step_size);
    c.attack.trials = a.value("trials", d.attack.trials);
    c.attack.query_budget = a.value("query_budget", d.attack.query_budget);
  }
}

inline uint64_t ConfigHash(const ExperimentConfig& c) {
  return Fnv1a64(nlohmann::json(c).dump());
}

// Seed of the k-th repetition of a sweep started from `base`.
inline uint64_t RunSeed(uint64_t base, int k) {
  return DeriveSeed(base, {0x5eed, static_cast<uint64_t>(k)});
}

// Model trained on the second-domain corpus (class means shifted), used to
// initialise teachers and students. That corpus is not sensitive, so the
// initialisation costs no budget.
inline ModelParams Pretrain(const ExperimentConfig& c, uint64_t seed) {
  CorpusConfig cc = c.corpus;
  cc.mean_shift = c.pretrain.mean_shift;
  cc.utterances = c.pretrain.utterances;
  cc.seed = DeriveSeed(seed, {0x9e7});
  const Corpus shifted = GenerateCorpus(cc);
  std::vector<size_t> ids(shifted.size());
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  TrainConfig tc = c.pretrain.train;
  tc.seed = DeriveSeed(seed, {0x9e7, 1});
  return Train(ModelParams::Init(c.model.arch, c.model.dims, DeriveSeed(seed, {0x9e7, 2})),
               SequenceExamples(shifted, ids), Objective{}, tc)
      .params;
}

// Everything one repetition needs before any noisy release.
struct SeedSetup {
  uint64_t seed = 0;
  Corpus corpus;
  std::vector<SyntheticUtterance> test;
  CorpusPartition partition;
  std::optional<ModelParams> init;
  TeacherEnsemble ensemble;
};

inline SeedSetup PrepareSeed(const ExperimentConfig& c, uint64_t seed, int jobs = 1) {
  c.Validate();
  SeedSetup s;
  s.seed = seed;
  CorpusConfig cc = c.corpus;
  cc.seed = seed;
  s.corpus = GenerateCorpus(cc);
  s.test = GenerateHeldOut(s.corpus, static_cast<size_t>(c.test_utterances));
  s.partition = Partition(s.corpus, c.partition.teachers, c.partition.strategy,
                          c.partition.public_fraction, seed);
  if (c.pretrain.enabled) s.init = Pretrain(c, seed);
  s.ensemble = TrainTeachers(s.corpus, s.partition, c.model, c.teacher_train, seed, jobs,
                             s.init ? &*s.init : nullptr);
  return s;
}

inline std::vector<size_t> PrivateIds(const CorpusPartition& p) {
  std::vector<size_t> ids;
  for (const auto& s : p.subsets) ids.insert(ids.end(), s.begin(), s.end());
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Public-set labels released by `kind` noise calibrated to `epsilon`.
inline StudentLabelSet RelabelForSeed(const ExperimentConfig& c, const SeedSetup& s,
                                      NoiseKind kind, double epsilon) {
  RelabelConfig rc;
  rc.mode = c.relabel_mode;
  rc.nbest = c.nbest;
  rc.seed = DeriveSeed(s.seed, {0x4e1a, static_cast<uint64_t>(kind)});
  rc.delta = c.delta;
  rc.target = PrivacyBudget(epsilon, c.delta);
  rc.spec = CalibrateRelabelNoise(*rc.target, rc.mode, kind, s.ensemble.weights, s.corpus,
                                  s.partition.public_set);
  return RelabelPublic(s.ensemble, s.corpus, s.partition.public_set, rc);
}

inline StudentResult TrainStudentForSeed(const ExperimentConfig& c, const SeedSetup& s,
                                         const StudentLabelSet& labels) {
  return TrainStudent(labels, s.corpus, c.model, c.student, DeriveSeed(s.seed, {0x57d}),
                      s.init ? &*s.init : nullptr);
}

inline StudentResult RunPateStudent(const ExperimentConfig& c, const SeedSetup& s,
                                    NoiseKind kind, double epsilon) {
  return TrainStudentForSeed(c, s, RelabelForSeed(c, s, kind, epsilon));
}

inline StudentResult RunCleanStudent(const ExperimentConfig& c, const SeedSetup& s) {
  return TrainStudentForSeed(
      c, s, CleanLabels(s.ensemble, s.corpus, s.partition.public_set, c.relabel_mode, c.nbest,
                        c.delta));
}

// DP-SGD settings for one repetition: the noise multiplier makes the
// configured number of steps fit `epsilon`.
inline DpSgdConfig DpSgdConfigForSeed(const ExperimentConfig& c, const SeedSetup& s,
                                      double epsilon) {
  const size_t n = PrivateIds(s.partition).size();
  DpSgdConfig dc = c.dpsgd;
  dc.seed = DeriveSeed(s.seed, {0xd95d});
  dc.target = PrivacyBudget(epsilon, c.delta);
  const size_t steps = static_cast<size_t>(dc.epochs) *
                       ((n + static_cast<size_t>(dc.batch_size) - 1) /
                        static_cast<size_t>(dc.batch_size));
  dc.noise_multiplier = CalibrateNoiseMultiplier(dc.target, steps);
  return dc;
}

// DP-SGD on the union of the private shards.
inline DpSgdResult RunDpSgd(const ExperimentConfig& c, const SeedSetup& s,
                            const DpSgdConfig& dc) {
  const auto ids = PrivateIds(s.partition);
  ModelParams init = s.init ? *s.init
                            : ModelParams::Init(c.model.arch, c.model.dims,
                                                DeriveSeed(s.seed, {0xd95d, 1}));
  return DpSgdTrain(std::move(init), SequenceExamples(s.corpus, ids), Objective{}, dc);
}

inline DpSgdResult RunDpSgd(const ExperimentConfig& c, const SeedSetup& s, double epsilon) {
  return RunDpSgd(c, s, DpSgdConfigForSeed(c, s, epsilon));
}

inline const std::vector<std::string>& SweepMethods() {
  static const std::vector<std::string> kMethods = {"pate_gnmax", "pate_lnmax", "clean",
                                                     "dpsgd"};
  return kMethods;
}

struct SweepCell {
  int repetition = 0;
  uint64_t seed = 0;
  double epsilon = 0.0;
  std::string method;
  double ter = 0.0;
  double spent_epsilon = 0.0;
};

struct SeedOutcome {
  double ensemble_ter = 0.0;
  std::vector<SweepCell> cells;
  std::map<double, ModelParams> gnmax_students;  // kept for the attack
  ModelParams clean_student;
};

inline SeedOutcome RunSeedSweep(const ExperimentConfig& c, int repetition, uint64_t seed) {
  const SeedSetup s = PrepareSeed(c, seed);
  SeedOutcome out;
  out.ensemble_ter = EnsembleTer(s.ensemble, s.test);
  const StudentResult clean = RunCleanStudent(c, s);
  const double clean_ter = ModelTer(clean.params, s.test);
  out.clean_student = clean.params;
  for (double eps : c.epsilons) {
    const StudentResult g = RunPateStudent(c, s, NoiseKind::kGaussian, eps);
    const StudentResult l = RunPateStudent(c, s, NoiseKind::kLaplace, eps);
    const DpSgdResult d = RunDpSgd(c, s, eps);
    out.cells.push_back({repetition, seed, eps, "pate_gnmax", ModelTer(g.params, s.test),
                         g.spent.epsilon});
    out.cells.push_back({repetition, seed, eps, "pate_lnmax", ModelTer(l.params, s.test),
                         l.spent.epsilon});
    out.cells.push_back({repetition, seed, eps, "clean", clean_ter, clean.spent.epsilon});
    out.cells.push_back({repetition, seed, eps, "dpsgd", ModelTer(d.params, s.test),
                         d.spent.epsilon});
    out.gnmax_students.emplace(eps, g.params);
  }
  return out;
}

struct SweepRow {
  double epsilon = 0.0;
  std::string method;
  double mean_ter = 0.0;
  double se = 0.0;
  int seeds = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SweepRow> rows;
  std::vector<double> ensemble_ters;
  std::vector<SeedOutcome> outcomes;

  const SweepRow& Row(double epsilon, const std::string& method) const {
    for (const auto& r : rows) {
      if (r.epsilon == epsilon && r.method == method) return r;
    }
    throw Error(ErrorCode::kInvalidArgument, "no sweep row for " + method);
  }
};

inline std::vector<SweepRow> SummarizeCells(const std::vector<SweepCell>& cells,
                                            const std::vector<double>& epsilons) {
  std::vector<SweepRow> rows;
  for (double eps : epsilons) {
    for (const auto& m : SweepMethods()) {
      std::vector<double> ters;
      for (const auto& cell : cells) {
        if (cell.epsilon == eps && cell.method == m) ters.push_back(cell.ter);
      }
      if (ters.empty()) continue;
      const auto [mean, se] = MeanAndSe(ters);
      rows.push_back({eps, m, mean, se, static_cast<int>(ters.size())});
    }
  }
  return rows;
}

// Runs c.seeds repetitions (in parallel across `jobs`) of the full grid.
inline SweepResult RunSweep(const ExperimentConfig& c, uint64_t base_seed, int jobs = 1,
                            bool keep_models = false) {
  c.Validate();
  std::vector<SeedOutcome> outcomes(static_cast<size_t>(c.seeds));
  ParallelFor(outcomes.size(), jobs, [&](size_t k) {
    outcomes[k] = RunSeedSweep(c, static_cast<int>(k), RunSeed(base_seed, static_cast<int>(k)));
  });
  SweepResult r;
  for (auto& o : outcomes) {
    r.cells.insert(r.cells.end(), o.cells.begin(), o.cells.end());
    r.ensemble_ters.push_back(o.ensemble_ter);
  }
  r.rows = SummarizeCells(r.cells, c.epsilons);
  if (keep_models) r.outcomes = std::move(outcomes);
  return r;
}

inline std::string SweepCsv(const std::vector<SweepRow>& rows) {
  std::string out = "epsilon,method,mean_ter,se,seeds\n";
  for (const auto& r : rows) {
    out += FormatDouble(r.epsilon) + "," + r.method + "," + FormatDouble(r.mean_ter) + "," +
           FormatDouble(r.se) + "," + std::to_string(r.seeds) + "\n";
  }
  return out;
}

inline std::string CellsCsv(const std::vector<SweepCell>& cells) {
  std::string out = "repetition,seed,epsilon,method,ter,spent_epsilon\n";
  for (const auto& c : cells) {
    out += std::to_string(c.repetition) + "," + std::to_string(c.seed) + "," +
           FormatDouble(c.epsilon) + "," + c.method + "," + FormatDouble(c.ter) + "," +
           FormatDouble(c.spent_epsilon) + "\n";
  }
  return out;
}

inline std::vector<SweepRow> ParseSweepCsv(const std::string& text) {
  std::vector<SweepRow> rows;
  std::string line;
  size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    const size_t end = text.find('\n', pos);
    line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? text.size() : end + 1;
    if (line.empty()) continue;
    if (header) {
      Require(line == "epsilon,method,mean_ter,se,seeds", ErrorCode::kFormatError,
              "not a sweep table");
      header = false;
      continue;
    }
    const auto f = SplitFields(line, ',');
    Require(f.size() == 5, ErrorCode::kFormatError, "bad sweep row");
    rows.push_back({ParseDouble(f[0]), std::string(f[1]), ParseDouble(f[2]), ParseDouble(f[3]),
                    static_cast<int>(ParseInt(f[4]))});
  }
  return rows;
}

// DP-SGD minus PATE mean TER per epsilon and PATE variant; positive means
// PATE is better.
inline std::string GapReportCsv(const std::vector<SweepRow>& rows) {
  std::string out = "epsilon,pate_method,pate_mean_ter,dpsgd_mean_ter,gap,pooled_se\n";
  std::vector<double> eps;
  for (const auto& r : rows) {
    if (std::find(eps.begin(), eps.end(), r.epsilon) == eps.end()) eps.push_back(r.epsilon);
  }
  for (double e : eps) {
    const SweepRow* dp = nullptr;
    for (const auto& r : rows) {
      if (r.epsilon == e && r.method == "dpsgd") dp = &r;
    }
    if (!dp) continue;
    for (const auto& r : rows) {
      if (r.epsilon != e || r.method.rfind("pate_", 0) != 0) continue;
      out += FormatDouble(e) + "," + r.method + "," + FormatDouble(r.mean_ter) + "," +
             FormatDouble(dp->mean_ter) + "," + FormatDouble(dp->mean_ter - r.mean_ter) + "," +
             FormatDouble(std::sqrt(r.se * r.se + dp->se * dp->se)) + "\n";
    }
  }
  return out;
}

}  // namespace pate_asr

#endif  // PATE_ASR_EXPERIMENT_HPP_
