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
// pate-asr: command-line driver for the synthetic-speech experiments.
//
// Every subcommand writes into a fresh run directory under
// $PATE_ASR_RUN_ROOT (default ./runs) and finishes with manifest.json, which
// records the effective config, seed, inputs and a checksum of every output.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "pate_asr/pate_asr.hpp"

namespace pate_asr {
namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitDivergence = 4;

// Options shared by all subcommands. Empty optionals leave the config alone.
struct Options {
  std::string config_path;
  std::string out;
  int jobs = 1;
  std::optional<uint64_t> seed;
  bool pretrain = false;
  std::optional<int> teachers;
  std::optional<std::string> arch;
  std::optional<std::string> relabel_mode;
  std::optional<int> seeds;
  std::vector<double> epsilons;
  std::optional<double> delta;
  std::optional<int> utterances;

  // Subcommand inputs.
  std::string data, teachers_dir, labels, sweep_dir;
  std::string mechanism;
  std::optional<double> epsilon;
  std::optional<double> scale;
  std::optional<double> noise_multiplier;
  std::vector<std::string> models;
  bool save_models = false;
};

void AddCommon(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "run directory name under the run root");
  sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed,
                  "base seed; downstream commands inherit it from the data run");
  sub->add_flag("--pretrain", o.pretrain, "initialise from a model trained on a shifted corpus");
  sub->add_option("--num-teachers", o.teachers, "number of teachers");
  sub->add_option("--arch", o.arch, "frame, ctc or rnnt");
  sub->add_option("--relabel-mode", o.relabel_mode, "vote_noisy_max or posterior_noise");
  sub->add_option("--seeds", o.seeds, "repetitions in a sweep");
  sub->add_option("--epsilons", o.epsilons, "epsilon grid")->delimiter(',');
  sub->add_option("--delta", o.delta, "target delta");
  sub->add_option("--utterances", o.utterances, "corpus size");
}

fs::path RunRoot() {
  const char* env = std::getenv("PATE_ASR_RUN_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

nlohmann::json ReadJson(const fs::path& p) {
  return nlohmann::json::parse(ReadFile(p.string()));
}

// Manifest of an earlier run.
nlohmann::json LoadManifest(const fs::path& run) {
  const nlohmann::json m = ReadJson(run / "manifest.json");
  Require(m.value("format", "") == "pate-asr-run", ErrorCode::kFormatError,
          run.string() + " is not a run directory");
  return m;
}

class Run {
 public:
  Run(std::string command, const Options& o) : command_(std::move(command)), opts_(o) {}

  // Effective config: --config, else the config of `base` (an input run),
  // else defaults; then flag overrides.
  void ResolveConfig(const std::string& base = "") {
    if (!opts_.config_path.empty()) {
      config_ = ReadJson(opts_.config_path).get<ExperimentConfig>();
    } else if (!base.empty()) {
      config_ = ReadJson(fs::path(base) / "config.json").get<ExperimentConfig>();
    }
    if (opts_.pretrain) config_.pretrain.enabled = true;
    if (opts_.teachers) config_.partition.teachers = *opts_.teachers;
    if (opts_.arch) config_.model.arch = ParseArch(*opts_.arch);
    if (opts_.relabel_mode) config_.relabel_mode = ParseRelabelMode(*opts_.relabel_mode);
    if (opts_.seeds) config_.seeds = *opts_.seeds;
    if (!opts_.epsilons.empty()) config_.epsilons = opts_.epsilons;
    if (opts_.delta) config_.delta = *opts_.delta;
    if (opts_.utterances) config_.corpus.utterances = *opts_.utterances;
    config_.Validate();
  }

  // Records an input run and returns its manifest.
  nlohmann::json AddInput(const std::string& name, const std::string& dir) {
    Require(!dir.empty(), ErrorCode::kInvalidArgument, "--" + name + " is required");
    nlohmann::json m = LoadManifest(dir);
    inputs_[name] = {{"path", dir},
                     {"manifest_checksum",
                      HexDigest(Fnv1a64(ReadFile((fs::path(dir) / "manifest.json").string())))}};
    replay_.push_back("--" + name);
    replay_.push_back(dir);
    input_dirs_.push_back(fs::weakly_canonical(dir));
    return m;
  }

  void AddReplayArg(const std::string& flag, const std::string& value) {
    replay_.push_back(flag);
    replay_.push_back(value);
  }

  void AddReplayFlag(const std::string& flag) { replay_.push_back(flag); }

  void SetSeed(uint64_t seed) { seed_ = seed; }
  uint64_t seed() const { return seed_; }
  const ExperimentConfig& config() const { return config_; }
  const fs::path& dir() const { return dir_; }

  // Creates the output directory; refuses to write into an input.
  void Open() {
    const std::string name =
        opts_.out.empty() ? command_ + "-" + std::to_string(seed_) : opts_.out;
    dir_ = RunRoot() / name;
    const fs::path canon = fs::weakly_canonical(dir_);
    for (const auto& in : input_dirs_) {
      Require(canon != in, ErrorCode::kInvalidArgument,
              "output directory " + dir_.string() + " is also an input");
    }
    fs::create_directories(dir_);
    WriteFile((dir_ / "config.json").string(), nlohmann::json(config_).dump(2) + "\n");
  }

  void Write(const std::string& rel, const std::string& contents) {
    const fs::path p = dir_ / rel;
    fs::create_directories(p.parent_path());
    WriteFile(p.string(), contents);
  }

  void SetSpent(const PrivacyBudget& b) {
    spent_ = {{"epsilon", JsonNumber(b.epsilon)}, {"delta", b.delta}};
  }

  void Finish() {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir_)) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") {
        files.push_back(fs::relative(e.path(), dir_));
      }
    }
    std::sort(files.begin(), files.end());
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& f : files) {
      outputs[f.generic_string()] = HexDigest(Fnv1a64(ReadFile((dir_ / f).string())));
    }
    std::vector<std::string> replay = {command_, "--config", (dir_ / "config.json").string(),
                                       "--seed", std::to_string(seed_)};
    replay.insert(replay.end(), replay_.begin(), replay_.end());
    const nlohmann::json m = {{"format", "pate-asr-run"},
                              {"version", 1},
                              {"tool_version", kVersion},
                              {"command", command_},
                              {"seed", seed_},
                              {"config_hash", HexDigest(ConfigHash(config_))},
                              {"config", config_},
                              {"inputs", inputs_},
                              {"replay", replay},
                              {"spent", spent_},
                              {"outputs", outputs}};
    WriteFile((dir_ / "manifest.json").string(), m.dump(2) + "\n");
    std::cout << dir_.string() << "\n";
  }

 private:
  std::string command_;
  const Options& opts_;
  ExperimentConfig config_;
  uint64_t seed_ = 1;
  fs::path dir_;
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json spent_ = nullptr;
  std::vector<std::string> replay_;
  std::vector<fs::path> input_dirs_;
};

// Seed of a downstream command: --seed must agree with the input run if given.
uint64_t InheritSeed(const Options& o, const nlohmann::json& data_manifest) {
  const uint64_t seed = data_manifest.at("seed").get<uint64_t>();
  Require(!o.seed || *o.seed == seed, ErrorCode::kInvalidArgument,
          "--seed differs from the seed of the input run");
  return seed;
}

// Rebuilds the per-seed state from a data run (and optionally a teacher run).
SeedSetup LoadSetup(const ExperimentConfig& c, uint64_t seed, const std::string& data,
                    const std::string& teachers) {
  SeedSetup s;
  s.seed = seed;
  s.corpus = LoadCorpus(fs::path(data) / "corpus");
  s.test = GenerateHeldOut(s.corpus, static_cast<size_t>(c.test_utterances));
  s.partition = PartitionFromJson(ReadJson(fs::path(data) / "partition.json"));
  if (c.pretrain.enabled) s.init = Pretrain(c, seed);
  if (!teachers.empty()) {
    const nlohmann::json e = ReadJson(fs::path(teachers) / "ensemble.json");
    Require(e.value("format", "") == "pate-asr-ensemble", ErrorCode::kFormatError,
            "not a teacher ensemble");
    std::vector<ModelParams> models;
    for (const auto& f : e.at("teachers")) {
      models.push_back(LoadCheckpoint((fs::path(teachers) / f.get<std::string>()).string()).params);
    }
    s.ensemble.teachers = std::move(models);
    s.ensemble.weights = e.at("weights").get<std::vector<double>>();
    s.ensemble.Validate();
  }
  return s;
}

std::string TeacherFile(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "teacher_%03zu.ckpt", i);
  return buf;
}

int GenData(const Options& o) {
  Run run("gen-data", o);
  run.ResolveConfig();
  run.SetSeed(o.seed.value_or(1));
  run.Open();
  CorpusConfig cc = run.config().corpus;
  cc.seed = run.seed();
  const Corpus corpus = GenerateCorpus(cc);
  const auto& pc = run.config().partition;
  const CorpusPartition partition =
      Partition(corpus, pc.teachers, pc.strategy, pc.public_fraction, run.seed());
  SaveCorpus(corpus, run.dir() / "corpus");
  run.Write("partition.json", PartitionToJson(partition).dump(2) + "\n");
  const auto test = GenerateHeldOut(corpus, static_cast<size_t>(run.config().test_utterances));
  size_t test_frames = 0;
  for (const auto& u : test) test_frames += u.frames();
  const auto priv = PrivateIds(partition);
  run.Write("splits.csv",
            "split,utterances,frames\n"
            "private," + std::to_string(priv.size()) + "," +
                std::to_string(TotalFrames(corpus, priv)) + "\n"
            "public," + std::to_string(partition.public_set.size()) + "," +
                std::to_string(TotalFrames(corpus, partition.public_set)) + "\n"
            "test," + std::to_string(test.size()) + "," + std::to_string(test_frames) + "\n");
  run.Finish();
  return kExitOk;
}

int TrainTeachersCmd(const Options& o) {
  Run run("train-teachers", o);
  const auto dm = run.AddInput("data", o.data);
  run.ResolveConfig(o.data);
  run.SetSeed(InheritSeed(o, dm));
  run.Open();
  SeedSetup s = LoadSetup(run.config(), run.seed(), o.data, "");
  s.ensemble = TrainTeachers(s.corpus, s.partition, run.config().model,
                             run.config().teacher_train, run.seed(), o.jobs,
                             s.init ? &*s.init : nullptr);
  nlohmann::json files = nlohmann::json::array();
  std::string metrics = "teacher,shard_utterances,ter\n";
  for (size_t i = 0; i < s.ensemble.size(); ++i) {
    const std::string f = TeacherFile(i);
    SaveCheckpoint((run.dir() / f).string(), s.ensemble.teachers[i], run.seed());
    files.push_back(f);
    metrics += std::to_string(i) + "," + std::to_string(s.partition.subsets[i].size()) + "," +
               FormatDouble(ModelTer(s.ensemble.teachers[i], s.test)) + "\n";
  }
  if (s.init) SaveCheckpoint((run.dir() / "init.ckpt").string(), *s.init, run.seed());
  run.Write("ensemble.json", nlohmann::json({{"format", "pate-asr-ensemble"},
                                             {"version", 1},
                                             {"teachers", files},
                                             {"weights", s.ensemble.weights}})
                                     .dump(2) + "\n");
  run.Write("teacher_metrics.csv", metrics);
  run.Finish();
  return kExitOk;
}

int AggregateEval(const Options& o) {
  Run run("aggregate-eval", o);
  const auto dm = run.AddInput("data", o.data);
  run.AddInput("teachers", o.teachers_dir);
  run.ResolveConfig(o.data);
  run.SetSeed(InheritSeed(o, dm));
  run.Open();
  const SeedSetup s = LoadSetup(run.config(), run.seed(), o.data, o.teachers_dir);
  std::string csv = "model,ter\n";
  for (size_t i = 0; i < s.ensemble.size(); ++i) {
    csv += "teacher_" + std::to_string(i) + "," + FormatDouble(ModelTer(s.ensemble.teachers[i], s.test)) + "\n";
  }
  csv += "ensemble," + FormatDouble(EnsembleTer(s.ensemble, s.test)) + "\n";
  run.Write("aggregate_eval.csv", csv);
  std::cout << csv;
  run.Finish();
  return kExitOk;
}

int RelabelCmd(const Options& o) {
  Run run("relabel", o);
  const auto dm = run.AddInput("data", o.data);
  run.AddInput("teachers", o.teachers_dir);
  run.ResolveConfig(o.data);
  run.SetSeed(InheritSeed(o, dm));
  const NoiseKind kind = ParseNoiseKind(o.mechanism);
  run.AddReplayArg("--mechanism", o.mechanism);
  if (o.epsilon) run.AddReplayArg("--epsilon", FormatDouble(*o.epsilon));
  if (o.scale) run.AddReplayArg("--scale", FormatDouble(*o.scale));
  Require(kind == NoiseKind::kNone || o.epsilon || o.scale, ErrorCode::kInvalidArgument,
          "a noisy mechanism needs --epsilon or --scale");
  run.Open();
  const ExperimentConfig& c = run.config();
  const SeedSetup s = LoadSetup(c, run.seed(), o.data, o.teachers_dir);
  StudentLabelSet labels;
  if (kind == NoiseKind::kNone) {
    labels = CleanLabels(s.ensemble, s.corpus, s.partition.public_set, c.relabel_mode, c.nbest,
                         c.delta);
  } else if (!o.scale) {
    labels = RelabelForSeed(c, s, kind, *o.epsilon);
  } else {
    RelabelConfig rc;
    rc.mode = c.relabel_mode;
    rc.nbest = c.nbest;
    rc.seed = DeriveSeed(s.seed, {0x4e1a, static_cast<uint64_t>(kind)});
    rc.delta = c.delta;
    rc.spec = NoiseSpec(kind, *o.scale);
    if (o.epsilon) rc.target = PrivacyBudget(*o.epsilon, c.delta);
    rc.jobs = o.jobs;
    labels = RelabelPublic(s.ensemble, s.corpus, s.partition.public_set, rc);
  }
  SaveLabelSet(labels, run.dir() / "labels");
  run.SetSpent(labels.spent);
  run.Finish();
  return kExitOk;
}

int TrainStudentCmd(const Options& o) {
  Run run("train-student", o);
  const auto dm = run.AddInput("data", o.data);
  run.AddInput("labels", o.labels);
  run.ResolveConfig(o.data);
  run.SetSeed(InheritSeed(o, dm));
  run.Open();
  const SeedSetup s = LoadSetup(run.config(), run.seed(), o.data, "");
  const StudentLabelSet labels = LoadLabelSet(fs::path(o.labels) / "labels");
  const StudentResult r = TrainStudentForSeed(run.config(), s, labels);
  SaveCheckpoint((run.dir() / "student.ckpt").string(), r.params, run.seed());
  run.Write("student_metrics.csv", "ter,spent_epsilon,delta\n" +
                                       FormatDouble(ModelTer(r.params, s.test)) + "," +
                                       FormatDouble(r.spent.epsilon) + "," +
                                       FormatDouble(r.spent.delta) + "\n");
  std::string losses = "epoch,loss\n";
  for (size_t e = 0; e < r.epoch_losses.size(); ++e) {
    losses += std::to_string(e) + "," + FormatDouble(r.epoch_losses[e]) + "\n";
  }
  run.Write("epoch_losses.csv", losses);
  run.SetSpent(r.spent);
  run.Finish();
  return kExitOk;
}

int TrainDpSgdCmd(const Options& o) {
  Run run("train-dpsgd", o);
  const auto dm = run.AddInput("data", o.data);
  run.ResolveConfig(o.data);
  run.SetSeed(InheritSeed(o, dm));
  Require(o.epsilon.has_value(), ErrorCode::kInvalidArgument, "--epsilon is required");
  run.AddReplayArg("--epsilon", FormatDouble(*o.epsilon));
  if (o.noise_multiplier) run.AddReplayArg("--noise-multiplier", FormatDouble(*o.noise_multiplier));
  run.Open();
  const SeedSetup s = LoadSetup(run.config(), run.seed(), o.data, "");
  DpSgdConfig dc = DpSgdConfigForSeed(run.config(), s, *o.epsilon);
  if (o.noise_multiplier) dc.noise_multiplier = *o.noise_multiplier;
  dc.jobs = o.jobs;
  const DpSgdResult r = RunDpSgd(run.config(), s, dc);
  SaveCheckpoint((run.dir() / "dpsgd.ckpt").string(), r.params, run.seed());
  run.Write("dpsgd_metrics.csv",
            "ter,spent_epsilon,delta,steps,noise_multiplier,stopped_early\n" +
                FormatDouble(ModelTer(r.params, s.test)) + "," + FormatDouble(r.spent.epsilon) +
                "," + FormatDouble(r.spent.delta) + "," + std::to_string(r.steps) + "," +
                FormatDouble(dc.noise_multiplier) + "," + (r.stopped_early ? "true" : "false") +
                "\n");
  std::string trace = "step,epsilon\n";
  for (size_t i = 0; i < r.trace.step_epsilons.size(); ++i) {
    trace += std::to_string(i + 1) + "," + FormatDouble(r.trace.step_epsilons[i]) + "\n";
  }
  run.Write("dpsgd_trace.csv", trace);
  run.SetSpent(r.spent);
  run.Finish();
  return kExitOk;
}

// --model NAME=CHECKPOINT[@EPSILON]; a missing epsilon means no privacy.
AttackModel ParseModelArg(const std::string& arg) {
  const size_t eq = arg.find('=');
  Require(eq != std::string::npos && eq > 0, ErrorCode::kInvalidArgument,
          "--model expects NAME=CHECKPOINT[@EPSILON], got '" + arg + "'");
  AttackModel m;
  m.name = arg.substr(0, eq);
  std::string path = arg.substr(eq + 1);
  const size_t at = path.rfind('@');
  if (at != std::string::npos) {
    m.epsilon = ParseDouble(path.substr(at + 1));
    path = path.substr(0, at);
  }
  m.params = LoadCheckpoint(path).params;
  return m;
}

int AttackCmd(const Options& o) {
  Run run("attack", o);
  const auto dm = run.AddInput("data", o.data);
  run.ResolveConfig(o.data);
  run.SetSeed(InheritSeed(o, dm));
  Require(!o.models.empty(), ErrorCode::kInvalidArgument, "--model is required");
  std::vector<AttackModel> models;
  for (const auto& arg : o.models) {
    models.push_back(ParseModelArg(arg));
    run.AddReplayArg("--model", arg);
  }
  run.Open();
  const ExperimentConfig& c = run.config();
  const Corpus corpus = LoadCorpus(fs::path(o.data) / "corpus");
  InversionConfig ic;
  ic.frames = c.attack.frames;
  ic.steps = c.attack.steps;
  ic.step_size = c.attack.step_size;
  ic.query_budget = c.attack.query_budget;
  ic.seed = DeriveSeed(run.seed(), {0xa77});
  const AttackReport report =
      RunAttack(models, c.attack.target, TargetTemplate(corpus.class_means, c.attack.target), ic,
                c.attack.trials, "no_dp", o.jobs);
  run.Write("attack_rows.csv", report.RowsCsv());
  run.Write("attack_summary.csv", report.SummaryCsv());
  std::cout << report.SummaryCsv();
  run.Finish();
  return kExitOk;
}

int SweepCmd(const Options& o) {
  Run run("sweep", o);
  run.ResolveConfig();
  Require(o.seed.has_value(), ErrorCode::kInvalidArgument, "sweep needs --seed");
  run.SetSeed(*o.seed);
  if (o.save_models) run.AddReplayFlag("--save-models");
  run.Open();
  SweepResult r = RunSweep(run.config(), run.seed(), o.jobs, o.save_models);
  run.Write("sweep.csv", SweepCsv(r.rows));
  run.Write("cells.csv", CellsCsv(r.cells));
  std::string ens = "repetition,seed,ensemble_ter\n";
  for (size_t k = 0; k < r.ensemble_ters.size(); ++k) {
    ens += std::to_string(k) + "," + std::to_string(RunSeed(run.seed(), static_cast<int>(k))) +
           "," + FormatDouble(r.ensemble_ters[k]) + "\n";
  }
  run.Write("ensemble.csv", ens);
  if (o.save_models) {
    for (size_t k = 0; k < r.outcomes.size(); ++k) {
      const uint64_t seed = RunSeed(run.seed(), static_cast<int>(k));
      const fs::path d = run.dir() / "models" / ("rep" + std::to_string(k));
      fs::create_directories(d);
      SaveCheckpoint((d / "clean.ckpt").string(), r.outcomes[k].clean_student, seed);
      for (const auto& [eps, params] : r.outcomes[k].gnmax_students) {
        SaveCheckpoint((d / ("pate_gnmax_eps" + FormatDouble(eps) + ".ckpt")).string(), params,
                       seed);
      }
    }
  }
  std::cout << SweepCsv(r.rows);
  run.Finish();
  return kExitOk;
}

int ReportCmd(const Options& o) {
  Run run("report", o);
  const auto sm = run.AddInput("sweep", o.sweep_dir);
  run.ResolveConfig(o.sweep_dir);
  run.SetSeed(InheritSeed(o, sm));
  run.Open();
  const auto rows = ParseSweepCsv(ReadFile((fs::path(o.sweep_dir) / "sweep.csv").string()));
  const std::string gap = GapReportCsv(rows);
  run.Write("gap.csv", gap);
  std::cout << gap;
  run.Finish();
  return kExitOk;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBudgetExceeded:
    case ErrorCode::kBudgetExhaustedBeforeOneEpoch:
      return kExitBudget;
    case ErrorCode::kDivergenceDetected:
      return kExitDivergence;
    default:
      return kExitConfig;
  }
}

int Main(int argc, char** argv) {
  CLI::App app{"Private aggregation of teacher ensembles for synthetic speech recognition"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;
  std::map<CLI::App*, int (*)(const Options&)> handlers;
  auto add = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    AddCommon(sub, o);
    handlers[sub] = fn;
    return sub;
  };

  add("gen-data", "generate the corpus and its partition", GenData);

  auto* tt = add("train-teachers", "train one teacher per private shard", TrainTeachersCmd);
  tt->add_option("--data", o.data, "gen-data run")->required();

  auto* ae = add("aggregate-eval", "test TER of every teacher and of the ensemble", AggregateEval);
  ae->add_option("--data", o.data)->required();
  ae->add_option("--teachers", o.teachers_dir, "train-teachers run")->required();

  auto* rl = add("relabel", "label the public set through a noisy aggregate", RelabelCmd);
  rl->add_option("--data", o.data)->required();
  rl->add_option("--teachers", o.teachers_dir)->required();
  rl->add_option("--mechanism", o.mechanism, "gnmax, lnmax or none")->required();
  rl->add_option("--epsilon", o.epsilon, "budget; calibrates the noise unless --scale is set");
  rl->add_option("--scale", o.scale, "explicit noise scale");

  auto* ts = add("train-student", "train the student on released labels", TrainStudentCmd);
  ts->add_option("--data", o.data)->required();
  ts->add_option("--labels", o.labels, "relabel run")->required();

  auto* td = add("train-dpsgd", "DP-SGD baseline on the private shards", TrainDpSgdCmd);
  td->add_option("--data", o.data)->required();
  td->add_option("--epsilon", o.epsilon)->required();
  td->add_option("--noise-multiplier", o.noise_multiplier, "override the calibrated sigma");

  auto* at = add("attack", "model inversion against saved checkpoints", AttackCmd);
  at->add_option("--data", o.data)->required();
  at->add_option("--model", o.models, "NAME=CHECKPOINT[@EPSILON]; one must be named no_dp")
      ->required();

  auto* sw = add("sweep", "epsilon grid x seeds for every method", SweepCmd);
  sw->get_option("--seed")->required();
  sw->add_flag("--save-models", o.save_models, "keep student checkpoints for attacks");

  auto* rp = add("report", "PATE vs DP-SGD TER gap from a sweep", ReportCmd);
  rp->add_option("--sweep", o.sweep_dir, "sweep run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (const auto& [sub, fn] : handlers) {
    if (!sub->parsed()) continue;
    try {
      return fn(o);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return ExitCodeFor(e.code());
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: bad JSON: " << e.what() << "\n";
      return kExitConfig;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
  }
  return kExitConfig;
}

}  // namespace
}  // namespace pate_asr

int main(int argc, char** argv) { return pate_asr::Main(argc, argv); }
