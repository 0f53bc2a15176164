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

#ifndef PATE_ASR_CORPUS_HPP_
#define PATE_ASR_CORPUS_HPP_

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pate_asr/csv.hpp"
#include "pate_asr/error.hpp"
#include "pate_asr/matrix.hpp"
#include "pate_asr/random.hpp"

namespace pate_asr {

struct CorpusConfig {
  int vocab = 8;
  int feat_dim = 8;
  int min_frames_per_token = 4;
  int max_frames_per_token = 12;
  int min_tokens = 2;
  int max_tokens = 4;
  int utterances = 1440;
  int speakers = 24;
  double emission_std = 0.3;
  double speaker_offset_std = 0.3;
  // Added to every class mean; a nonzero shift gives the second-domain corpus.
  double mean_shift = 0.0;
  uint64_t means_seed = 20221017;
  uint64_t seed = 1;

  void Validate() const {
    Require(vocab >= 2, ErrorCode::kInvalidRange, "vocab must be at least 2");
    Require(feat_dim >= 1, ErrorCode::kInvalidRange, "feat_dim must be positive");
    Require(min_frames_per_token >= 1 &&
                max_frames_per_token >= min_frames_per_token,
            ErrorCode::kInvalidRange, "bad frames-per-token range");
    Require(min_tokens >= 1 && max_tokens >= min_tokens, ErrorCode::kInvalidRange,
            "bad token-length range");
    Require(utterances >= 1, ErrorCode::kInvalidRange, "need utterances");
    Require(speakers >= 1, ErrorCode::kInvalidRange, "need speakers");
    Require(emission_std >= 0.0 && speaker_offset_std >= 0.0,
            ErrorCode::kInvalidRange, "negative std");
  }

  friend bool operator==(const CorpusConfig&, const CorpusConfig&) = default;
};

inline void to_json(nlohmann::json& j, const CorpusConfig& c) {
  j = {{"vocab", c.vocab},
       {"feat_dim", c.feat_dim},
       {"min_frames_per_token", c.min_frames_per_token},
       {"max_frames_per_token", c.max_frames_per_token},
       {"min_tokens", c.min_tokens},
       {"max_tokens", c.max_tokens},
       {"utterances", c.utterances},
       {"speakers", c.speakers},
       {"emission_std", c.emission_std},
       {"speaker_offset_std", c.speaker_offset_std},
       {"mean_shift", c.mean_shift},
       {"means_seed", c.means_seed},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, CorpusConfig& c) {
  CorpusConfig d;
  c.vocab = j.value("vocab", d.vocab);
  c.feat_dim = j.value("feat_dim", d.feat_dim);
  c.min_frames_per_token = j.value("min_frames_per_token", d.min_frames_per_token);
  c.max_frames_per_token = j.value("max_frames_per_token", d.max_frames_per_token);
  c.min_tokens = j.value("min_tokens", d.min_tokens);
  c.max_tokens = j.value("max_tokens", d.max_tokens);
  c.utterances = j.value("utterances", d.utterances);
  c.speakers = j.value("speakers", d.speakers);
  c.emission_std = j.value("emission_std", d.emission_std);
  c.speaker_offset_std = j.value("speaker_offset_std", d.speaker_offset_std);
  c.mean_shift = j.value("mean_shift", d.mean_shift);
  c.means_seed = j.value("means_seed", d.means_seed);
  c.seed = j.value("seed", d.seed);
}

struct SyntheticUtterance {
  Matrix features;  // T x F
  std::vector<int> tokens;
  int speaker_id = 0;

  size_t frames() const { return features.rows(); }
  friend bool operator==(const SyntheticUtterance&, const SyntheticUtterance&) = default;
};

struct Corpus {
  CorpusConfig config;
  Matrix class_means;      // V x F
  Matrix speaker_offsets;  // speakers x F
  std::vector<SyntheticUtterance> utterances;

  size_t size() const { return utterances.size(); }
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

inline Matrix DrawClassMeans(const CorpusConfig& config) {
  Rng rng(config.means_seed);
  Matrix means(config.vocab, config.feat_dim);
  for (double& x : means.data()) x = rng.Normal() + config.mean_shift;
  return means;
}

inline SyntheticUtterance GenerateUtterance(const Corpus& corpus, size_t u) {
  const CorpusConfig& config = corpus.config;
  const size_t F = static_cast<size_t>(config.feat_dim);
  Rng rng(DeriveSeed(config.seed, {2, static_cast<uint64_t>(u)}));
  SyntheticUtterance utt;
  utt.speaker_id = static_cast<int>(u % static_cast<size_t>(config.speakers));
  const int length = rng.UniformInt(config.min_tokens, config.max_tokens);
  std::vector<int> durations;
  for (int k = 0; k < length; ++k) {
    // Uniform over tokens that differ from the previous one: back-to-back
    // segments of one class would have no boundary in the features.
    int tok = static_cast<int>(rng.UniformIndex(config.vocab - (k > 0 ? 1 : 0)));
    if (k > 0 && tok >= utt.tokens.back()) ++tok;
    utt.tokens.push_back(tok);
    durations.push_back(
        rng.UniformInt(config.min_frames_per_token, config.max_frames_per_token));
  }
  size_t total = 0;
  for (int d : durations) total += static_cast<size_t>(d);
  utt.features = Matrix(total, F);
  size_t t = 0;
  for (int k = 0; k < length; ++k) {
    const auto mean = corpus.class_means.row(utt.tokens[k]);
    const auto offset = corpus.speaker_offsets.row(utt.speaker_id);
    for (int f = 0; f < durations[k]; ++f, ++t) {
      for (size_t d = 0; d < F; ++d) {
        utt.features(t, d) = mean[d] + offset[d] + config.emission_std * rng.Normal();
      }
    }
  }
  return utt;
}

// Every stream is keyed by (seed, purpose, index), so utterance u does not
// depend on how many draws earlier utterances consumed.
inline Corpus GenerateCorpus(const CorpusConfig& config) {
  config.Validate();
  Corpus corpus;
  corpus.config = config;
  corpus.class_means = DrawClassMeans(config);
  corpus.speaker_offsets = Matrix(config.speakers, config.feat_dim);
  {
    Rng rng(DeriveSeed(config.seed, {1}));
    for (double& x : corpus.speaker_offsets.data()) {
      x = config.speaker_offset_std * rng.Normal();
    }
  }
  corpus.utterances.reserve(config.utterances);
  for (int u = 0; u < config.utterances; ++u) {
    corpus.utterances.push_back(GenerateUtterance(corpus, static_cast<size_t>(u)));
  }
  return corpus;
}

// Utterances with ids size()..size()+count-1, drawn from the same speakers and
// class means. Used as the evaluation set.
inline std::vector<SyntheticUtterance> GenerateHeldOut(const Corpus& corpus,
                                                       size_t count) {
  std::vector<SyntheticUtterance> out;
  out.reserve(count);
  for (size_t k = 0; k < count; ++k) {
    out.push_back(GenerateUtterance(corpus, corpus.size() + k));
  }
  return out;
}

enum class PartitionStrategy { kBySpeaker, kRoundRobin };

inline PartitionStrategy ParsePartitionStrategy(std::string_view s) {
  if (s == "by_speaker") return PartitionStrategy::kBySpeaker;
  if (s == "round_robin") return PartitionStrategy::kRoundRobin;
  throw Error(ErrorCode::kInvalidArgument, "unknown partition strategy '" +
                                               std::string(s) + "'");
}

struct CorpusPartition {
  std::vector<std::vector<size_t>> subsets;  // teacher shards D_1..D_I
  std::vector<size_t> public_set;

  friend bool operator==(const CorpusPartition&, const CorpusPartition&) = default;
};

// Seeded Fisher-Yates.
template <typename T>
void Shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.UniformIndex(i)]);
  }
}

// Holds out round(public_fraction * N) utterances as the public set and splits
// the rest into `num_teachers` disjoint shards. Ids inside each set are sorted.
inline CorpusPartition Partition(const Corpus& corpus, int num_teachers,
                                 PartitionStrategy strategy, double public_fraction,
                                 uint64_t seed) {
  const size_t n = corpus.size();
  Require(num_teachers >= 1, ErrorCode::kInvalidArgument, "need a teacher");
  Require(n >= static_cast<size_t>(num_teachers) + 1, ErrorCode::kInvalidArgument,
          "corpus too small for this many teachers");
  Require(public_fraction > 0.0 && public_fraction < 1.0,
          ErrorCode::kInvalidArgument, "public_fraction must lie in (0, 1)");
  size_t num_public = static_cast<size_t>(std::llround(public_fraction * n));
  num_public = std::clamp<size_t>(num_public, 1, n - num_teachers);

  Rng rng(DeriveSeed(seed, {0x9a47}));
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Shuffle(order, rng);

  CorpusPartition part;
  part.public_set.assign(order.begin(), order.begin() + num_public);
  std::vector<size_t> priv(order.begin() + num_public, order.end());
  part.subsets.assign(num_teachers, {});

  if (strategy == PartitionStrategy::kRoundRobin) {
    for (size_t k = 0; k < priv.size(); ++k) {
      part.subsets[k % num_teachers].push_back(priv[k]);
    }
  } else {
    std::map<int, std::vector<size_t>> by_speaker;
    for (size_t id : priv) by_speaker[corpus.utterances[id].speaker_id].push_back(id);
    Require(by_speaker.size() >= static_cast<size_t>(num_teachers),
            ErrorCode::kTooFewSpeakers,
            "fewer private speakers than teachers");
    std::vector<int> speakers;
    for (const auto& [spk, ids] : by_speaker) speakers.push_back(spk);
    Shuffle(speakers, rng);
    // Largest remaining speaker goes to the currently smallest shard.
    std::stable_sort(speakers.begin(), speakers.end(), [&](int a, int b) {
      return by_speaker[a].size() > by_speaker[b].size();
    });
    for (int spk : speakers) {
      size_t target = 0;
      for (size_t i = 1; i < part.subsets.size(); ++i) {
        if (part.subsets[i].size() < part.subsets[target].size()) target = i;
      }
      auto& ids = by_speaker[spk];
      part.subsets[target].insert(part.subsets[target].end(), ids.begin(), ids.end());
    }
  }
  std::sort(part.public_set.begin(), part.public_set.end());
  for (auto& s : part.subsets) std::sort(s.begin(), s.end());
  return part;
}

inline nlohmann::json PartitionToJson(const CorpusPartition& p) {
  return {{"subsets", p.subsets}, {"public_set", p.public_set}};
}

inline CorpusPartition PartitionFromJson(const nlohmann::json& j) {
  CorpusPartition p;
  p.subsets = j.at("subsets").get<std::vector<std::vector<size_t>>>();
  p.public_set = j.at("public_set").get<std::vector<size_t>>();
  return p;
}

// On-disk layout:
//   manifest.json   config, seed, class_means, speaker_offsets
//   labels.csv      utterance_id,speaker_id,space separated tokens
//   utt_NNNNNN.csv  one row per frame, one column per feature
inline std::string UtteranceFileName(size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "utt_%06zu.csv", id);
  return buf;
}

inline nlohmann::json MatrixToJson(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

inline Matrix MatrixFromJson(const nlohmann::json& j) {
  const size_t rows = j.size();
  const size_t cols = rows ? j.at(0).size() : 0;
  Matrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    Require(j.at(r).size() == cols, ErrorCode::kFormatError, "ragged matrix");
    for (size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

inline void SaveCorpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = {{"format", "pate-asr-corpus"},
                             {"version", 1},
                             {"config", corpus.config},
                             {"seed", corpus.config.seed},
                             {"class_means", MatrixToJson(corpus.class_means)},
                             {"speaker_offsets", MatrixToJson(corpus.speaker_offsets)},
                             {"utterances", corpus.size()}};
  WriteFile((dir / "manifest.json").string(), manifest.dump(2) + "\n");
  std::string labels = "utterance_id,speaker_id,tokens\n";
  for (size_t id = 0; id < corpus.size(); ++id) {
    const auto& utt = corpus.utterances[id];
    labels += std::to_string(id) + "," + std::to_string(utt.speaker_id) + ",";
    for (size_t k = 0; k < utt.tokens.size(); ++k) {
      if (k) labels += ' ';
      labels += std::to_string(utt.tokens[k]);
    }
    labels += '\n';
    WriteFile((dir / UtteranceFileName(id)).string(), MatrixToCsv(utt.features));
  }
  WriteFile((dir / "labels.csv").string(), labels);
}

inline Corpus LoadCorpus(const std::filesystem::path& dir) {
  const auto manifest = nlohmann::json::parse(ReadFile((dir / "manifest.json").string()));
  Require(manifest.value("format", "") == "pate-asr-corpus", ErrorCode::kFormatError,
          dir.string() + " is not a corpus directory");
  Corpus corpus;
  corpus.config = manifest.at("config").get<CorpusConfig>();
  corpus.class_means = MatrixFromJson(manifest.at("class_means"));
  corpus.speaker_offsets = MatrixFromJson(manifest.at("speaker_offsets"));
  const auto lines = ReadLines((dir / "labels.csv").string());
  Require(!lines.empty(), ErrorCode::kFormatError, "labels.csv is empty");
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto fields = SplitFields(lines[i], ',');
    Require(fields.size() == 3, ErrorCode::kFormatError, "bad labels.csv row");
    const auto id = static_cast<size_t>(ParseInt(fields[0]));
    Require(id == corpus.utterances.size(), ErrorCode::kFormatError,
            "labels.csv rows out of order");
    SyntheticUtterance utt;
    utt.speaker_id = static_cast<int>(ParseInt(fields[1]));
    for (auto tok : SplitFields(fields[2], ' ')) {
      if (!tok.empty()) utt.tokens.push_back(static_cast<int>(ParseInt(tok)));
    }
    utt.features = MatrixFromCsv((dir / UtteranceFileName(id)).string());
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

}  // namespace pate_asr

#endif  // PATE_ASR_CORPUS_HPP_
