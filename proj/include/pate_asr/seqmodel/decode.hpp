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

#ifndef PATE_ASR_SEQMODEL_DECODE_HPP_
#define PATE_ASR_SEQMODEL_DECODE_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "pate_asr/error.hpp"
#include "pate_asr/matrix.hpp"
#include "pate_asr/seqmodel/logmath.hpp"
#include "pate_asr/seqmodel/model.hpp"
#include "pate_asr/seqmodel/params.hpp"

namespace pate_asr {

struct Hypothesis {
  std::vector<int> tokens;
  double log_prob = 0.0;
  double normalized_prob = 1.0;

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

// Sort by score (ties by token sequence), keep the first `n`, and attach a
// softmax over the kept log-probs as normalized_prob.
inline std::vector<Hypothesis> FinalizeNBest(std::vector<Hypothesis> hyps, size_t n) {
  std::sort(hyps.begin(), hyps.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.tokens < b.tokens;
  });
  if (hyps.size() > n) hyps.resize(n);
  std::vector<double> lps;
  for (const auto& h : hyps) lps.push_back(h.log_prob);
  const double lse = LogSumExp(lps);
  for (auto& h : hyps) {
    h.normalized_prob = lse == kLogZero ? 1.0 / static_cast<double>(hyps.size())
                                        : std::exp(h.log_prob - lse);
  }
  return hyps;
}

// CTC collapse: merge repeats, then drop blanks.
inline std::vector<int> CtcCollapse(std::span<const int> path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

// Transducer frame labels carry one emission per frame; blanks are dropped.
inline std::vector<int> DropBlanks(std::span<const int> path, int blank) {
  std::vector<int> out;
  for (int s : path) {
    if (s != blank) out.push_back(s);
  }
  return out;
}

inline std::vector<int> FramewiseArgMax(const Matrix& scores) {
  std::vector<int> path(scores.rows());
  for (size_t t = 0; t < scores.rows(); ++t) {
    const auto row = scores.row(t);
    path[t] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return path;
}

inline std::vector<int> CtcGreedy(const Matrix& scores, int blank) {
  return CtcCollapse(FramewiseArgMax(scores), blank);
}

// Prefix beam search over log posteriors. Prefixes that collapse to the same
// label sequence are merged, keeping separate blank/non-blank ending mass.
inline std::vector<Hypothesis> CtcPrefixBeamSearch(const Matrix& log_probs, int blank,
                                                   size_t beam) {
  Require(beam >= 1, ErrorCode::kInvalidArgument, "beam width must be positive");
  struct Mass {
    double blank_end = kLogZero;
    double label_end = kLogZero;
    double total() const { return LogAdd(blank_end, label_end); }
  };
  std::map<std::vector<int>, Mass> beams;
  beams[{}].blank_end = 0.0;
  const size_t O = log_probs.cols();
  for (size_t t = 0; t < log_probs.rows(); ++t) {
    std::map<std::vector<int>, Mass> next;
    for (const auto& [prefix, mass] : beams) {
      const double total = mass.total();
      for (size_t k = 0; k < O; ++k) {
        const double lp = log_probs(t, k);
        if (lp == kLogZero) continue;
        const int sym = static_cast<int>(k);
        if (sym == blank) {
          auto& m = next[prefix];
          m.blank_end = LogAdd(m.blank_end, total + lp);
          continue;
        }
        std::vector<int> extended = prefix;
        extended.push_back(sym);
        auto& ext = next[extended];
        if (!prefix.empty() && prefix.back() == sym) {
          ext.label_end = LogAdd(ext.label_end, mass.blank_end + lp);
          auto& same = next[prefix];
          same.label_end = LogAdd(same.label_end, mass.label_end + lp);
        } else {
          ext.label_end = LogAdd(ext.label_end, total + lp);
        }
      }
    }
    std::vector<std::pair<std::vector<int>, Mass>> ranked(next.begin(), next.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second.total() > b.second.total();
    });
    if (ranked.size() > beam) ranked.resize(beam);
    beams = std::map<std::vector<int>, Mass>(ranked.begin(), ranked.end());
  }
  std::vector<Hypothesis> hyps;
  for (const auto& [prefix, mass] : beams) hyps.push_back({prefix, mass.total(), 0.0});
  return FinalizeNBest(std::move(hyps), beam);
}

// N-best over per-frame log posteriors where every non-blank frame emits one
// token (transducer frame labels, no repeat merging).
inline std::vector<Hypothesis> DropBlankBeamSearch(const Matrix& log_probs, int blank,
                                                   size_t beam) {
  Require(beam >= 1, ErrorCode::kInvalidArgument, "beam width must be positive");
  std::map<std::vector<int>, double> beams;
  beams[{}] = 0.0;
  for (size_t t = 0; t < log_probs.rows(); ++t) {
    std::map<std::vector<int>, double> next;
    for (const auto& [prefix, score] : beams) {
      for (size_t k = 0; k < log_probs.cols(); ++k) {
        const double lp = log_probs(t, k);
        if (lp == kLogZero) continue;
        std::vector<int> key = prefix;
        if (static_cast<int>(k) != blank) key.push_back(static_cast<int>(k));
        auto [it, fresh] = next.try_emplace(std::move(key), score + lp);
        if (!fresh) it->second = LogAdd(it->second, score + lp);
      }
    }
    std::vector<std::pair<std::vector<int>, double>> ranked(next.begin(), next.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > beam) ranked.resize(beam);
    beams = std::map<std::vector<int>, double>(ranked.begin(), ranked.end());
  }
  std::vector<Hypothesis> hyps;
  for (const auto& [prefix, score] : beams) hyps.push_back({prefix, score, 0.0});
  return FinalizeNBest(std::move(hyps), beam);
}

struct RnntDecodeOptions {
  int max_symbols_per_frame = 3;
};

namespace internal {

// Incremental prediction-network state for decoding.
struct PredictionState {
  std::vector<double> g;     // H
  std::vector<double> proj;  // Ap g, O
};

inline PredictionState AdvancePrediction(const ModelParams& p,
                                         const PredictionState* prev, int ctx) {
  const ParamLayout l = p.layout();
  const size_t H = p.dims().hidden, O = p.dims().outputs();
  const double* w = p.values().data();
  PredictionState s;
  s.g.assign(H, 0.0);
  for (size_t i = 0; i < H; ++i) s.g[i] = w[l.emb + ctx * H + i] + w[l.bg + i];
  if (prev) MatVecAdd(w + l.wg, H, H, prev->g.data(), s.g.data());
  for (double& v : s.g) v = std::tanh(v);
  s.proj.assign(O, 0.0);
  MatVecAdd(w + l.ap, O, H, s.g.data(), s.proj.data());
  return s;
}

inline std::vector<double> JointLogProbs(std::span<const double> enc_row,
                                         const PredictionState& s) {
  std::vector<double> z(enc_row.begin(), enc_row.end());
  for (size_t k = 0; k < z.size(); ++k) z[k] += s.proj[k];
  LogSoftmaxInPlace(z);
  return z;
}

}  // namespace internal

struct RnntGreedyResult {
  std::vector<int> tokens;
  std::vector<int> frame_labels;  // first emission of each frame, or blank
  Matrix frame_posteriors;        // joint posterior at the first decision of each frame
};

// Greedy transducer decoding with at most `max_symbols_per_frame` emissions
// per frame.
inline RnntGreedyResult RnntGreedy(const ModelParams& p, const Matrix& x,
                                   RnntDecodeOptions opts = {}) {
  Require(p.arch() == Arch::kRnnt, ErrorCode::kInvalidArgument, "not an rnnt model");
  internal::CheckFeatures(p, x);
  const int blank = p.dims().blank();
  const Matrix enc = EncoderProjection(p, EncoderForward(p, x));
  RnntGreedyResult r;
  r.frame_posteriors = Matrix(x.rows(), p.dims().outputs());
  r.frame_labels.assign(x.rows(), blank);
  internal::PredictionState state = internal::AdvancePrediction(p, nullptr, p.dims().vocab);
  for (size_t t = 0; t < x.rows(); ++t) {
    for (int n = 0; n < opts.max_symbols_per_frame; ++n) {
      const auto lp = internal::JointLogProbs(enc.row(t), state);
      if (n == 0) {
        for (size_t k = 0; k < lp.size(); ++k) r.frame_posteriors(t, k) = std::exp(lp[k]);
      }
      const int best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      if (best == blank) break;
      r.tokens.push_back(best);
      if (n == 0) r.frame_labels[t] = best;
      state = internal::AdvancePrediction(p, &state, best);
    }
  }
  return r;
}

// Time-synchronous transducer beam search. Within a frame, each expansion
// step ranks blank-terminated and label-extended candidates together and keeps
// the best `beam`; identical prefixes are merged by log-sum.
inline std::vector<Hypothesis> RnntBeamSearch(const ModelParams& p, const Matrix& x,
                                              size_t beam, RnntDecodeOptions opts = {}) {
  Require(beam >= 1, ErrorCode::kInvalidArgument, "beam width must be positive");
  Require(p.arch() == Arch::kRnnt, ErrorCode::kInvalidArgument, "not an rnnt model");
  internal::CheckFeatures(p, x);
  const int blank = p.dims().blank();
  const size_t O = p.dims().outputs();
  const Matrix enc = EncoderProjection(p, EncoderForward(p, x));

  struct Hyp {
    std::vector<int> tokens;
    double score;
    internal::PredictionState state;
  };
  std::vector<Hyp> active;
  active.push_back({{}, 0.0, internal::AdvancePrediction(p, nullptr, p.dims().vocab)});

  auto merge_into = [](std::vector<Hyp>& pool, Hyp h) {
    for (auto& q : pool) {
      if (q.tokens == h.tokens) {
        q.score = LogAdd(q.score, h.score);
        return;
      }
    }
    pool.push_back(std::move(h));
  };
  auto by_score = [](const Hyp& a, const Hyp& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
  };

  for (size_t t = 0; t < x.rows(); ++t) {
    std::vector<Hyp> done;
    std::vector<Hyp> frontier = std::move(active);
    for (int step = 0; step <= opts.max_symbols_per_frame && !frontier.empty(); ++step) {
      struct Cand {
        size_t src;
        int sym;
        double score;
      };
      std::vector<Cand> cands;
      for (size_t i = 0; i < frontier.size(); ++i) {
        const auto lp = internal::JointLogProbs(enc.row(t), frontier[i].state);
        cands.push_back({i, blank, frontier[i].score + lp[blank]});
        if (step == opts.max_symbols_per_frame) continue;
        for (size_t k = 0; k < O; ++k) {
          if (static_cast<int>(k) != blank) {
            cands.push_back({i, static_cast<int>(k), frontier[i].score + lp[k]});
          }
        }
      }
      std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return a.score > b.score;
      });
      if (cands.size() > beam) cands.resize(beam);
      std::vector<Hyp> next;
      for (const Cand& c : cands) {
        const Hyp& src = frontier[c.src];
        if (c.sym == blank) {
          merge_into(done, {src.tokens, c.score, src.state});
        } else {
          Hyp h{src.tokens, c.score, internal::AdvancePrediction(p, &src.state, c.sym)};
          h.tokens.push_back(c.sym);
          merge_into(next, std::move(h));
        }
      }
      frontier = std::move(next);
    }
    std::sort(done.begin(), done.end(), by_score);
    if (done.size() > beam) done.resize(beam);
    active = std::move(done);
  }
  std::vector<Hypothesis> hyps;
  for (auto& h : active) hyps.push_back({h.tokens, h.score, 0.0});
  return FinalizeNBest(std::move(hyps), beam);
}

// Greedy hypothesis for either architecture.
inline std::vector<int> GreedyDecode(const ModelParams& p, const Matrix& x) {
  if (p.arch() == Arch::kRnnt) return RnntGreedy(p, x).tokens;
  return CtcGreedy(ForwardFrames(p, x).log_probs, p.dims().blank());
}

inline std::vector<Hypothesis> BeamSearch(const ModelParams& p, const Matrix& x,
                                          size_t beam) {
  if (p.arch() == Arch::kRnnt) return RnntBeamSearch(p, x, beam);
  return CtcPrefixBeamSearch(ForwardFrames(p, x).log_probs, p.dims().blank(), beam);
}

// Per-frame posteriors: softmax outputs for frame models, joint posteriors
// along the greedy path for transducers.
inline Matrix FramePosteriors(const ModelParams& p, const Matrix& x) {
  if (p.arch() == Arch::kRnnt) return RnntGreedy(p, x).frame_posteriors;
  return ExpMatrix(ForwardFrames(p, x).log_probs);
}

// Pre-collapse per-frame symbols (the frame votes of a teacher).
inline std::vector<int> FrameLabels(const ModelParams& p, const Matrix& x) {
  if (p.arch() == Arch::kRnnt) return RnntGreedy(p, x).frame_labels;
  return FramewiseArgMax(ForwardFrames(p, x).log_probs);
}

// N-best over a frame posterior matrix using the collapse rule of `arch`.
inline std::vector<Hypothesis> FrameLabelBeamSearch(Arch arch, const Matrix& log_probs,
                                                    int blank, size_t beam) {
  return arch == Arch::kRnnt ? DropBlankBeamSearch(log_probs, blank, beam)
                             : CtcPrefixBeamSearch(log_probs, blank, beam);
}

inline std::vector<int> CollapseFrameLabels(Arch arch, std::span<const int> path,
                                            int blank) {
  return arch == Arch::kRnnt ? DropBlanks(path, blank) : CtcCollapse(path, blank);
}

}  // namespace pate_asr

#endif  // PATE_ASR_SEQMODEL_DECODE_HPP_
