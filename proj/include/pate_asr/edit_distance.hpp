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

#ifndef PATE_ASR_EDIT_DISTANCE_HPP_
#define PATE_ASR_EDIT_DISTANCE_HPP_

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "pate_asr/error.hpp"

namespace pate_asr {

struct EditCounts {
  size_t substitutions = 0;
  size_t insertions = 0;
  size_t deletions = 0;

  size_t total() const { return substitutions + insertions + deletions; }
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

// Unit-cost Levenshtein alignment. On equal cost the backtrace prefers
// match/substitution, then deletion, then insertion.
inline EditCounts EditDistance(std::span<const int> ref, std::span<const int> hyp) {
  const size_t n = ref.size(), m = hyp.size();
  std::vector<size_t> cost((n + 1) * (m + 1));
  auto at = [&](size_t i, size_t j) -> size_t& { return cost[i * (m + 1) + j]; };
  for (size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      const size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  EditCounts counts;
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++counts.substitutions;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

inline double TokenErrorRate(std::span<const int> ref, std::span<const int> hyp) {
  Require(!ref.empty(), ErrorCode::kEmptyReference, "empty reference");
  return static_cast<double>(EditDistance(ref, hyp).total()) /
         static_cast<double>(ref.size());
}

// Accumulates errors and reference lengths over a test set.
class TerAccumulator {
 public:
  void Add(std::span<const int> ref, std::span<const int> hyp) {
    errors_ += EditDistance(ref, hyp).total();
    ref_tokens_ += ref.size();
  }
  double Rate() const {
    Require(ref_tokens_ > 0, ErrorCode::kEmptyReference, "no reference tokens");
    return static_cast<double>(errors_) / static_cast<double>(ref_tokens_);
  }
  size_t errors() const { return errors_; }
  size_t ref_tokens() const { return ref_tokens_; }

 private:
  size_t errors_ = 0;
  size_t ref_tokens_ = 0;
};

}  // namespace pate_asr

#endif  // PATE_ASR_EDIT_DISTANCE_HPP_
