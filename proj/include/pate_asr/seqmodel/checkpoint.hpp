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

#ifndef PATE_ASR_SEQMODEL_CHECKPOINT_HPP_
#define PATE_ASR_SEQMODEL_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "pate_asr/csv.hpp"
#include "pate_asr/error.hpp"
#include "pate_asr/seqmodel/params.hpp"

namespace pate_asr {

// Checkpoint byte layout, all integers little-endian:
//   0  char[8]  magic "PATEASR\0"
//   8  u32      format version (1)
//  12  u32      arch tag (0 frame, 1 ctc, 2 rnnt)
//  16  u32      input dim F
//  20  u32      hidden dim H
//  24  u32      vocab V (outputs are V + 1)
//  28  u32      reserved, 0
//  32  u64      seed the parameters were produced with
//  40  u64      parameter count N
//  48  f64[N]   IEEE-754 binary64 values in layout order
inline constexpr char kCheckpointMagic[8] = {'P', 'A', 'T', 'E', 'A', 'S', 'R', '\0'};
inline constexpr uint32_t kCheckpointVersion = 1;

namespace internal {

template <typename T>
void PutLe(std::string& out, T value) {
  uint64_t bits;
  if constexpr (sizeof(T) == 8) {
    bits = std::bit_cast<uint64_t>(value);
  } else {
    bits = static_cast<uint64_t>(value);
  }
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline uint64_t GetLe(const std::string& in, size_t offset, size_t width) {
  Require(offset + width <= in.size(), ErrorCode::kFormatError, "truncated checkpoint");
  uint64_t v = 0;
  for (size_t i = 0; i < width; ++i) {
    v |= static_cast<uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

}  // namespace internal

inline std::string SerializeCheckpoint(const ModelParams& p, uint64_t seed) {
  std::string out(kCheckpointMagic, kCheckpointMagic + 8);
  internal::PutLe<uint32_t>(out, kCheckpointVersion);
  internal::PutLe<uint32_t>(out, static_cast<uint32_t>(p.arch()));
  internal::PutLe<uint32_t>(out, static_cast<uint32_t>(p.dims().input));
  internal::PutLe<uint32_t>(out, static_cast<uint32_t>(p.dims().hidden));
  internal::PutLe<uint32_t>(out, static_cast<uint32_t>(p.dims().vocab));
  internal::PutLe<uint32_t>(out, 0);
  internal::PutLe<uint64_t>(out, seed);
  internal::PutLe<uint64_t>(out, p.size());
  for (double v : p.values()) internal::PutLe<double>(out, v);
  return out;
}

struct Checkpoint {
  ModelParams params;
  uint64_t seed = 0;
};

inline Checkpoint DeserializeCheckpoint(const std::string& bytes) {
  Require(bytes.size() >= 48 && std::memcmp(bytes.data(), kCheckpointMagic, 8) == 0,
          ErrorCode::kFormatError, "not a checkpoint");
  Require(internal::GetLe(bytes, 8, 4) == kCheckpointVersion, ErrorCode::kFormatError,
          "unsupported checkpoint version");
  const auto arch_tag = internal::GetLe(bytes, 12, 4);
  Require(arch_tag <= 2, ErrorCode::kFormatError, "unknown arch tag");
  ModelDims dims;
  dims.input = static_cast<int>(internal::GetLe(bytes, 16, 4));
  dims.hidden = static_cast<int>(internal::GetLe(bytes, 20, 4));
  dims.vocab = static_cast<int>(internal::GetLe(bytes, 24, 4));
  Checkpoint ck;
  ck.seed = internal::GetLe(bytes, 32, 8);
  const uint64_t n = internal::GetLe(bytes, 40, 8);
  Require(bytes.size() == 48 + 8 * n, ErrorCode::kFormatError, "checkpoint size mismatch");
  std::vector<double> values(n);
  for (uint64_t i = 0; i < n; ++i) {
    values[i] = std::bit_cast<double>(internal::GetLe(bytes, 48 + 8 * i, 8));
  }
  ck.params = ModelParams(static_cast<Arch>(arch_tag), dims, std::move(values));
  return ck;
}

inline void SaveCheckpoint(const std::string& path, const ModelParams& p, uint64_t seed) {
  WriteFile(path, SerializeCheckpoint(p, seed));
}

inline Checkpoint LoadCheckpoint(const std::string& path) {
  return DeserializeCheckpoint(ReadFile(path));
}

// FNV-1a 64 over arbitrary bytes; used for checkpoint and config digests.
inline uint64_t Fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string HexDigest(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string ParamsChecksum(const ModelParams& p) {
  return HexDigest(Fnv1a64(SerializeCheckpoint(p, 0)));
}

}  // namespace pate_asr

#endif  // PATE_ASR_SEQMODEL_CHECKPOINT_HPP_
