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

#ifndef PATE_ASR_CSV_HPP_
#define PATE_ASR_CSV_HPP_

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pate_asr/error.hpp"
#include "pate_asr/matrix.hpp"

namespace pate_asr {

// Shortest decimal form that parses back to the same double.
inline std::string FormatDouble(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw Error(ErrorCode::kFormatError, "to_chars failed");
  return std::string(buf, ptr);
}

inline double ParseDouble(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  Require(ec == std::errc() && ptr == s.data() + s.size(), ErrorCode::kFormatError,
          "bad number '" + std::string(s) + "'");
  return x;
}

// JSON has no infinities; non-finite values are written as "inf", "-inf" or
// "nan" strings.
inline nlohmann::json JsonNumber(double x) {
  if (std::isfinite(x)) return x;
  return FormatDouble(x);
}

inline double JsonToDouble(const nlohmann::json& j) {
  if (j.is_string()) return ParseDouble(j.get<std::string>());
  return j.get<double>();
}

inline nlohmann::json JsonNumbers(const std::vector<double>& xs) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : xs) out.push_back(JsonNumber(x));
  return out;
}

inline std::vector<double> JsonToDoubles(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(JsonToDouble(x));
  return out;
}

inline long long ParseInt(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  long long x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  Require(ec == std::errc() && ptr == s.data() + s.size(), ErrorCode::kFormatError,
          "bad integer '" + std::string(s) + "'");
  return x;
}

inline std::vector<std::string_view> SplitFields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + path);
  out << contents;
  Require(static_cast<bool>(out), ErrorCode::kIoError, "write failed for " + path);
}

inline std::vector<std::string> ReadLines(const std::string& path) {
  std::vector<std::string> lines;
  std::istringstream in(ReadFile(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// One row per line, comma separated, no header.
inline std::string MatrixToCsv(const Matrix& m) {
  std::string out;
  for (size_t r = 0; r < m.rows(); ++r) {
    for (size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += FormatDouble(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline Matrix MatrixFromCsv(const std::string& path) {
  const auto lines = ReadLines(path);
  Require(!lines.empty(), ErrorCode::kFormatError, path + " is empty");
  std::vector<double> data;
  size_t cols = 0;
  for (const auto& line : lines) {
    const auto fields = SplitFields(line, ',');
    if (cols == 0) cols = fields.size();
    Require(fields.size() == cols, ErrorCode::kFormatError,
            "ragged rows in " + path);
    for (auto f : fields) data.push_back(ParseDouble(f));
  }
  return Matrix(lines.size(), cols, std::move(data));
}

}  // namespace pate_asr

#endif  // PATE_ASR_CSV_HPP_
