/*
 * Copyright 2026 The plfm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Minimal numeric CSV tables with a fixed header.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "plfm/errors.hpp"

namespace plfm::apps {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  const std::vector<double>& column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return columns[i];
    throw ConfigError("csv: no column '" + name + "'");
  }
};

// Shortest round-trip representation, so rewritten files are byte-identical.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) throw NumericError("csv: refusing to write a non-finite value");
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline std::string join_header(const std::vector<std::string>& h) {
  std::string out;
  for (size_t i = 0; i < h.size(); ++i) out += (i ? "," : "") + h[i];
  return out;
}

inline void write_csv(const std::string& path, const Table& t) {
  for (const auto& c : t.columns)
    if (c.size() != t.rows()) throw InvalidParameter("csv: ragged columns");
  if (t.columns.size() != t.header.size()) throw InvalidParameter("csv: header and column count differ");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("csv: cannot open '" + path + "' for writing");
  f << join_header(t.header) << '\n';
  for (size_t r = 0; r < t.rows(); ++r) {
    for (size_t c = 0; c < t.columns.size(); ++c) f << (c ? "," : "") << format_number(t.columns[c][r]);
    f << '\n';
  }
  if (!f) throw ConfigError("csv: write failed for '" + path + "'");
}

// Reads a numeric table and checks that its header matches exactly.
inline Table read_csv(const std::string& path, const std::vector<std::string>& expected) {
  std::ifstream f(path);
  if (!f) throw ConfigError("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw ConfigError("csv: '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != join_header(expected))
    throw ConfigError("csv: '" + path + "' has header '" + line + "', expected '" + join_header(expected) + "'");
  Table t;
  t.header = expected;
  t.columns.resize(expected.size());
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= expected.size()) throw ConfigError("csv: too many fields on line " + std::to_string(lineno));
      double v = 0.0;
      auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (r.ec != std::errc() || r.ptr != cell.data() + cell.size())
        throw ConfigError("csv: bad number '" + cell + "' on line " + std::to_string(lineno));
      t.columns[c++].push_back(v);
    }
    if (c != expected.size()) throw ConfigError("csv: too few fields on line " + std::to_string(lineno));
  }
  return t;
}

}  // namespace plfm::apps
