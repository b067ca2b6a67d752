// Copyright 2026 The brrr Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "brrr/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "brrr/errors.hpp"

namespace brrr::csv {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  return out + "\"";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan";
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::string header_line(const std::string& prefix, Index cols) {
  std::string s;
  for (Index j = 0; j < cols; ++j) {
    if (j) s += ',';
    s += prefix + std::to_string(j + 1);
  }
  return s;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (is_missing(s)) return std::numeric_limits<double>::quiet_NaN();
  if (s == "Inf" || s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-Inf" || s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("not a number: '" + s + "'");
  return v;
}

void write_matrix(const fs::path& path, const Matrix& values, const std::string& prefix,
                  const BoolArray* present) {
  std::ofstream out = open_out(path);
  out << header_line(prefix, values.cols()) << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      const bool missing = present ? !(*present)(i, j) : std::isnan(values(i, j));
      out << (missing ? std::string("NA") : format_double(values(i, j)));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_int_matrix(const fs::path& path, const Eigen::MatrixXi& values,
                      const std::string& prefix) {
  std::ofstream out = open_out(path);
  out << header_line(prefix, values.cols()) << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << values(i, j);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Table read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (auto& h : split_line(line)) t.header.push_back(trim(h));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(t.header.size()) + " cells, found " +
                    std::to_string(cells.size()));
    for (auto& c : cells) c = trim(c);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw IoError("missing column '" + name + "'");
}

void write_table(const fs::path& path, const Table& table) {
  std::ofstream out = open_out(path);
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << quote(cells[i]);
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  if (!out) throw IoError("failed writing " + path.string());
}

MatrixFile read_matrix(const fs::path& path) {
  const Table t = read_table(path);
  MatrixFile f;
  f.header = t.header;
  const auto rows = static_cast<Index>(t.rows.size());
  const auto cols = static_cast<Index>(t.header.size());
  f.values.resize(rows, cols);
  f.present.resize(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      const std::string& cell = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      try {
        f.values(i, j) = parse_double(cell);
      } catch (const IoError& e) {
        throw IoError(path.string() + ": row " + std::to_string(i + 1) + ", column " +
                      std::to_string(j + 1) + ": " + e.what());
      }
      f.present(i, j) = !std::isnan(f.values(i, j));
    }
  }
  return f;
}

Eigen::MatrixXi read_int_matrix(const fs::path& path) {
  const MatrixFile f = read_matrix(path);
  if (!f.present.all()) throw IoError(path.string() + " has missing cells");
  Eigen::MatrixXi out(f.values.rows(), f.values.cols());
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) {
      const double v = f.values(i, j);
      if (v != std::floor(v) || v < 0)
        throw IoError(path.string() + ": counts must be non-negative integers");
      out(i, j) = static_cast<int>(v);
    }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace brrr::csv
