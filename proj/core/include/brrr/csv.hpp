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

#pragma once

// Comma-separated matrix files: one header row, row-major data, no index
// column, "NA" for missing cells. Doubles are written in shortest
// round-trip form, so write -> read reproduces every bit.

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

#include "brrr/model.hpp"

namespace brrr::csv {

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

std::string format_double(double v);
double parse_double(const std::string& s);

// Missing cells (NaN in `values`, or false in `present` when given) are
// written as NA. Header cells are prefix1, prefix2, ...
void write_matrix(const std::filesystem::path& path, const Matrix& values,
                  const std::string& prefix = "V", const BoolArray* present = nullptr);
void write_int_matrix(const std::filesystem::path& path, const Eigen::MatrixXi& values,
                      const std::string& prefix = "V");

struct MatrixFile {
  std::vector<std::string> header;
  Matrix values;      // NaN at missing cells
  BoolArray present;  // false at NA or empty cells
};

MatrixFile read_matrix(const std::filesystem::path& path);
Eigen::MatrixXi read_int_matrix(const std::filesystem::path& path);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position by name; throws IoError if absent.
  std::size_t column(const std::string& name) const;
};

Table read_table(const std::filesystem::path& path);
void write_table(const std::filesystem::path& path, const Table& table);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace brrr::csv
