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

// Reduced-rank regression with an incompletely observed response.
//
// The response Z (ell x p) is observed only at n positions I_i = (a_i, b_i);
// the fitted surface is X M with X the ell x m design and M the m x p
// coefficient matrix. All indices are 0-based in this API; file formats
// and error messages use 1-based positions.

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace brrr {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct Observation {
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

// The observed (row, col, value) triples of the response.
// Invariants: n >= 1; every position lies in the ell x p grid; repeated
// positions only when sampled with replacement.
class ObservationSet {
 public:
  ObservationSet(std::vector<Observation> entries, Index rows, Index cols,
                 bool with_replacement);

  std::span<const Observation> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  bool with_replacement() const noexcept { return with_replacement_; }

  // max |Y_i|
  double max_abs_value() const noexcept;
  // rows x cols matrix of observation counts per cell.
  Eigen::MatrixXi counts() const;

 private:
  std::vector<Observation> entries_;
  Index rows_;
  Index cols_;
  bool with_replacement_;
};

struct ModelConstants {
  double lambda = 1.0;  // inverse temperature, >= 0 (0 disables the data term)
  double tau = 1.0;     // prior scale
  double clamp = 1.0;   // truncation level C
  double sigma = 1.0;   // noise moment constants; read only by the bound
  double xi = 1.0;
};

// Design matrix, observations and model constants.
class RrrProblem {
 public:
  RrrProblem(Matrix design, ObservationSet obs, ModelConstants constants);

  const Matrix& design() const noexcept { return design_; }
  const ObservationSet& obs() const noexcept { return obs_; }
  const ModelConstants& constants() const noexcept { return constants_; }

  Index ell() const noexcept { return design_.rows(); }
  Index m() const noexcept { return design_.cols(); }
  Index p() const noexcept { return obs_.cols(); }
  std::size_t n() const noexcept { return obs_.size(); }
  double lambda() const noexcept { return constants_.lambda; }
  double tau() const noexcept { return constants_.tau; }
  double clamp() const noexcept { return constants_.clamp; }

  RrrProblem with_lambda(double lambda) const;
  RrrProblem with_tau(double tau) const;

 private:
  Matrix design_;
  ObservationSet obs_;
  ModelConstants constants_;
};

// Default truncation level: ten times the largest observed magnitude.
double default_clamp(const ObservationSet& obs);

// Entrywise clamp to [-C, C]; the Frobenius-nearest matrix of sup-norm <= C.
Matrix clamp_projection(const Matrix& a, double c);

// (1/n) sum_i (Y_i - (Pi_C(XM))_{I_i})^2.
double empirical_risk(const RrrProblem& prob, const Matrix& coef);

// -lambda * empirical_risk.
double data_log_density(const RrrProblem& prob, const Matrix& coef);

// Gradient of data_log_density in M. Observations whose fitted value sits
// on or outside the clamp boundary contribute nothing.
Matrix data_grad(const RrrProblem& prob, const Matrix& coef);

// Value and gradient of the data term sharing one X*M product.
struct DataTerm {
  double log_density;
  Matrix grad;
};
DataTerm data_term(const RrrProblem& prob, const Matrix& coef);

// sum_ij P_ij A_ij^2 for a probability table P over entries.
double weighted_frobenius_sq(const Matrix& a, const Matrix& weights);

// Throws InvalidInput unless every entry is finite.
void require_finite(const Matrix& a, const char* what);

}  // namespace brrr
