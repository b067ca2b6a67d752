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

#include "brrr/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "brrr/errors.hpp"

namespace brrr {

namespace {

std::string position(const Observation& o) {
  return "(" + std::to_string(o.row + 1) + ", " + std::to_string(o.col + 1) + ")";
}

void check_shapes(const RrrProblem& prob, const Matrix& coef) {
  if (coef.rows() != prob.m() || coef.cols() != prob.p()) {
    throw InvalidInput("coefficient matrix is " + std::to_string(coef.rows()) +
                       "x" + std::to_string(coef.cols()) + ", expected " +
                       std::to_string(prob.m()) + "x" +
                       std::to_string(prob.p()));
  }
}

}  // namespace

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw InvalidInput(std::string(what) + " has non-finite entries");
}

ObservationSet::ObservationSet(std::vector<Observation> entries, Index rows,
                               Index cols, bool with_replacement)
    : entries_(std::move(entries)),
      rows_(rows),
      cols_(cols),
      with_replacement_(with_replacement) {
  if (rows_ < 1 || cols_ < 1) throw InvalidInput("observation grid must be non-empty");
  if (entries_.empty()) throw InvalidInput("observation set is empty");
  std::set<std::pair<Index, Index>> seen;
  for (const auto& o : entries_) {
    if (o.row < 0 || o.row >= rows_ || o.col < 0 || o.col >= cols_) {
      throw InvalidInput("observation at " + position(o) + " outside the " +
                         std::to_string(rows_) + "x" + std::to_string(cols_) + " grid");
    }
    if (!std::isfinite(o.value)) {
      throw InvalidInput("observation at " + position(o) + " is not finite");
    }
    if (!with_replacement_ && !seen.emplace(o.row, o.col).second) {
      throw InvalidInput("duplicate observation at " + position(o) +
                         " in a set sampled without replacement");
    }
  }
}

double ObservationSet::max_abs_value() const noexcept {
  double best = 0.0;
  for (const auto& o : entries_) best = std::max(best, std::abs(o.value));
  return best;
}

Eigen::MatrixXi ObservationSet::counts() const {
  Eigen::MatrixXi c = Eigen::MatrixXi::Zero(rows_, cols_);
  for (const auto& o : entries_) ++c(o.row, o.col);
  return c;
}

RrrProblem::RrrProblem(Matrix design, ObservationSet obs, ModelConstants constants)
    : design_(std::move(design)), obs_(std::move(obs)), constants_(constants) {
  if (design_.rows() != obs_.rows()) {
    throw InvalidInput("design has " + std::to_string(design_.rows()) +
                       " rows but the response grid has " +
                       std::to_string(obs_.rows()));
  }
  if (design_.cols() < 1) throw InvalidInput("design has no columns");
  require_finite(design_, "design matrix");
  if (!(constants_.lambda >= 0.0) || !std::isfinite(constants_.lambda))
    throw InvalidInput("lambda must be finite and >= 0");
  if (!(constants_.tau > 0.0) || !std::isfinite(constants_.tau))
    throw InvalidInput("tau must be finite and > 0");
  if (!(constants_.clamp > 0.0)) throw InvalidInput("clamp level C must be > 0");
  if (!(constants_.sigma > 0.0) || !(constants_.xi > 0.0))
    throw InvalidInput("sigma and xi must be > 0");
}

RrrProblem RrrProblem::with_lambda(double lambda) const {
  ModelConstants c = constants_;
  c.lambda = lambda;
  return RrrProblem(design_, obs_, c);
}

RrrProblem RrrProblem::with_tau(double tau) const {
  ModelConstants c = constants_;
  c.tau = tau;
  return RrrProblem(design_, obs_, c);
}

double default_clamp(const ObservationSet& obs) {
  const double c = 10.0 * obs.max_abs_value();
  return c > 0.0 ? c : 1.0;
}

Matrix clamp_projection(const Matrix& a, double c) {
  if (!(c > 0.0)) throw InvalidInput("clamp level must be > 0");
  require_finite(a, "matrix to project");
  return a.cwiseMax(-c).cwiseMin(c);
}

double empirical_risk(const RrrProblem& prob, const Matrix& coef) {
  check_shapes(prob, coef);
  const Matrix fitted = prob.design() * coef;
  const double c = prob.clamp();
  double sum = 0.0;
  for (const auto& o : prob.obs().entries()) {
    const double r = o.value - std::clamp(fitted(o.row, o.col), -c, c);
    sum += r * r;
  }
  return sum / static_cast<double>(prob.n());
}

double data_log_density(const RrrProblem& prob, const Matrix& coef) {
  return -prob.lambda() * empirical_risk(prob, coef);
}

DataTerm data_term(const RrrProblem& prob, const Matrix& coef) {
  check_shapes(prob, coef);
  const Matrix fitted = prob.design() * coef;
  const double c = prob.clamp();
  // Residuals scattered onto the grid; d(XM)_{ab}/dM_{uv} = X_{au} [v == b],
  // so the data gradient is X^T R.
  Matrix resid = Matrix::Zero(prob.ell(), prob.p());
  double sum = 0.0;
  for (const auto& o : prob.obs().entries()) {
    const double f = fitted(o.row, o.col);
    const double r = o.value - std::clamp(f, -c, c);
    sum += r * r;
    if (std::abs(f) < c) resid(o.row, o.col) += r;
  }
  const double n = static_cast<double>(prob.n());
  DataTerm out{-prob.lambda() * sum / n, Matrix()};
  out.grad.noalias() = (2.0 * prob.lambda() / n) * (prob.design().transpose() * resid);
  return out;
}

Matrix data_grad(const RrrProblem& prob, const Matrix& coef) {
  return data_term(prob, coef).grad;
}

double weighted_frobenius_sq(const Matrix& a, const Matrix& weights) {
  if (a.rows() != weights.rows() || a.cols() != weights.cols())
    throw InvalidInput("weight table shape does not match the matrix");
  if ((weights.array() < 0.0).any()) throw InvalidInput("negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw InvalidInput("weights do not sum to 1");
  return (weights.array() * a.array().square()).sum();
}

}  // namespace brrr
