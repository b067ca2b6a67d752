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

#include "brrr/prior.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

#include "brrr/errors.hpp"

namespace brrr {

namespace {

void check(const PriorConfig& cfg, const Matrix& coef) {
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) throw InvalidInput("prior tau must be > 0");
  if (coef.rows() != cfg.m || coef.cols() != cfg.p)
    throw InvalidInput("coefficient matrix does not match the prior dimensions");
  require_finite(coef, "coefficient matrix");
}

Eigen::LLT<Matrix> factor(const PriorConfig& cfg, const Matrix& coef) {
  Matrix gram = coef * coef.transpose();
  gram.diagonal().array() += cfg.tau * cfg.tau;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw NumericalError("Cholesky factorization of tau^2 I + M M^T failed");
  return llt;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

PriorConfig::PriorConfig(double tau_, Index m_, Index p_) : tau(tau_), m(m_), p(p_) {
  if (!(tau > 0.0)) throw InvalidInput("prior tau must be > 0");
  if (m < 1 || p < 1) throw InvalidInput("prior dimensions must be positive");
}

PriorConfig prior_for(const RrrProblem& prob) {
  return PriorConfig(prob.tau(), prob.m(), prob.p());
}

double log_prior_unnorm(const PriorConfig& cfg, const Matrix& coef) {
  check(cfg, coef);
  return -cfg.exponent() * log_det(factor(cfg, coef));
}

Matrix grad_log_prior(const PriorConfig& cfg, const Matrix& coef) {
  check(cfg, coef);
  return -2.0 * cfg.exponent() * factor(cfg, coef).solve(coef);
}

Matrix grad_log_prior_ridge(const PriorConfig& cfg, const Matrix& coef, double tol,
                            int max_iter) {
  check(cfg, coef);
  if (!(tol > 0.0)) throw InvalidInput("ridge tolerance must be > 0");
  const Index m = coef.rows();
  if (max_iter <= 0) max_iter = static_cast<int>(10 * m + 50);

  // Stationarity of the ridge objective: (M M^T + tau^2 I) B = M. Block CG,
  // one independent recursion per column, products through M and M^T only.
  const double tau2 = cfg.tau * cfg.tau;
  auto apply = [&](const Matrix& v) -> Matrix {
    Matrix out = coef * (coef.transpose() * v);
    out += tau2 * v;
    return out;
  };

  const double rhs_norm = coef.norm();
  Matrix b = Matrix::Zero(m, coef.cols());
  if (rhs_norm == 0.0) return b;

  Matrix r = coef;
  Matrix d = r;
  Eigen::VectorXd rr = r.colwise().squaredNorm().transpose();
  double residual = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const Matrix ad = apply(d);
    for (Index j = 0; j < coef.cols(); ++j) {
      if (rr(j) == 0.0) continue;
      const double alpha = rr(j) / d.col(j).dot(ad.col(j));
      b.col(j) += alpha * d.col(j);
      r.col(j) -= alpha * ad.col(j);
      const double rr_new = r.col(j).squaredNorm();
      d.col(j) = r.col(j) + (rr_new / rr(j)) * d.col(j);
      rr(j) = rr_new;
    }
    residual = std::sqrt(rr.sum()) / rhs_norm;
    if (residual <= tol) return -2.0 * cfg.exponent() * b;
  }
  throw ConvergenceError("ridge prior-gradient solve stopped after " +
                             std::to_string(max_iter) +
                             " iterations at relative residual " +
                             std::to_string(residual),
                         residual);
}

PriorTerm prior_term(const PriorConfig& cfg, const Matrix& coef) {
  check(cfg, coef);
  if (cfg.uses_ridge()) {
    // Log-determinant still needs a factorization; only the gradient is
    // matrix-free here.
    return {log_prior_unnorm(cfg, coef), grad_log_prior_ridge(cfg, coef, cfg.ridge_tol)};
  }
  const auto llt = factor(cfg, coef);
  return {-cfg.exponent() * log_det(llt), -2.0 * cfg.exponent() * llt.solve(coef)};
}

}  // namespace brrr
