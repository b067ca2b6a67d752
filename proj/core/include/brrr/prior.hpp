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

// Spectral scaled Student prior on m x p coefficient matrices:
//   pi(M) ∝ det(tau^2 I_m + M M^T)^{-(p+m+2)/2}
//        = prod_j (tau^2 + s_j(M)^2)^{-(p+m+2)/2}.
// Only the unnormalized log-density and its gradient are provided.

#include <Eigen/Core>

#include "brrr/model.hpp"

namespace brrr {

enum class PriorSolver {
  kAuto,   // exact Cholesky solve for m <= kExactSolveMaxDim, ridge otherwise
  kExact,
  kRidge,  // matrix-free conjugate gradients on the ridge normal equations
};

struct PriorConfig {
  static constexpr Index kExactSolveMaxDim = 512;

  double tau = 1.0;
  Index m = 1;
  Index p = 1;
  PriorSolver solver = PriorSolver::kAuto;
  double ridge_tol = 1e-8;

  PriorConfig() = default;
  PriorConfig(double tau, Index m, Index p);

  // (p + m + 2) / 2
  double exponent() const noexcept { return 0.5 * static_cast<double>(p + m + 2); }
  bool uses_ridge() const noexcept {
    return solver == PriorSolver::kRidge ||
           (solver == PriorSolver::kAuto && m > kExactSolveMaxDim);
  }
};

PriorConfig prior_for(const RrrProblem& prob);

// -(p+m+2)/2 * log det(tau^2 I_m + M M^T), via Cholesky.
double log_prior_unnorm(const PriorConfig& cfg, const Matrix& coef);

// -(p+m+2) (tau^2 I_m + M M^T)^{-1} M, via a Cholesky solve.
Matrix grad_log_prior(const PriorConfig& cfg, const Matrix& coef);

// Same gradient with B = (tau^2 I + M M^T)^{-1} M taken as the minimizer of
// ||I_p - M^T B||_F^2 + tau^2 ||B||_F^2, solved by conjugate gradients on
// its normal equations using only products with M and M^T. Stops when the
// relative residual of the normal equations drops to `tol`; throws
// ConvergenceError if `max_iter` sweeps are not enough (0 means 10 m + 50).
Matrix grad_log_prior_ridge(const PriorConfig& cfg, const Matrix& coef, double tol,
                            int max_iter = 0);

// Value and gradient sharing one factorization; dispatches on cfg.solver.
struct PriorTerm {
  double log_density;
  Matrix grad;
};
PriorTerm prior_term(const PriorConfig& cfg, const Matrix& coef);

}  // namespace brrr
