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

#include "brrr/theory.hpp"

#include <algorithm>
#include <cmath>

#include "brrr/errors.hpp"

namespace brrr {

void BoundInputs::validate() const {
  if (!(sigma > 0.0 && xi > 0.0 && clamp > 0.0)) throw InvalidInput("sigma, xi and C must be > 0");
  if (!(n >= 1.0) || m < 1 || p < 1) throw InvalidInput("n, m and p must be positive");
  if (!(x_frob >= 0.0) || !(mbar_frob >= 0.0)) throw InvalidInput("norms must be >= 0");
  if (rank < 0 || rank > std::min(m, p))
    throw InvalidInput("rank budget must lie in [0, min(m, p)]");
  if (!(delta > 0.0)) throw InvalidInput("delta must be > 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
  if (rank == 0 && mbar_frob > 0.0)
    throw InvalidInput("a rank-0 reference matrix must be zero");
}

TheoryConstants constants(const BoundInputs& in) {
  in.validate();
  if (in.x_frob == 0.0) throw InvalidInput("tau* is undefined for a zero design");
  const double c1 = 8.0 * (in.sigma * in.sigma + in.clamp * in.clamp);
  const double c2 = 64.0 * in.clamp * std::max(in.xi, in.clamp);
  const double mp = static_cast<double>(in.m * in.p);
  const double mpp = static_cast<double>(in.m + in.p);
  const double tau_star = std::sqrt(c1 * mpp / (in.n * mp * in.x_frob * in.x_frob));
  const double lambda_star =
      in.n * std::min(1.0 / (2.0 * c2), in.delta / (c1 * (1.0 + in.delta)));
  return {c1, c2, tau_star, lambda_star};
}

double oracle_bound_rhs(const BoundInputs& in, const TheoryConstants& k, double approx_err) {
  in.validate();
  if (!(approx_err >= 0.0)) throw InvalidInput("approximation error must be >= 0");
  const double m = static_cast<double>(in.m), p = static_cast<double>(in.p);
  const double r = static_cast<double>(in.rank);

  double rank_term = 0.0;  // 0 log(1 + 0/0) := 0
  if (in.rank > 0) {
    const double ratio = in.x_frob * in.mbar_frob / std::sqrt(k.c1) *
                         std::sqrt(in.n * m * p / (r * (m + p)));
    rank_term = 4.0 * r * (m + p + 2.0) * std::log1p(ratio);
  }
  const double complexity = rank_term + (m + p) + 2.0 * std::log(2.0 / in.epsilon);
  const double d = in.delta;
  return (1.0 + d) * approx_err + k.c1 * (1.0 + d) * (1.0 + d) / d * complexity / in.n;
}

}  // namespace brrr
