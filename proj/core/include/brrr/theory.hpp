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

// Constants and right-hand side of the oracle inequality satisfied by the
// truncated posterior mean at tau = tau*, lambda = lambda*:
//
//   ||XM_hat - XM*||^2_{F,Pi} <= (1+delta) ||X Mbar - X M*||^2_{F,Pi}
//     + C1 (1+delta)^2 / delta * [ 4 r (m+p+2) log(1 + ||X||_F ||Mbar||_F / sqrt(C1)
//                                   * sqrt(n m p / (r (m+p))))
//                                 + (m+p) + 2 log(2/eps) ] / n
//
// with C1 = 8 (sigma^2 + C^2), C2 = 64 C max(xi, C) and probability >= 1 - eps.

#include <cstdint>

namespace brrr {

struct BoundInputs {
  double sigma = 1.0;
  double xi = 1.0;
  double clamp = 1.0;      // C
  double n = 1.0;          // sample size (real so that huge n can be probed)
  std::int64_t m = 1;
  std::int64_t p = 1;
  double x_frob = 1.0;     // ||X||_F
  double mbar_frob = 0.0;  // ||Mbar||_F
  std::int64_t rank = 0;   // rank budget r of Mbar
  double delta = 1.0;
  double epsilon = 0.05;

  void validate() const;
};

struct TheoryConstants {
  double c1;
  double c2;
  double tau_star;
  double lambda_star;
};

TheoryConstants constants(const BoundInputs& in);

// approx_err is ||X Mbar - X M*||^2_{F,Pi}; zero for Mbar = M*.
double oracle_bound_rhs(const BoundInputs& in, const TheoryConstants& k, double approx_err);

}  // namespace brrr
