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

#include <doctest.h>

#include <cmath>

#include "brrr/errors.hpp"
#include "brrr/theory.hpp"

using namespace brrr;

namespace {

BoundInputs setting_one() {
  BoundInputs in;
  in.sigma = 1.0;
  in.xi = 1.0;
  in.clamp = 50.0;
  in.n = 640;
  in.m = 12;
  in.p = 8;
  in.x_frob = 34.6;
  in.mbar_frob = 4.2;
  in.rank = 2;
  in.delta = 1.0;
  in.epsilon = 0.05;
  return in;
}

// R_{delta,m,p,n,r*,eps} written out term by term.
double corollary(double sigma, double c, double n, double m, double p, double xf, double mf,
                 double r, double delta, double eps) {
  const double c1 = 8.0 * (sigma * sigma + c * c);
  const double lead = c1 * (1.0 + delta) * (1.0 + delta) / delta;
  const double inner = 1.0 + (xf * mf / std::sqrt(c1)) * std::sqrt(n * m * p / (r * (m + p)));
  const double brace = 4.0 * r * (m + p + 2.0) * std::log(inner) + (m + p) + 2.0 * std::log(2.0 / eps);
  return lead * brace / n;
}

}  // namespace

TEST_CASE("constants examples") {
  BoundInputs in = setting_one();
  in.clamp = 1.0;
  CHECK(constants(in).c1 == 16.0);
  in.clamp = 2.0;
  CHECK(constants(in).c2 == 256.0);

  in.clamp = 1.0;
  in.xi = 4.0;
  in.n = 1000;
  in.delta = 1.0;
  const TheoryConstants k = constants(in);
  CHECK(k.c1 == 16.0);
  CHECK(k.c2 == 256.0);
  CHECK(k.lambda_star == doctest::Approx(1000.0 / 512.0).epsilon(1e-15));
  CHECK(k.tau_star * k.tau_star ==
        doctest::Approx(16.0 * 20.0 / (1000.0 * 96.0 * in.x_frob * in.x_frob)).epsilon(1e-14));

  in.x_frob = 0.0;
  CHECK_THROWS_AS(constants(in), InvalidInput);
}

TEST_CASE("bound against a straight transcription") {
  const BoundInputs in = setting_one();
  const double got = oracle_bound_rhs(in, constants(in), 0.0);
  const double want = corollary(1.0, 50.0, 640, 12, 8, 34.6, 4.2, 2, 1.0, 0.05);
  CHECK(std::abs(got - want) <= 1e-12 * want);
  CHECK(got > 0.0);
  CHECK(std::isfinite(got));
}

TEST_CASE("rank zero uses the 0 log convention") {
  BoundInputs in = setting_one();
  in.rank = 0;
  in.mbar_frob = 0.0;
  const TheoryConstants k = constants(in);
  const double a = 0.37;
  const double want = 2.0 * a + k.c1 * 4.0 / 1.0 * (20.0 + 2.0 * std::log(2.0 / 0.05)) / in.n;
  CHECK(oracle_bound_rhs(in, k, a) == doctest::Approx(want).epsilon(1e-14));

  in.mbar_frob = 1.0;
  CHECK_THROWS_AS(oracle_bound_rhs(in, constants(in), 0.0), InvalidInput);
}

TEST_CASE("huge n leaves only the approximation term") {
  BoundInputs in = setting_one();
  in.n = 1e12;
  in.clamp = 1.0;
  CHECK(oracle_bound_rhs(in, constants(in), 0.5) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("bound monotonicity") {
  const BoundInputs base = setting_one();
  double prev = 1e300;
  for (double n : {100.0, 1e3, 1e4, 1e6, 1e9}) {
    BoundInputs in = base;
    in.n = n;
    const double b = oracle_bound_rhs(in, constants(in), 0.0);
    CHECK(b <= prev);
    prev = b;
  }
  prev = 0.0;
  for (std::int64_t r = 1; r <= 8; ++r) {
    BoundInputs in = base;
    in.rank = r;
    const double b = oracle_bound_rhs(in, constants(in), 0.0);
    CHECK(b >= prev);
    prev = b;
  }
  prev = 0.0;
  for (double eps : {0.5, 0.1, 0.01, 1e-6}) {
    BoundInputs in = base;
    in.epsilon = eps;
    const double b = oracle_bound_rhs(in, constants(in), 0.0);
    CHECK(b >= prev);
    prev = b;
  }
  const double at_one = oracle_bound_rhs(base, constants(base), 0.1);
  double best = 1e300;
  for (int i = 1; i <= 400; ++i) {
    BoundInputs in = base;
    in.delta = i / 100.0;
    best = std::min(best, oracle_bound_rhs(in, constants(in), 0.1));
  }
  CHECK(best <= at_one);
}

TEST_CASE("bound input validation") {
  BoundInputs in = setting_one();
  in.epsilon = 1.0;
  CHECK_THROWS_AS(in.validate(), InvalidInput);
  in = setting_one();
  in.rank = 9;
  CHECK_THROWS_AS(in.validate(), InvalidInput);
  in = setting_one();
  in.delta = 0.0;
  CHECK_THROWS_AS(in.validate(), InvalidInput);
  in = setting_one();
  in.sigma = -1.0;
  CHECK_THROWS_AS(in.validate(), InvalidInput);
}
