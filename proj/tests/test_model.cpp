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

#include <algorithm>
#include <cmath>

#include "brrr/errors.hpp"
#include "brrr/model.hpp"
#include "test_util.hpp"

using namespace brrr;
using brrr::testing::normal_matrix;
using brrr::testing::random_obs;

namespace {

RrrProblem random_problem(Index ell, Index m, Index p, Engine& rng, double lambda = 3.0,
                          double clamp = 100.0) {
  const Matrix x = normal_matrix(ell, m, rng);
  const Matrix z = x * normal_matrix(m, p, rng) + normal_matrix(ell, p, rng, 0.3);
  ModelConstants k;
  k.lambda = lambda;
  k.clamp = clamp;
  return RrrProblem(x, random_obs(z, 0.7, rng), k);
}

double naive_risk(const RrrProblem& prob, const Matrix& coef) {
  double sum = 0.0;
  for (const auto& o : prob.obs().entries()) {
    double fit = 0.0;
    for (Index u = 0; u < prob.m(); ++u) fit += prob.design()(o.row, u) * coef(u, o.col);
    fit = std::min(prob.clamp(), std::max(-prob.clamp(), fit));
    sum += (o.value - fit) * (o.value - fit);
  }
  return sum / static_cast<double>(prob.n());
}

}  // namespace

TEST_CASE("clamp_projection examples") {
  Matrix a(1, 2);
  a << 0.5, -0.2;
  CHECK(clamp_projection(a, 1.0) == a);
  a << 3, -7;
  Matrix want(1, 2);
  want << 2, -2;
  CHECK(clamp_projection(a, 2.0) == want);
}

TEST_CASE("clamp_projection is the Frobenius-nearest bounded matrix") {
  auto rng = make_engine(11);
  const Matrix a = normal_matrix(4, 3, rng, 1.5);
  const Matrix p = clamp_projection(a, 1.0);
  // Grid search entrywise: the objective separates over entries.
  double best_total = 0.0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) {
      double best = 1e300;
      for (int k = -1000; k <= 1000; ++k) {
        const double b = k / 1000.0;
        best = std::min(best, (a(i, j) - b) * (a(i, j) - b));
      }
      best_total += best;
    }
  CHECK((a - p).squaredNorm() <= best_total + 1e-12);
  CHECK((a - p).squaredNorm() == doctest::Approx(best_total).epsilon(1e-3));
}

TEST_CASE("clamp_projection invariants") {
  auto rng = make_engine(12);
  for (int t = 0; t < 50; ++t) {
    const Matrix a = normal_matrix(5, 4, rng, 3.0);
    const Matrix b = normal_matrix(5, 4, rng, 3.0);
    const double c = 0.5 + t * 0.1;
    const Matrix pa = clamp_projection(a, c);
    CHECK(clamp_projection(pa, c) == pa);
    CHECK(pa.cwiseAbs().maxCoeff() <= c);
    CHECK((pa - clamp_projection(b, c)).norm() <= (a - b).norm() + 1e-12);
  }
}

TEST_CASE("clamp_projection rejects bad input") {
  Matrix a(1, 1);
  a << std::nan("");
  CHECK_THROWS_AS(clamp_projection(a, 1.0), InvalidInput);
  a << 1.0;
  CHECK_THROWS_AS(clamp_projection(a, 0.0), InvalidInput);
}

TEST_CASE("empirical_risk examples") {
  auto rng = make_engine(13);
  const Matrix x = normal_matrix(6, 4, rng);
  const Matrix m_star = normal_matrix(4, 3, rng);
  const Matrix z = x * m_star;
  ModelConstants k;
  k.clamp = z.cwiseAbs().maxCoeff() + 1.0;
  const RrrProblem noiseless(x, random_obs(z, 0.6, rng), k);
  CHECK(empirical_risk(noiseless, m_star) <= 1e-28);

  Matrix x1 = Matrix::Ones(3, 2);
  ModelConstants k1;
  k1.clamp = 10.0;
  const RrrProblem single(x1, ObservationSet({{0, 0, 1.0}}, 3, 2, false), k1);
  CHECK(empirical_risk(single, Matrix::Zero(2, 2)) == 1.0);
}

TEST_CASE("empirical_risk matches a straight loop and ignores observation order") {
  auto rng = make_engine(14);
  for (int t = 0; t < 20; ++t) {
    const RrrProblem prob = random_problem(5, 4, 3, rng, 2.0, 1.5);
    const Matrix coef = normal_matrix(4, 3, rng);
    const double r = empirical_risk(prob, coef);
    CHECK(r >= 0.0);
    CHECK(std::abs(r - naive_risk(prob, coef)) <= 1e-12 * std::max(1.0, r));

    std::vector<Observation> shuffled(prob.obs().entries().begin(), prob.obs().entries().end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const RrrProblem permuted(prob.design(), ObservationSet(shuffled, 5, 3, false),
                              prob.constants());
    CHECK(empirical_risk(permuted, coef) == doctest::Approx(r).epsilon(1e-14));
  }
}

TEST_CASE("data_log_density examples") {
  // One observation with residual 1 and one with 0: risk 0.5.
  ModelConstants k;
  k.lambda = 10.0;
  k.clamp = 10.0;
  const RrrProblem prob(Matrix::Ones(1, 1), ObservationSet({{0, 0, 1.0}, {0, 1, 0.0}}, 1, 2, false), k);
  CHECK(empirical_risk(prob, Matrix::Zero(1, 2)) == 0.5);
  CHECK(data_log_density(prob, Matrix::Zero(1, 2)) == -5.0);
  Matrix exact(1, 2);
  exact << 1.0, 0.0;
  CHECK(data_log_density(prob, exact) == 0.0);

  auto rng = make_engine(15);
  const RrrProblem r = random_problem(7, 3, 4, rng, 4.5);
  const Matrix coef = normal_matrix(3, 4, rng);
  CHECK(data_log_density(r, coef) == doctest::Approx(-4.5 * empirical_risk(r, coef)).epsilon(1e-15));
}

TEST_CASE("data_grad examples") {
  ModelConstants k;
  k.lambda = 3.0;
  k.clamp = 10.0;
  Matrix x(1, 1);
  x << 2.0;
  const RrrProblem scalar(x, ObservationSet({{0, 0, 1.5}}, 1, 1, false), k);
  Matrix coef(1, 1);
  coef << 0.25;
  // (2 lambda / 1) x (y - x M)
  CHECK(data_grad(scalar, coef)(0, 0) == doctest::Approx(2 * 3.0 * 2.0 * (1.5 - 0.5)));

  // Every fitted value on or beyond the clamp: zero gradient.
  coef << 5.0;
  CHECK(data_grad(scalar, coef).norm() == 0.0);
  coef << 7.0;
  CHECK(data_grad(scalar, coef).norm() == 0.0);
  coef << -9.0;
  CHECK(data_grad(scalar, coef).norm() == 0.0);
}

TEST_CASE("data_grad matches central finite differences away from the clamp") {
  auto rng = make_engine(16);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const RrrProblem prob = random_problem(6, 4, 3, rng, 2.5, 2.0);
    const Matrix coef = normal_matrix(4, 3, rng, 0.6);
    const Matrix fit = prob.design() * coef;
    bool near_kink = false;
    for (const auto& o : prob.obs().entries())
      near_kink = near_kink || std::abs(std::abs(fit(o.row, o.col)) - prob.clamp()) < 1e-3;
    if (near_kink) continue;
    const Matrix fd = brrr::testing::finite_diff(
        [&](const Matrix& c) { return data_log_density(prob, c); }, coef, 1e-6);
    CHECK(brrr::testing::rel_err(data_grad(prob, coef), fd) <= 1e-4);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("data_term shares value and gradient with the separate calls") {
  auto rng = make_engine(17);
  const RrrProblem prob = random_problem(8, 5, 4, rng);
  const Matrix coef = normal_matrix(5, 4, rng);
  const DataTerm t = data_term(prob, coef);
  CHECK(t.log_density == doctest::Approx(data_log_density(prob, coef)).epsilon(1e-14));
  CHECK((t.grad - data_grad(prob, coef)).norm() <= 1e-12);
}

TEST_CASE("risk decreases along the gradient for a small step") {
  auto rng = make_engine(18);
  for (int t = 0; t < 20; ++t) {
    const RrrProblem prob = random_problem(6, 3, 4, rng, 1.0, 1e3);
    const Matrix coef = normal_matrix(3, 4, rng);
    const Matrix g = data_grad(prob, coef);
    if (g.norm() == 0.0) continue;
    CHECK(empirical_risk(prob, coef + 1e-6 * g) < empirical_risk(prob, coef));
  }
}

TEST_CASE("weighted_frobenius_sq") {
  CHECK(weighted_frobenius_sq(Matrix::Zero(3, 2), Matrix::Constant(3, 2, 1.0 / 6)) == 0.0);
  CHECK(weighted_frobenius_sq(Matrix::Ones(2, 2), Matrix::Constant(2, 2, 0.25)) == 1.0);

  auto rng = make_engine(19);
  const Matrix a = normal_matrix(5, 3, rng);
  CHECK(weighted_frobenius_sq(a, Matrix::Constant(5, 3, 1.0 / 15)) ==
        doctest::Approx(a.squaredNorm() / 15).epsilon(1e-14));
  Matrix w = normal_matrix(5, 3, rng).cwiseAbs();
  w /= w.sum();
  double loop = 0.0;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 3; ++j) loop += w(i, j) * a(i, j) * a(i, j);
  CHECK(std::abs(weighted_frobenius_sq(a, w) - loop) <= 1e-12);

  Matrix bad = Matrix::Constant(2, 2, 0.25);
  bad(0, 0) = -0.25;
  bad(0, 1) = 0.75;
  CHECK_THROWS_AS(weighted_frobenius_sq(Matrix::Ones(2, 2), bad), InvalidInput);
  CHECK_THROWS_AS(weighted_frobenius_sq(Matrix::Ones(2, 2), Matrix::Constant(2, 2, 0.3)),
                  InvalidInput);
}

TEST_CASE("problem and observation validation") {
  CHECK_THROWS_AS(ObservationSet({}, 2, 2, false), InvalidInput);
  CHECK_THROWS_AS(ObservationSet({{2, 0, 1.0}}, 2, 2, false), InvalidInput);
  CHECK_THROWS_AS(ObservationSet({{0, 0, 1.0}, {0, 0, 2.0}}, 2, 2, false), InvalidInput);
  CHECK_NOTHROW(ObservationSet({{0, 0, 1.0}, {0, 0, 2.0}}, 2, 2, true));
  CHECK_THROWS_AS(ObservationSet({{0, 0, std::nan("")}}, 2, 2, false), InvalidInput);

  const ObservationSet obs({{0, 0, -4.0}, {1, 1, 2.0}}, 2, 2, false);
  CHECK(default_clamp(obs) == 40.0);
  CHECK(obs.counts().sum() == 2);
  ModelConstants k;
  CHECK_THROWS_AS(RrrProblem(Matrix::Ones(3, 2), obs, k), InvalidInput);
  k.tau = 0.0;
  CHECK_THROWS_AS(RrrProblem(Matrix::Ones(2, 2), obs, k), InvalidInput);
  k.tau = 1.0;
  k.clamp = -1.0;
  CHECK_THROWS_AS(RrrProblem(Matrix::Ones(2, 2), obs, k), InvalidInput);
}
