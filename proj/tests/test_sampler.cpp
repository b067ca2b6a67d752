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
#include <numeric>

#include "brrr/errors.hpp"
#include "brrr/sampler.hpp"
#include "brrr/simgen.hpp"
#include "test_util.hpp"

using namespace brrr;
using brrr::testing::normal_matrix;
using brrr::testing::random_obs;

namespace {

// 1 x 1 x 1 problem: density in M is exp(-lambda (y - x M)^2) (1 + M^2/tau^2)^-2 up to
// a constant, with the clamp at C.
RrrProblem scalar_problem(double x, double y, double lambda, double tau, double clamp) {
  ModelConstants k;
  k.lambda = lambda;
  k.tau = tau;
  k.clamp = clamp;
  Matrix design(1, 1);
  design << x;
  return RrrProblem(design, ObservationSet({{0, 0, y}}, 1, 1, false), k);
}

double scalar_log_density(double mval, double x, double y, double lambda, double tau, double c) {
  const double fit = std::min(c, std::max(-c, x * mval));
  return -lambda * (y - fit) * (y - fit) - 2.0 * std::log(tau * tau + mval * mval);
}

RrrProblem small_problem(Engine& rng, double lambda = 20.0, double clamp = 50.0) {
  const Matrix x = normal_matrix(10, 3, rng);
  const Matrix z = x * normal_matrix(3, 2, rng) + normal_matrix(10, 2, rng, 0.5);
  ModelConstants k;
  k.lambda = lambda;
  k.tau = 1.0;
  k.clamp = clamp;
  return RrrProblem(x, random_obs(z, 0.8, rng), k);
}

}  // namespace

TEST_CASE("lmc_step follows the recursion") {
  auto rng = make_engine(31);
  const RrrProblem prob = small_problem(rng);
  const Posterior target(prob, prior_for(prob));
  const ChainState s0 = initial_state(target, normal_matrix(3, 2, rng));
  const Matrix w = normal_matrix(3, 2, rng);
  const double h = 1e-3;
  const ChainState s1 = lmc_step(target, s0, h, w);
  const Matrix want =
      s0.coef + h * grad_log_posterior(prob, prior_for(prob), s0.coef) + std::sqrt(2 * h) * w;
  CHECK((s1.coef - want).norm() <= 1e-12);
  CHECK(s1.iteration == 1);
  CHECK(s1.log_density == doctest::Approx(log_posterior(prob, prior_for(prob), want)));
}

TEST_CASE("gradient of the posterior matches finite differences") {
  auto rng = make_engine(32);
  const RrrProblem prob = small_problem(rng);
  const PriorConfig prior = prior_for(prob);
  const Matrix coef = normal_matrix(3, 2, rng);
  const Matrix fd = brrr::testing::finite_diff(
      [&](const Matrix& c) { return log_posterior(prob, prior, c); }, coef, 1e-6);
  CHECK(brrr::testing::rel_err(grad_log_posterior(prob, prior, coef), fd) <= 1e-4);
  const auto eval = Posterior(prob, prior).evaluate(coef);
  CHECK(eval.log_density == doctest::Approx(log_posterior(prob, prior, coef)));
}

TEST_CASE("MALA acceptance ratio is exactly one for a null move") {
  auto rng = make_engine(33);
  const RrrProblem prob = small_problem(rng);
  const Posterior target(prob, prior_for(prob));
  const ChainState s = initial_state(target, normal_matrix(3, 2, rng));
  CHECK(mala_log_accept_ratio(s, s, 0.01) == 0.0);
}

TEST_CASE("MALA on a near-standard-normal scalar target accepts almost everything at small h") {
  // lambda (y - M)^2 with lambda = 1/2 and a flat prior (tau huge).
  const RrrProblem prob = scalar_problem(1.0, 0.0, 0.5, 1e4, 1e6);
  const Posterior target(prob, prior_for(prob));
  auto rng = make_engine(34);
  ChainState s = initial_state(target, Matrix::Zero(1, 1));
  for (int k = 0; k < 100000; ++k) s = mala_step(target, s, 1e-3, rng);
  CHECK(static_cast<double>(s.accepted) / 1e5 >= 0.95);
}

TEST_CASE("MALA stationary frequencies match the target on three cells") {
  const double x = 1.0, y = 0.8, lambda = 1.5, tau = 0.5, c = 100.0;
  const RrrProblem prob = scalar_problem(x, y, lambda, tau, c);
  const Posterior target(prob, prior_for(prob));

  // Target masses of (-inf, 0), [0, 0.8), [0.8, inf) by quadrature.
  const double lo = -30.0, hi = 30.0;
  const int grid = 600000;
  const double dx = (hi - lo) / grid;
  double mass[3] = {0, 0, 0};
  for (int i = 0; i < grid; ++i) {
    const double v = lo + (i + 0.5) * dx;
    mass[v < 0.0 ? 0 : (v < 0.8 ? 1 : 2)] += std::exp(scalar_log_density(v, x, y, lambda, tau, c));
  }
  const double total = mass[0] + mass[1] + mass[2];

  auto rng = make_engine(35);
  ChainState s = initial_state(target, Matrix::Zero(1, 1));
  double freq[3] = {0, 0, 0};
  const int steps = 1000000;
  for (int k = 0; k < steps; ++k) {
    s = mala_step(target, s, 0.3, rng);
    const double v = s.coef(0, 0);
    freq[v < 0.0 ? 0 : (v < 0.8 ? 1 : 2)] += 1.0;
  }
  double tv = 0.0;
  for (int b = 0; b < 3; ++b) tv += std::abs(freq[b] / steps - mass[b] / total);
  CHECK(0.5 * tv <= 0.02);
}

TEST_CASE("run_chain on a 1x1x1 problem matches quadrature of the quasi-posterior") {
  const double x = 1.3, y = 0.7, lambda = 2.0, tau = 1e3, c = 10.0;
  const RrrProblem prob = scalar_problem(x, y, lambda, tau, c);
  const int grid = 10000;
  const double lo = -12.0, hi = 12.0, dx = (hi - lo) / grid;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double v = lo + (i + 0.5) * dx;
    const double w = std::exp(scalar_log_density(v, x, y, lambda, tau, c));
    num += w * std::min(c, std::max(-c, x * v));
    den += w;
  }
  SamplerConfig cfg;
  cfg.step = 0.2;
  cfg.iterations = 100000;
  cfg.burn_in = 1000;
  cfg.seed = 36;
  const PosteriorSummary s = run_chain(prob, prior_for(prob), cfg);
  CHECK(std::abs(s.mean_fitted(0, 0) - num / den) <= 0.01);
}

TEST_CASE("a single kept iterate summarizes to itself") {
  auto rng = make_engine(37);
  const RrrProblem prob = small_problem(rng);
  SamplerConfig cfg;
  cfg.step = 1e-3;
  cfg.iterations = 11;
  cfg.burn_in = 10;
  cfg.seed = 1;
  const PosteriorSummary s = run_chain(prob, prior_for(prob), cfg);
  const Matrix fit = prob.design() * s.mean_coef;
  CHECK(s.n_samples == 1);
  CHECK((s.mean_fitted - clamp_projection(fit, prob.clamp())).norm() <= 1e-12);
  CHECK((s.quantile(0.025) - fit).norm() <= 1e-12);
  CHECK((s.quantile(0.975) - fit).norm() <= 1e-12);
}

TEST_CASE("run_chain is reproducible and respects the clamp") {
  auto rng = make_engine(38);
  const Matrix x = normal_matrix(10, 3, rng);
  const Matrix z = 5.0 * x * normal_matrix(3, 2, rng);
  ModelConstants k;
  k.lambda = 10.0;
  k.clamp = 1.0;
  const RrrProblem prob(x, random_obs(z, 0.8, rng), k);
  SamplerConfig cfg;
  cfg.step = 1e-3;
  cfg.iterations = 600;
  cfg.burn_in = 100;
  cfg.seed = 99;
  const PosteriorSummary a = run_chain(prob, prior_for(prob), cfg);
  const PosteriorSummary b = run_chain(prob, prior_for(prob), cfg);
  CHECK(a.mean_coef == b.mean_coef);
  CHECK(a.mean_fitted == b.mean_fitted);
  CHECK(a.quantiles[0] == b.quantiles[0]);
  CHECK(a.mean_fitted.cwiseAbs().maxCoeff() <= 1.0);
  cfg.seed = 100;
  CHECK(run_chain(prob, prior_for(prob), cfg).mean_coef != a.mean_coef);
}

TEST_CASE("prior-only chain is centred") {
  ModelConstants k;
  k.lambda = 0.0;
  k.tau = 1.0;
  k.clamp = 1e6;
  const RrrProblem prob(Matrix::Identity(2, 2), ObservationSet({{0, 0, 1.0}}, 2, 2, false), k);
  const Posterior target(prob, prior_for(prob));
  auto rng = make_engine(39);
  ChainState s = initial_state(target, Matrix::Zero(2, 2));
  const int steps = 100000, batches = 50, per = steps / batches;
  std::vector<Matrix> batch_means(batches, Matrix::Zero(2, 2));
  for (int k2 = 0; k2 < steps; ++k2) {
    s = mala_step(target, s, 0.5, rng);
    batch_means[k2 / per] += s.coef / per;
  }
  Matrix mean = Matrix::Zero(2, 2);
  for (const auto& b : batch_means) mean += b / batches;
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) {
      double var = 0.0;
      for (const auto& b : batch_means) var += (b(i, j) - mean(i, j)) * (b(i, j) - mean(i, j));
      const double se = std::sqrt(var / (batches - 1) / batches);
      CHECK(std::abs(mean(i, j)) <= 3.0 * se);
    }
}

TEST_CASE("credible bands narrow as lambda grows") {
  auto rng = make_engine(40);
  const RrrProblem base = small_problem(rng, 1.0);
  SamplerConfig cfg;
  cfg.iterations = 6000;
  cfg.burn_in = 1000;
  cfg.seed = 5;
  double prev = 1e300;
  for (double lambda : {2.0, 8.0, 32.0}) {
    const RrrProblem prob = base.with_lambda(lambda);
    cfg.step = 0.5 / lambda / 10.0;
    const PosteriorSummary s = run_chain(prob, prior_for(prob), cfg);
    const double width = (s.quantile(0.975) - s.quantile(0.025)).mean();
    CHECK(width < prev);
    prev = width;
  }
}

TEST_CASE("divergence and rejection caps") {
  auto rng = make_engine(41);
  const RrrProblem prob = small_problem(rng, 200.0, 1e300);
  const Posterior target(prob, prior_for(prob));
  ChainState s = initial_state(target, Matrix::Zero(3, 2));
  bool diverged = false;
  try {
    for (int k = 0; k < 1000; ++k) s = lmc_step(target, s, 5.0, rng);
  } catch (const DivergenceError& e) {
    diverged = true;
    CHECK(e.iteration() >= 1);
  }
  CHECK(diverged);

  ChainState m = initial_state(target, Matrix::Zero(3, 2));
  CHECK_THROWS_AS(
      [&] {
        for (int k = 0; k < 20000; ++k) m = mala_step(target, m, 1e12, rng);
      }(),
      DivergenceError);
}

TEST_CASE("step-size search") {
  auto rng = make_engine(42);
  const RrrProblem prob = small_problem(rng);
  StepSearch one;
  one.alphas = {1.3};
  const TunedStep t = tune_step_size(prob, prior_for(prob), one, 1);
  CHECK(t.step_size == std::pow(6.0, -1.3));

  StepSearch wild;
  wild.alphas = {-8.0, -6.0};
  CHECK_THROWS_AS(tune_step_size(prob, prior_for(prob), wild, 1), TuningError);

  CHECK(StepSearch{}.grid().size() == 31);
  CHECK(StepSearch{}.grid().front() == 0.5);
  CHECK(StepSearch{}.grid().back() == 2.0);
}

TEST_CASE("tuned alpha near the published choices") {
  auto pick = [](SettingSpec spec) {
    spec.seed = 2024;
    const SyntheticDataset d = generate(spec);
    ModelConstants k;
    k.lambda = 0.5 * static_cast<double>(d.obs.size());
    k.tau = std::sqrt(10.0);
    k.clamp = default_clamp(d.obs);
    const RrrProblem prob(d.design, d.obs, k);
    return tune_step_size(prob, prior_for(prob), StepSearch{}, 7);
  };
  SettingSpec one = SettingSpec::preset(Setting::kI);
  one.missing_rate = 0.5;
  const TunedStep a = pick(one);
  CHECK(a.in_window);
  CHECK(a.alpha >= 0.9);
  CHECK(a.alpha <= 1.4);

  SettingSpec three = SettingSpec::preset(Setting::kIII);
  three.rho_x = 0.5;
  three.missing_rate = 0.8;
  const TunedStep b = pick(three);
  CHECK(b.alpha >= 0.75);
  CHECK(b.alpha <= 1.25);
}

TEST_CASE("empirical quantile is type 7") {
  std::vector<double> v{4, 1, 3, 2};
  CHECK(empirical_quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(empirical_quantile(v, 0.0) == 1.0);
  CHECK(empirical_quantile(v, 1.0) == 4.0);
  CHECK(empirical_quantile(v, 0.5) == doctest::Approx(2.5));
}

TEST_CASE("sampler configuration checks") {
  SamplerConfig cfg;
  cfg.burn_in = cfg.iterations;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SamplerConfig{};
  cfg.step = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SamplerConfig{};
  cfg.quantile_levels = {1.5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_algorithm("lmc") == Algorithm::kLmc);
  CHECK_THROWS_AS(parse_algorithm("hmc"), ConfigError);
}
