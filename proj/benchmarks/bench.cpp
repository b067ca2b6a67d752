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


#include <benchmark/benchmark.h>

#include <cmath>

#include "brrr/experiment.hpp"

namespace {

using namespace brrr;

struct Fixture {
  SyntheticDataset sim;
  RrrProblem prob;
  PriorConfig prior;

  explicit Fixture(Setting s)
      : sim(generate([&] {
          SettingSpec spec = SettingSpec::preset(s);
          spec.missing_rate = 0.2;
          spec.seed = 11;
          return spec;
        }())),
        prob(make_problem(sim.design, sim.obs, ModelOptions{})),
        prior(prior_for(prob)) {}
};

const Fixture& fixture(int64_t which) {
  static const Fixture one(Setting::kI);
  static const Fixture two(Setting::kII);
  return which == 1 ? one : two;
}

void BM_GradLogPosterior(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  const Matrix coef = Matrix::Constant(f.prob.m(), f.prob.p(), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(grad_log_posterior(f.prob, f.prior, coef));
}
BENCHMARK(BM_GradLogPosterior)->Arg(1)->Arg(2);

void BM_MalaStep(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  const Posterior target(f.prob, f.prior);
  ChainState chain = initial_state(target, Matrix::Zero(f.prob.m(), f.prob.p()));
  Engine rng = make_engine(3, {stream::kChain});
  const double h = std::pow(static_cast<double>(f.prob.m() * f.prob.p()), -1.2);
  for (auto _ : state) chain = mala_step(target, chain, h, rng);
}
BENCHMARK(BM_MalaStep)->Arg(1)->Arg(2);

void BM_PriorGradExact(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  const Matrix coef = f.sim.coef;
  for (auto _ : state) benchmark::DoNotOptimize(grad_log_prior(f.prior, coef));
}
BENCHMARK(BM_PriorGradExact)->Arg(1)->Arg(2);

void BM_PriorGradRidge(benchmark::State& state) {
  const Fixture& f = fixture(state.range(0));
  const Matrix coef = f.sim.coef;
  for (auto _ : state) benchmark::DoNotOptimize(grad_log_prior_ridge(f.prior, coef, 1e-8));
}
BENCHMARK(BM_PriorGradRidge)->Arg(1)->Arg(2);

}  // namespace

BENCHMARK_MAIN();
