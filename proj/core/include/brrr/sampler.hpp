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

// Langevin samplers for the quasi-posterior
//   rho(M) ∝ exp(-lambda r(M)) pi(M)
// over m x p coefficient matrices: unadjusted LMC, Metropolis-adjusted
// Langevin (MALA), acceptance-targeted step-size search, and chain
// summaries (posterior means and entrywise quantiles of X M).

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "brrr/model.hpp"
#include "brrr/prior.hpp"
#include "brrr/rng.hpp"

namespace brrr {

// Unnormalized log quasi-posterior and its gradient.
double log_posterior(const RrrProblem& prob, const PriorConfig& prior, const Matrix& coef);
Matrix grad_log_posterior(const RrrProblem& prob, const PriorConfig& prior,
                          const Matrix& coef);

// Bundles the problem and prior; evaluates value and gradient with one
// X*M product and one factorization.
class Posterior {
 public:
  Posterior(const RrrProblem& prob, PriorConfig prior);

  const RrrProblem& problem() const noexcept { return *prob_; }
  const PriorConfig& prior() const noexcept { return prior_; }

  struct Evaluation {
    double log_density;
    Matrix grad;
  };
  Evaluation evaluate(const Matrix& coef) const;

 private:
  const RrrProblem* prob_;
  PriorConfig prior_;
};

struct ChainState {
  Matrix coef;
  Matrix grad;              // gradient of the log quasi-posterior at coef
  double log_density = 0.0;
  std::int64_t iteration = 0;
  std::int64_t accepted = 0;
  std::int64_t rejected_in_a_row = 0;
};

ChainState initial_state(const Posterior& target, Matrix coef);

inline constexpr double kDivergenceSupNorm = 1e8;
inline constexpr std::int64_t kMaxConsecutiveRejections = 10'000;

// Unadjusted step M + h grad + sqrt(2h) W with the given standard normal W.
// Throws DivergenceError on a non-finite iterate or sup-norm > 1e8.
ChainState lmc_step(const Posterior& target, const ChainState& state, double h,
                    const Matrix& noise);
ChainState lmc_step(const Posterior& target, const ChainState& state, double h,
                    Engine& rng);

// Langevin proposal with Metropolis-Hastings correction. `uniform` is the
// U(0,1) draw compared with the acceptance probability. A non-finite
// proposal counts as a rejection; more than kMaxConsecutiveRejections
// rejections in a row throws DivergenceError.
ChainState mala_step(const Posterior& target, const ChainState& state, double h,
                     const Matrix& noise, double uniform);
ChainState mala_step(const Posterior& target, const ChainState& state, double h,
                     Engine& rng);

// log of the MALA acceptance ratio for moving from `from` to `to`.
double mala_log_accept_ratio(const ChainState& from, const ChainState& to, double h);

enum class Algorithm { kLmc, kMala };

const char* to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(const std::string& name);

// Step sizes of the form h = (p m)^{-alpha}.
struct StepSearch {
  std::vector<double> alphas;      // empty means 0.5, 0.55, ..., 2.0
  std::int64_t pilot_steps = 500;  // acceptance is measured on the second half
  double target = 0.5;
  std::pair<double, double> window{0.4, 0.6};

  std::vector<double> grid() const;
};

struct TunedStep {
  double step_size;
  double alpha;
  double acceptance;   // pilot acceptance at the chosen alpha
  bool in_window;      // false: fallback to the closest-to-target alpha
};

struct SamplerConfig {
  Algorithm algorithm = Algorithm::kMala;
  // Fixed h, or a search over h = (pm)^{-alpha} using MALA pilots.
  std::variant<double, StepSearch> step = StepSearch{};
  std::int64_t iterations = 5000;
  std::int64_t burn_in = 2000;
  std::uint64_t seed = 0;
  std::vector<double> quantile_levels{0.025, 0.975};
  std::int64_t thin = 5;  // keep every thin-th post-burn-in draw for quantiles

  void validate() const;
};

// Pilot MALA chains from M = 0 over the alpha grid; returns the h whose
// pilot acceptance is closest to `target` among those inside `window`, or
// the closest overall (in_window = false). Throws TuningError when every
// pilot diverges.
TunedStep tune_step_size(const RrrProblem& prob, const PriorConfig& prior,
                         const StepSearch& search, std::uint64_t seed);

struct PosteriorSummary {
  Matrix mean_fitted;  // ell x p mean of Pi_C(X M_k) over kept iterates
  Matrix mean_coef;    // m x p mean of M_k
  std::vector<double> quantile_levels;
  std::vector<Matrix> quantiles;  // one ell x p matrix per level, of (X M_k)_ij
  double acceptance_rate = 1.0;   // over all T iterations; 1 for LMC
  std::int64_t n_samples = 0;
  double step_size = 0.0;
  std::optional<TunedStep> tuning;

  // Quantile matrix at `level`; throws InvalidInput if it was not recorded.
  const Matrix& quantile(double level) const;
};

// Runs T iterations from `start` (M_0), discards the first burn_in and
// summarizes the rest. Identical inputs give bit-identical summaries.
PosteriorSummary run_chain(const RrrProblem& prob, const PriorConfig& prior,
                           const SamplerConfig& cfg, const Matrix& start);
PosteriorSummary run_chain(const RrrProblem& prob, const PriorConfig& prior,
                           const SamplerConfig& cfg);

// Type-7 (linear interpolation) empirical quantile of `values`, which is
// reordered in place.
double empirical_quantile(std::vector<double>& values, double level);

}  // namespace brrr
