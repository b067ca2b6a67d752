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

#include "brrr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "brrr/errors.hpp"

namespace brrr {

namespace {

Matrix standard_normal(Index rows, Index cols, Engine& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix w(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) w(i, j) = normal(rng);
  return w;
}

double sup_norm(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

bool is_divergent(const Matrix& a) {
  return !a.allFinite() || sup_norm(a) > kDivergenceSupNorm;
}

// log q(to | from) up to the shared normalizing constant.
double log_proposal(const ChainState& from, const Matrix& to, double h) {
  return -(to - from.coef - h * from.grad).squaredNorm() / (4.0 * h);
}

void check_step(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidInput("step size must be > 0");
}

}  // namespace

double log_posterior(const RrrProblem& prob, const PriorConfig& prior, const Matrix& coef) {
  return data_log_density(prob, coef) + log_prior_unnorm(prior, coef);
}

Matrix grad_log_posterior(const RrrProblem& prob, const PriorConfig& prior,
                          const Matrix& coef) {
  return data_grad(prob, coef) + grad_log_prior(prior, coef);
}

Posterior::Posterior(const RrrProblem& prob, PriorConfig prior)
    : prob_(&prob), prior_(prior) {
  if (prior_.m != prob.m() || prior_.p != prob.p())
    throw InvalidInput("prior dimensions do not match the problem");
}

Posterior::Evaluation Posterior::evaluate(const Matrix& coef) const {
  DataTerm data = data_term(*prob_, coef);
  PriorTerm prior = prior_term(prior_, coef);
  data.grad += prior.grad;
  return {data.log_density + prior.log_density, std::move(data.grad)};
}

ChainState initial_state(const Posterior& target, Matrix coef) {
  require_finite(coef, "initial coefficient matrix");
  auto eval = target.evaluate(coef);
  ChainState s;
  s.coef = std::move(coef);
  s.grad = std::move(eval.grad);
  s.log_density = eval.log_density;
  return s;
}

ChainState lmc_step(const Posterior& target, const ChainState& state, double h,
                    const Matrix& noise) {
  check_step(h);
  Matrix next = state.coef + h * state.grad + std::sqrt(2.0 * h) * noise;
  const std::int64_t k = state.iteration + 1;
  if (is_divergent(next)) {
    const double norm = next.allFinite() ? sup_norm(next)
                                         : std::numeric_limits<double>::infinity();
    throw DivergenceError("Langevin iterate diverged at iteration " + std::to_string(k) +
                              " (sup-norm " + std::to_string(norm) + ")",
                          k, norm);
  }
  ChainState out = initial_state(target, std::move(next));
  out.iteration = k;
  out.accepted = state.accepted + 1;
  return out;
}

ChainState lmc_step(const Posterior& target, const ChainState& state, double h,
                    Engine& rng) {
  return lmc_step(target, state, h,
                  standard_normal(state.coef.rows(), state.coef.cols(), rng));
}

double mala_log_accept_ratio(const ChainState& from, const ChainState& to, double h) {
  return to.log_density - from.log_density + log_proposal(to, from.coef, h) -
         log_proposal(from, to.coef, h);
}

ChainState mala_step(const Posterior& target, const ChainState& state, double h,
                     const Matrix& noise, double uniform) {
  check_step(h);
  const std::int64_t k = state.iteration + 1;
  Matrix proposal = state.coef + h * state.grad + std::sqrt(2.0 * h) * noise;

  bool accept = false;
  ChainState candidate;
  if (!is_divergent(proposal)) {
    candidate = initial_state(target, std::move(proposal));
    if (std::isfinite(candidate.log_density) && candidate.grad.allFinite()) {
      const double log_ratio = mala_log_accept_ratio(state, candidate, h);
      accept = log_ratio >= 0.0 || std::log(uniform) < log_ratio;
    }
  }

  if (accept) {
    candidate.iteration = k;
    candidate.accepted = state.accepted + 1;
    candidate.rejected_in_a_row = 0;
    return candidate;
  }
  ChainState out = state;
  out.iteration = k;
  if (++out.rejected_in_a_row > kMaxConsecutiveRejections) {
    throw DivergenceError("MALA rejected " + std::to_string(out.rejected_in_a_row) +
                              " proposals in a row at iteration " + std::to_string(k) +
                              "; the step size is too large",
                          k, sup_norm(state.coef));
  }
  return out;
}

ChainState mala_step(const Posterior& target, const ChainState& state, double h,
                     Engine& rng) {
  Matrix noise = standard_normal(state.coef.rows(), state.coef.cols(), rng);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return mala_step(target, state, h, noise, u);
}

const char* to_string(Algorithm a) noexcept {
  return a == Algorithm::kLmc ? "lmc" : "mala";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "lmc" || name == "LMC") return Algorithm::kLmc;
  if (name == "mala" || name == "MALA") return Algorithm::kMala;
  throw ConfigError("unknown algorithm '" + name + "' (expected lmc or mala)");
}

std::vector<double> StepSearch::grid() const {
  if (!alphas.empty()) return alphas;
  std::vector<double> g;
  for (int i = 10; i <= 40; ++i) g.push_back(i / 20.0);
  return g;
}

void SamplerConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations) throw ConfigError("burn-in must satisfy 0 <= burn_in < T");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  for (double q : quantile_levels)
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile levels must lie in [0, 1]");
  if (const double* h = std::get_if<double>(&step)) {
    if (!(*h > 0.0)) throw ConfigError("step size must be > 0");
  } else {
    const auto& s = std::get<StepSearch>(step);
    if (!(s.window.first > 0.0 && s.window.first < s.window.second && s.window.second < 1.0))
      throw ConfigError("target acceptance window must be a sub-interval of (0, 1)");
    if (s.pilot_steps < 2) throw ConfigError("pilot chains need at least 2 steps");
  }
}

TunedStep tune_step_size(const RrrProblem& prob, const PriorConfig& prior,
                         const StepSearch& search, std::uint64_t seed) {
  const Posterior target(prob, prior);
  const double pm = static_cast<double>(prob.p() * prob.m());
  const auto alphas = search.grid();
  if (alphas.empty()) throw ConfigError("empty alpha grid");
  if (alphas.size() == 1) {
    return {std::pow(pm, -alphas.front()), alphas.front(), std::nan(""), true};
  }

  const std::int64_t warm = search.pilot_steps / 2;
  std::optional<TunedStep> best_in, best_any;
  auto closer = [&](const std::optional<TunedStep>& cur, double acc) {
    return !cur || std::abs(acc - search.target) < std::abs(cur->acceptance - search.target);
  };

  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double h = std::pow(pm, -alphas[i]);
    Engine rng = make_engine(seed, {stream::kTuning, i});
    double acceptance = 0.0;
    try {
      ChainState s = initial_state(target, Matrix::Zero(prob.m(), prob.p()));
      std::int64_t acc_at_warm = 0;
      for (std::int64_t k = 0; k < search.pilot_steps; ++k) {
        if (k == warm) acc_at_warm = s.accepted;
        s = mala_step(target, s, h, rng);
      }
      acceptance = static_cast<double>(s.accepted - acc_at_warm) /
                   static_cast<double>(search.pilot_steps - warm);
    } catch (const DivergenceError&) {
      continue;
    }
    if (acceptance == 0.0) continue;  // stuck pilot; treated as diverged
    const TunedStep cand{h, alphas[i], acceptance, true};
    if (acceptance >= search.window.first && acceptance <= search.window.second &&
        closer(best_in, acceptance))
      best_in = cand;
    if (closer(best_any, acceptance)) best_any = cand;
  }
  if (best_in) return *best_in;
  if (!best_any) throw TuningError("every pilot chain of the step-size search diverged");
  best_any->in_window = false;
  return *best_any;
}

const Matrix& PosteriorSummary::quantile(double level) const {
  for (std::size_t i = 0; i < quantile_levels.size(); ++i)
    if (std::abs(quantile_levels[i] - level) < 1e-12) return quantiles[i];
  throw InvalidInput("quantile level " + std::to_string(level) + " was not recorded");
}

double empirical_quantile(std::vector<double>& values, double level) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  const double pos = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double a = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return a;
  const double b = *std::min_element(values.begin() + lo + 1, values.end());
  return a + frac * (b - a);
}

PosteriorSummary run_chain(const RrrProblem& prob, const PriorConfig& prior,
                           const SamplerConfig& cfg, const Matrix& start) {
  cfg.validate();
  if (start.rows() != prob.m() || start.cols() != prob.p())
    throw InvalidInput("initial coefficient matrix has the wrong shape");

  PosteriorSummary out;
  if (const double* h = std::get_if<double>(&cfg.step)) {
    out.step_size = *h;
  } else {
    out.tuning = tune_step_size(prob, prior, std::get<StepSearch>(cfg.step), cfg.seed);
    out.step_size = out.tuning->step_size;
  }

  const Posterior target(prob, prior);
  Engine rng = make_engine(cfg.seed, {stream::kChain});
  const Index ell = prob.ell(), p = prob.p();
  const double c = prob.clamp();
  const std::int64_t kept = cfg.iterations - cfg.burn_in;
  const std::int64_t stored = (kept + cfg.thin - 1) / cfg.thin;

  Matrix sum_fitted = Matrix::Zero(ell, p);
  Matrix sum_coef = Matrix::Zero(prob.m(), p);
  // Column s holds draw s of vec(X M).
  Matrix draws(ell * p, cfg.quantile_levels.empty() ? 0 : stored);
  Matrix fitted(ell, p);

  ChainState s = initial_state(target, start);
  std::int64_t next_draw = 0;
  for (std::int64_t k = 1; k <= cfg.iterations; ++k) {
    s = cfg.algorithm == Algorithm::kMala ? mala_step(target, s, out.step_size, rng)
                                          : lmc_step(target, s, out.step_size, rng);
    if (k <= cfg.burn_in) continue;
    fitted.noalias() = prob.design() * s.coef;
    sum_fitted += fitted.cwiseMax(-c).cwiseMin(c);
    sum_coef += s.coef;
    if (draws.cols() > 0 && (k - cfg.burn_in - 1) % cfg.thin == 0)
      draws.col(next_draw++) = fitted.reshaped();
  }

  const double denom = static_cast<double>(kept);
  out.mean_fitted = sum_fitted / denom;
  out.mean_coef = sum_coef / denom;
  out.n_samples = kept;
  out.acceptance_rate =
      static_cast<double>(s.accepted) / static_cast<double>(cfg.iterations);

  out.quantile_levels = cfg.quantile_levels;
  out.quantiles.assign(cfg.quantile_levels.size(), Matrix(ell, p));
  std::vector<double> buf(static_cast<std::size_t>(draws.cols()));
  for (Index e = 0; e < ell * p; ++e) {
    for (std::size_t q = 0; q < cfg.quantile_levels.size(); ++q) {
      for (Index d = 0; d < draws.cols(); ++d) buf[static_cast<std::size_t>(d)] = draws(e, d);
      out.quantiles[q](e % ell, e / ell) = empirical_quantile(buf, cfg.quantile_levels[q]);
    }
  }
  return out;
}

PosteriorSummary run_chain(const RrrProblem& prob, const PriorConfig& prior,
                           const SamplerConfig& cfg) {
  return run_chain(prob, prior, cfg, Matrix::Zero(prob.m(), prob.p()));
}

}  // namespace brrr
