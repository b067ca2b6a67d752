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

#include "brrr/experiment.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "brrr/errors.hpp"
#include "brrr/rng.hpp"

namespace brrr {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* solver_name(PriorSolver s) {
  switch (s) {
    case PriorSolver::kAuto: return "auto";
    case PriorSolver::kExact: return "exact";
    case PriorSolver::kRidge: return "ridge";
  }
  return "auto";
}

PriorSolver parse_solver(const std::string& s) {
  if (s == "auto") return PriorSolver::kAuto;
  if (s == "exact") return PriorSolver::kExact;
  if (s == "ridge") return PriorSolver::kRidge;
  throw ConfigError("unknown prior solver '" + s + "'");
}

std::string method_label(Algorithm a) { return a == Algorithm::kLmc ? "LMC" : "MALA"; }

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& dst) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    dst.reset();
  } else {
    dst = j.at(key).get<T>();
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

json setting_json(const SettingSpec& s) {
  return {{"name", to_string(s.setting)},
          {"ell", s.ell},
          {"m", s.m},
          {"p", s.p},
          {"rank", s.rank},
          {"rho_x", s.rho_x},
          {"theta", s.missing_rate},
          {"with_replacement", s.with_replacement},
          {"intercept", s.intercept},
          {"noise", to_string(s.noise)},
          {"approx_low_rank", s.approx_low_rank},
          {"approx_lowrank_sd", s.approx_lowrank_sd}};
}

SettingSpec setting_from_json(const json& j, std::optional<SettingSpec> base) {
  SettingSpec s = base.value_or(SettingSpec{});
  if (j.contains("name")) {
    const Setting name = parse_setting(j.at("name").get<std::string>());
    if (!base || base->setting != name) {
      const SettingSpec keep = s;
      s = SettingSpec::preset(name);
      s.rho_x = keep.rho_x;
      s.missing_rate = keep.missing_rate;
      s.with_replacement = keep.with_replacement;
    }
  }
  read(j, "ell", s.ell);
  read(j, "m", s.m);
  read(j, "p", s.p);
  read(j, "rank", s.rank);
  read(j, "rho_x", s.rho_x);
  read(j, "theta", s.missing_rate);
  read(j, "with_replacement", s.with_replacement);
  read(j, "intercept", s.intercept);
  if (j.contains("noise")) s.noise = parse_noise(j.at("noise").get<std::string>());
  read(j, "approx_low_rank", s.approx_low_rank);
  read(j, "approx_lowrank_sd", s.approx_lowrank_sd);
  return s;
}

std::optional<fs::path> opt_path(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return fs::path(j.at(key).get<std::string>());
}

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(n_threads, count); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string cell(double v) {
  return std::isnan(v) ? std::string() : csv::format_double(v);
}

std::string fixed3(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(3);
  ss << v;
  return ss.str();
}

}  // namespace

void parse_lambda(const std::string& raw, ModelOptions& model) {
  std::string text;
  for (char c : raw)
    if (c != ' ' && c != '*') text.push_back(c);
  try {
    if (text == "n") {
      model.lambda.reset();
      model.lambda_factor = 1.0;
      return;
    }
    if (text.rfind("n/", 0) == 0) {
      model.lambda.reset();
      model.lambda_factor = 1.0 / std::stod(text.substr(2));
      return;
    }
    if (!text.empty() && text.back() == 'n') {
      model.lambda.reset();
      model.lambda_factor = std::stod(text.substr(0, text.size() - 1));
      return;
    }
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    model.lambda = v;
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse lambda '" + raw + "' (use a number, n, n/K or Kn)");
  }
}

void ExperimentConfig::validate() const {
  if (setting.has_value() == data.has_value())
    throw ConfigError("exactly one of a setting or input data paths is required");
  if (setting) {
    try {
      setting->validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("setting: ") + e.what());
    }
  }
  if (algorithms.empty()) throw ConfigError("no algorithm selected");
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (fit.iterations < 1 || fit.burn_in < 0 || fit.burn_in >= fit.iterations)
    throw ConfigError("need 0 <= burn-in < iterations");
  if (fit.thin < 1) throw ConfigError("thin must be >= 1");
  if (fit.step_size && !(*fit.step_size > 0.0)) throw ConfigError("step size must be > 0");
  if (fit.max_restarts < 0) throw ConfigError("max_restarts must be >= 0");
  if (model.lambda && !(*model.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!model.lambda && !(model.lambda_factor >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(model.tau2 > 0.0)) throw ConfigError("tau2 must be > 0");
  if (model.clamp && !(*model.clamp > 0.0)) throw ConfigError("clamp must be > 0");
  if (!(model.sigma > 0.0 && model.xi > 0.0)) throw ConfigError("sigma and xi must be > 0");
  if (!(bound.delta > 0.0)) throw ConfigError("delta must be > 0");
  if (!(bound.epsilon > 0.0 && bound.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  const auto& w = fit.search.window;
  if (!(w.first > 0.0 && w.first < w.second && w.second < 1.0))
    throw ConfigError("target acceptance window must be a sub-interval of (0, 1)");
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["setting"] = cfg.setting ? setting_json(*cfg.setting) : json(nullptr);
  if (cfg.data) {
    j["data"] = {{"x", cfg.data->x.string()},
                 {"z", cfg.data->z.string()},
                 {"mask", cfg.data->mask ? json(cfg.data->mask->string()) : json(nullptr)},
                 {"z_full", cfg.data->z_full ? json(cfg.data->z_full->string()) : json(nullptr)},
                 {"standardize", cfg.data->standardize}};
  } else {
    j["data"] = nullptr;
  }
  j["algorithms"] = json::array();
  for (auto a : cfg.algorithms) j["algorithms"].push_back(to_string(a));
  j["model"] = {{"lambda", opt(cfg.model.lambda)},
                {"lambda_factor", cfg.model.lambda_factor},
                {"tau2", cfg.model.tau2},
                {"clamp", opt(cfg.model.clamp)},
                {"sigma", cfg.model.sigma},
                {"xi", cfg.model.xi}};
  const auto& f = cfg.fit;
  j["sampler"] = {{"iterations", f.iterations},
                  {"burn_in", f.burn_in},
                  {"thin", f.thin},
                  {"quantiles", f.quantiles},
                  {"step_size", opt(f.step_size)},
                  {"step_alpha", opt(f.step_alpha)},
                  {"alpha_grid", f.search.grid()},
                  {"pilot_steps", f.search.pilot_steps},
                  {"target_acceptance", {f.search.window.first, f.search.window.second}},
                  {"max_restarts", f.max_restarts},
                  {"prior_solver", solver_name(f.prior_solver)},
                  {"ridge_tol", f.ridge_tol}};
  j["bound"] = {{"delta", cfg.bound.delta},
                {"epsilon", cfg.bound.epsilon},
                {"n_override", opt(cfg.bound.n_override)}};
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["out"] = cfg.out.string();
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text, ExperimentConfig cfg) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const json& j = doc.contains("config") ? doc.at("config") : doc;
  try {
    if (j.contains("setting")) {
      if (j.at("setting").is_null()) {
        cfg.setting.reset();
      } else if (j.at("setting").is_string()) {
        cfg.setting = setting_from_json(json{{"name", j.at("setting")}}, cfg.setting);
      } else {
        cfg.setting = setting_from_json(j.at("setting"), cfg.setting);
      }
    }
    if (j.contains("data")) {
      if (j.at("data").is_null()) {
        cfg.data.reset();
      } else {
        const json& d = j.at("data");
        DataPaths paths = cfg.data.value_or(DataPaths{});
        if (d.contains("x")) paths.x = d.at("x").get<std::string>();
        if (d.contains("z")) paths.z = d.at("z").get<std::string>();
        if (d.contains("mask")) paths.mask = opt_path(d, "mask");
        if (d.contains("z_full")) paths.z_full = opt_path(d, "z_full");
        read(d, "standardize", paths.standardize);
        cfg.data = paths;
      }
    }
    if (j.contains("algorithms")) {
      cfg.algorithms.clear();
      for (const auto& a : j.at("algorithms")) cfg.algorithms.push_back(parse_algorithm(a));
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      read_opt(m, "lambda", cfg.model.lambda);
      read(m, "lambda_factor", cfg.model.lambda_factor);
      read(m, "tau2", cfg.model.tau2);
      read_opt(m, "clamp", cfg.model.clamp);
      read(m, "sigma", cfg.model.sigma);
      read(m, "xi", cfg.model.xi);
    }
    if (j.contains("sampler")) {
      const json& s = j.at("sampler");
      auto& f = cfg.fit;
      read(s, "iterations", f.iterations);
      read(s, "burn_in", f.burn_in);
      read(s, "thin", f.thin);
      read(s, "quantiles", f.quantiles);
      read_opt(s, "step_size", f.step_size);
      read_opt(s, "step_alpha", f.step_alpha);
      read(s, "alpha_grid", f.search.alphas);
      read(s, "pilot_steps", f.search.pilot_steps);
      if (s.contains("target_acceptance")) {
        const auto w = s.at("target_acceptance").get<std::vector<double>>();
        if (w.size() != 2) throw ConfigError("target_acceptance needs two values");
        f.search.window = {w[0], w[1]};
      }
      read(s, "max_restarts", f.max_restarts);
      if (s.contains("prior_solver"))
        f.prior_solver = parse_solver(s.at("prior_solver").get<std::string>());
      read(s, "ridge_tol", f.ridge_tol);
    }
    if (j.contains("bound")) {
      const json& b = j.at("bound");
      read(b, "delta", cfg.bound.delta);
      read(b, "epsilon", cfg.bound.epsilon);
      read_opt(b, "n_override", cfg.bound.n_override);
    }
    read(j, "reps", cfg.reps);
    read(j, "seed", cfg.seed);
    read(j, "workers", cfg.workers);
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

ObservationSet Dataset::observations() const {
  std::vector<Observation> entries;
  for (Index j = 0; j < counts.cols(); ++j)
    for (Index i = 0; i < counts.rows(); ++i)
      for (int k = 0; k < counts(i, j); ++k) {
        if (std::isnan(response(i, j)))
          throw InvalidInput("cell (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                             ") is marked observed but has no value");
        entries.push_back({i, j, response(i, j)});
      }
  return ObservationSet(std::move(entries), response.rows(), response.cols(), with_replacement);
}

std::vector<std::pair<Index, Index>> Dataset::heldout() const {
  std::vector<std::pair<Index, Index>> out;
  for (Index j = 0; j < counts.cols(); ++j)
    for (Index i = 0; i < counts.rows(); ++i)
      if (counts(i, j) == 0) out.emplace_back(i, j);
  return out;
}

Dataset from_synthetic(const SyntheticDataset& data) {
  Dataset d;
  d.design = data.design;
  d.counts = data.obs.counts();
  d.response = Matrix::Constant(data.response.rows(), data.response.cols(), kNaN);
  for (Index j = 0; j < d.counts.cols(); ++j)
    for (Index i = 0; i < d.counts.rows(); ++i)
      if (d.counts(i, j) > 0) d.response(i, j) = data.response(i, j);
  d.with_replacement = data.obs.with_replacement();
  d.response_full = data.response;
  d.coef_star = data.coef;
  return d;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  csv::write_matrix(dir / "X.csv", data.design, "x");
  csv::write_matrix(dir / "Z.csv", data.response, "y");
  csv::write_int_matrix(dir / "mask.csv", data.counts, "y");
  if (data.coef_star) csv::write_matrix(dir / "M_star.csv", *data.coef_star, "y");
  if (data.response_full) csv::write_matrix(dir / "Z_full.csv", *data.response_full, "y");
  json meta = {{"with_replacement", data.with_replacement}};
  csv::write_text(dir / "dataset.json", meta.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  DataPaths paths;
  paths.x = dir / "X.csv";
  paths.z = dir / "Z.csv";
  if (fs::exists(dir / "mask.csv")) paths.mask = dir / "mask.csv";
  if (fs::exists(dir / "Z_full.csv")) paths.z_full = dir / "Z_full.csv";
  Dataset d = load_dataset(paths);
  if (fs::exists(dir / "M_star.csv")) d.coef_star = csv::read_matrix(dir / "M_star.csv").values;
  if (fs::exists(dir / "dataset.json")) {
    try {
      read(json::parse(csv::read_text(dir / "dataset.json")), "with_replacement",
           d.with_replacement);
    } catch (const json::exception& e) {
      throw IoError("bad dataset.json: " + std::string(e.what()));
    }
  }
  return d;
}

Dataset load_dataset(const DataPaths& paths) {
  Dataset d;
  const csv::MatrixFile x = csv::read_matrix(paths.x);
  if (!x.present.all()) throw IoError(paths.x.string() + ": the design may not have missing cells");
  d.design = x.values;
  csv::MatrixFile z = csv::read_matrix(paths.z);
  if (z.values.rows() != d.design.rows())
    throw IoError("X and Z have different row counts");
  d.response = z.values;
  if (paths.mask) {
    d.counts = csv::read_int_matrix(*paths.mask);
    if (d.counts.rows() != d.response.rows() || d.counts.cols() != d.response.cols())
      throw IoError("mask shape does not match Z");
    d.with_replacement = (d.counts.array() > 1).any();
  } else {
    d.counts = z.present.cast<int>();
  }
  if (paths.z_full) d.response_full = csv::read_matrix(*paths.z_full).values;
  if (paths.standardize) {
    standardize_columns(d.design);
    standardize_columns(d.response, &z.present);
    if (d.response_full) {
      const csv::BoolArray full_present = d.response_full->array().isNaN() == false;
      standardize_columns(*d.response_full, &full_present);
    }
  }
  return d;
}

void standardize_columns(Matrix& a, const csv::BoolArray* present) {
  for (Index j = 0; j < a.cols(); ++j) {
    double sum = 0.0, count = 0.0;
    for (Index i = 0; i < a.rows(); ++i)
      if (!present || (*present)(i, j)) {
        sum += a(i, j);
        count += 1.0;
      }
    if (count < 2.0) continue;
    const double mean = sum / count;
    double ss = 0.0;
    for (Index i = 0; i < a.rows(); ++i)
      if (!present || (*present)(i, j)) ss += (a(i, j) - mean) * (a(i, j) - mean);
    const double sd = std::sqrt(ss / (count - 1.0));
    for (Index i = 0; i < a.rows(); ++i) {
      if (present && !(*present)(i, j)) continue;
      a(i, j) = sd > 0.0 ? (a(i, j) - mean) / sd : 0.0;
    }
  }
}

Matrix ols_fit(const Matrix& design, const Matrix& response) {
  if (!response.allFinite()) throw InvalidInput("OLS reference needs a complete response");
  return design.colPivHouseholderQr().solve(response);
}

RrrProblem make_problem(const Matrix& design, const ObservationSet& obs,
                        const ModelOptions& model) {
  ModelConstants k;
  k.lambda = model.lambda.value_or(model.lambda_factor * static_cast<double>(obs.size()));
  k.tau = std::sqrt(model.tau2);
  k.clamp = model.clamp.value_or(default_clamp(obs));
  k.sigma = model.sigma;
  k.xi = model.xi;
  return RrrProblem(design, obs, k);
}

TunedStep resolve_step(const RrrProblem& prob, const FitOptions& fit, std::uint64_t seed) {
  const double pm = static_cast<double>(prob.p() * prob.m());
  if (fit.step_size) return {*fit.step_size, kNaN, kNaN, true};
  if (fit.step_alpha) return {std::pow(pm, -*fit.step_alpha), *fit.step_alpha, kNaN, true};
  PriorConfig prior = prior_for(prob);
  prior.solver = fit.prior_solver;
  prior.ridge_tol = fit.ridge_tol;
  return tune_step_size(prob, prior, fit.search, seed);
}

FitResult fit_model(const RrrProblem& prob, Algorithm algorithm, const FitOptions& fit,
                    const TunedStep& step, std::uint64_t seed) {
  PriorConfig prior = prior_for(prob);
  prior.solver = fit.prior_solver;
  prior.ridge_tol = fit.ridge_tol;

  SamplerConfig sc;
  sc.algorithm = algorithm;
  sc.iterations = fit.iterations;
  sc.burn_in = fit.burn_in;
  sc.thin = fit.thin;
  sc.quantile_levels = fit.quantiles;
  sc.seed = seed;

  FitResult out;
  out.lambda = prob.lambda();
  out.tau = prob.tau();
  out.clamp = prob.clamp();
  out.n = prob.n();
  const auto t0 = std::chrono::steady_clock::now();
  double h = step.step_size;
  for (int attempt = 0;; ++attempt) {
    sc.step = h;
    try {
      out.summary = run_chain(prob, prior, sc);
      break;
    } catch (const DivergenceError&) {
      if (attempt >= fit.max_restarts) throw;
      h *= 0.5;
      ++out.restarts;
    }
  }
  if (!std::isnan(step.alpha)) out.summary.tuning = step;
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

ReplicationResult score(const Dataset& data, const PosteriorSummary& summary,
                        const std::optional<Matrix>& reference) {
  ReplicationResult r;
  r.est = r.pred = r.mse = r.ecovr = kNaN;
  if (reference) {
    r.est = surface_error(*reference, data.design * summary.mean_coef);
    r.mse = surface_error(*reference, summary.mean_fitted);
    r.ecovr = coverage_rate(summary.quantile(0.025), summary.quantile(0.975), *reference);
  }
  const auto held = data.heldout();
  if (data.response_full && !held.empty()) {
    const csv::BoolArray valid = data.response_full->array().isNaN() == false;
    bool any = false;
    for (const auto& [i, j] : held) any = any || valid(i, j);
    if (any) r.pred = pred_error(*data.response_full, data.design, summary.mean_coef, held, &valid);
  }
  r.acceptance_rate = summary.acceptance_rate;
  return r;
}

csv::Table report_table(const std::vector<ReportRow>& rows) {
  csv::Table t;
  t.header = {"setting", "method", "theta", "rho_x", "est", "pred", "mse", "ecovr", "rep",
              "acceptance", "step_size", "alpha", "restarts"};
  for (const auto& r : rows) {
    t.rows.push_back({r.setting, r.method, csv::format_double(r.theta),
                      csv::format_double(r.rho_x), cell(r.result.est), cell(r.result.pred),
                      cell(r.result.mse), cell(r.result.ecovr), std::to_string(r.rep),
                      r.result.acceptance_rate ? cell(*r.result.acceptance_rate) : "",
                      cell(r.step_size), cell(r.alpha), std::to_string(r.restarts)});
  }
  return t;
}

namespace {

using GroupKey = std::tuple<std::string, std::string, double, double>;

std::vector<std::pair<GroupKey, std::vector<const ReportRow*>>> group(
    const std::vector<ReportRow>& rows) {
  std::vector<std::pair<GroupKey, std::vector<const ReportRow*>>> groups;
  for (const auto& r : rows) {
    GroupKey key{r.setting, r.method, r.theta, r.rho_x};
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(&r);
  }
  return groups;
}

MetricSummary metric(const std::vector<const ReportRow*>& rows,
                     double ReplicationResult::*field) {
  std::vector<double> v;
  for (const auto* r : rows)
    if (!std::isnan(r->result.*field)) v.push_back(r->result.*field);
  if (v.empty()) return {kNaN, kNaN, kNaN};
  return summarize(v);
}

}  // namespace

csv::Table aggregate_table(const std::vector<ReportRow>& rows) {
  csv::Table t;
  t.header = {"setting", "method", "theta", "rho_x", "reps"};
  for (const char* m : {"est", "pred", "mse", "ecovr"})
    for (const char* s : {"mean", "sd", "se"}) t.header.push_back(std::string(m) + "_" + s);
  for (const auto& [key, members] : group(rows)) {
    std::vector<std::string> row{std::get<0>(key), std::get<1>(key),
                                 csv::format_double(std::get<2>(key)),
                                 csv::format_double(std::get<3>(key)),
                                 std::to_string(members.size())};
    for (auto field : {&ReplicationResult::est, &ReplicationResult::pred,
                       &ReplicationResult::mse, &ReplicationResult::ecovr}) {
      const MetricSummary s = metric(members, field);
      row.push_back(cell(s.mean));
      row.push_back(cell(s.sd));
      row.push_back(cell(s.se));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string summary_text(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  for (const auto& [key, members] : group(rows)) {
    out << "Setting " << std::get<0>(key) << "  rho_x = " << std::get<3>(key)
        << "  theta = " << std::get<2>(key) << "  " << std::get<1>(key) << "  ("
        << members.size() << " reps)\n";
    const std::pair<const char*, double ReplicationResult::*> fields[] = {
        {"Est", &ReplicationResult::est},
        {"Pred", &ReplicationResult::pred},
        {"MSE", &ReplicationResult::mse},
        {"ECovR", &ReplicationResult::ecovr}};
    for (const auto& [name, field] : fields) {
      const MetricSummary s = metric(members, field);
      out << "  " << name << std::string(7 - std::string(name).size(), ' ') << fixed3(s.mean)
          << " (" << fixed3(s.sd) << ")\n";
    }
  }
  return out.str();
}

SyntheticDataset replication_dataset(const ExperimentConfig& cfg, int rep) {
  if (!cfg.setting) throw ConfigError("a simulation setting is required");
  SettingSpec spec = *cfg.setting;
  spec.seed = stream_seed(cfg.seed, {stream::kDataset, static_cast<std::uint64_t>(rep)});
  return generate(spec);
}

std::vector<ReportRow> run_all(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.setting) throw ConfigError("run-all needs a simulation setting");
  const SettingSpec& spec = *cfg.setting;
  const auto n_alg = cfg.algorithms.size();
  std::vector<ReportRow> rows(static_cast<std::size_t>(cfg.reps) * n_alg);

  // One task per replication: the tuned step is shared by all algorithms.
  parallel_for(static_cast<std::size_t>(cfg.reps), cfg.workers, [&](std::size_t i) {
    const int rep = static_cast<int>(i) + 1;
    const auto urep = static_cast<std::uint64_t>(rep);
    const SyntheticDataset sim = replication_dataset(cfg, rep);
    const Dataset data = from_synthetic(sim);
    const RrrProblem prob = make_problem(sim.design, sim.obs, cfg.model);
    const TunedStep step =
        resolve_step(prob, cfg.fit, stream_seed(cfg.seed, {stream::kTuning, urep}));
    const Matrix truth = sim.design * sim.coef;
    for (std::size_t a = 0; a < n_alg; ++a) {
      const Algorithm alg = cfg.algorithms[a];
      const auto chain_seed =
          stream_seed(cfg.seed, {stream::kChain, urep, static_cast<std::uint64_t>(alg)});
      const FitResult fit = fit_model(prob, alg, cfg.fit, step, chain_seed);
      ReportRow& row = rows[i * n_alg + a];
      row.setting = to_string(spec.setting);
      row.method = method_label(alg);
      row.theta = spec.missing_rate;
      row.rho_x = spec.rho_x;
      row.rep = rep;
      row.result = score(data, fit.summary, truth);
      if (alg == Algorithm::kLmc) row.result.acceptance_rate.reset();
      row.result.wall_time_s = fit.wall_time_s;
      row.step_size = fit.summary.step_size;
      row.alpha = step.alpha;
      row.restarts = fit.restarts;
    }
  });
  return rows;
}

Index numerical_rank(const Matrix& a, double tol) {
  if (a.size() == 0) return 0;
  const Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return r;
}

std::vector<BoundRow> bound_rows(const ExperimentConfig& cfg, const csv::Table* report) {
  cfg.validate();
  std::map<int, double> est_by_rep;
  if (report) {
    const auto rep_col = report->column("rep");
    const auto est_col = report->column("est");
    std::optional<std::size_t> method_col;
    for (std::size_t c = 0; c < report->header.size(); ++c)
      if (report->header[c] == "method") method_col = c;
    const std::string want = method_label(cfg.algorithms.front());
    for (const auto& row : report->rows) {
      if (method_col && row[*method_col] != want) continue;
      if (row[est_col].empty()) continue;
      est_by_rep[std::stoi(row[rep_col])] = csv::parse_double(row[est_col]);
    }
  }

  auto make_row = [&](int rep, const Matrix& design, const Matrix& coef_star,
                      const ObservationSet& obs) {
    BoundRow b;
    b.rep = rep;
    b.inputs.sigma = cfg.model.sigma;
    b.inputs.xi = cfg.model.xi;
    b.inputs.clamp = cfg.model.clamp.value_or(default_clamp(obs));
    b.inputs.n = cfg.bound.n_override.value_or(static_cast<double>(obs.size()));
    b.inputs.m = design.cols();
    b.inputs.p = coef_star.cols();
    b.inputs.x_frob = design.norm();
    b.inputs.rank = numerical_rank(coef_star);
    b.inputs.mbar_frob = b.inputs.rank > 0 ? coef_star.norm() : 0.0;
    b.inputs.delta = cfg.bound.delta;
    b.inputs.epsilon = cfg.bound.epsilon;
    b.constants = constants(b.inputs);
    b.bound = oracle_bound_rhs(b.inputs, b.constants, 0.0);
    if (auto it = est_by_rep.find(rep); it != est_by_rep.end()) {
      b.est = it->second;
      b.violated = it->second > b.bound;
    }
    return b;
  };

  std::vector<BoundRow> rows;
  if (cfg.setting) {
    for (int rep = 1; rep <= cfg.reps; ++rep) {
      const SyntheticDataset sim = replication_dataset(cfg, rep);
      rows.push_back(make_row(rep, sim.design, sim.coef, sim.obs));
    }
  } else {
    Dataset data = load_dataset(*cfg.data);
    if (!data.coef_star) {
      const fs::path star = cfg.data->z.parent_path() / "M_star.csv";
      if (!fs::exists(star)) throw IoError("bound needs M_star.csv next to Z.csv");
      data.coef_star = csv::read_matrix(star).values;
    }
    rows.push_back(make_row(1, data.design, *data.coef_star, data.observations()));
  }
  return rows;
}

csv::Table bound_table(const std::vector<BoundRow>& rows) {
  csv::Table t;
  t.header = {"rep", "n", "m", "p", "rank", "x_frob", "mstar_frob", "C", "sigma", "xi",
              "delta", "epsilon", "C1", "C2", "tau_star", "lambda_star", "bound", "est",
              "violated"};
  for (const auto& b : rows) {
    const auto& in = b.inputs;
    t.rows.push_back({std::to_string(b.rep), csv::format_double(in.n), std::to_string(in.m),
                      std::to_string(in.p), std::to_string(in.rank),
                      csv::format_double(in.x_frob), csv::format_double(in.mbar_frob),
                      csv::format_double(in.clamp), csv::format_double(in.sigma),
                      csv::format_double(in.xi), csv::format_double(in.delta),
                      csv::format_double(in.epsilon), csv::format_double(b.constants.c1),
                      csv::format_double(b.constants.c2), csv::format_double(b.constants.tau_star),
                      csv::format_double(b.constants.lambda_star), csv::format_double(b.bound),
                      b.est ? csv::format_double(*b.est) : "", b.est ? (b.violated ? "1" : "0") : ""});
  }
  return t;
}

void write_reports(const fs::path& dir, const std::vector<ReportRow>& rows) {
  csv::write_table(dir / "report.csv", report_table(rows));
  csv::write_table(dir / "aggregate.csv", aggregate_table(rows));
  csv::write_text(dir / "summary.txt", summary_text(rows));
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const ExperimentConfig& cfg) {
  json m;
  m["command"] = command;
  m["config"] = json::parse(config_to_json(cfg));
  csv::write_text(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace brrr
