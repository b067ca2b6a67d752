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

// brrr: simulate, fit, evaluate, bound and run-all for quasi-Bayesian
// reduced-rank regression with an incomplete response.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "brrr/errors.hpp"
#include "brrr/experiment.hpp"
#include "brrr/rng.hpp"

namespace {

using namespace brrr;
using nlohmann::json;

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kDivergence = 3, kIoError = 4 };

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> setting;
  std::optional<double> theta;
  std::optional<double> rho_x;
  std::vector<std::string> algorithms;
  std::optional<std::string> lambda;
  std::optional<double> tau2;
  std::optional<std::int64_t> iterations;
  std::optional<std::int64_t> burn_in;
  std::optional<double> step_alpha;
  std::optional<double> step_size;
  bool auto_tune = false;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  bool with_replacement = false;
  bool standardize = false;

  // Subcommand inputs.
  std::optional<std::string> data;
  std::optional<std::string> x;
  std::optional<std::string> z;
  std::optional<std::string> mask;
  std::optional<std::string> fit_dir;
  std::optional<std::string> reference;
  std::optional<std::string> report;
  bool ols = false;
  bool no_est = false;
  std::optional<double> n_override;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config or manifest; flags override it");
  app->add_option("--setting", f.setting, "Simulation setting")
      ->check(CLI::IsMember({"I", "II", "III", "IV", "1", "2", "3", "4"}));
  app->add_option("--theta", f.theta, "Missing rate in [0, 1)");
  app->add_option("--rho-x", f.rho_x, "Design correlation");
  app->add_option("--algorithm", f.algorithms, "lmc and/or mala")->delimiter(',');
  app->add_option("--lambda", f.lambda, "Learning rate: number, n, n/K or Kn");
  app->add_option("--tau2", f.tau2, "Prior scale tau^2");
  app->add_option("--iterations", f.iterations, "Chain length T");
  app->add_option("--burn-in", f.burn_in, "Discarded iterations");
  app->add_option("--step-alpha", f.step_alpha, "Step size h = (pm)^-alpha");
  app->add_option("--step-size", f.step_size, "Explicit step size h");
  app->add_flag("--auto-tune", f.auto_tune, "Search alpha by MALA pilot acceptance");
  app->add_option("--reps", f.reps, "Replications");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--workers", f.workers, "Worker threads");
  app->add_option("--out", f.out, "Output directory");
  app->add_flag("--with-replacement", f.with_replacement, "Sample observed cells with replacement");
  app->add_flag("--standardize", f.standardize, "Standardize input columns");
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig cfg;
  if (f.config) cfg = config_from_json(csv::read_text(*f.config));
  if (f.setting) {
    const Setting s = parse_setting(*f.setting);
    const SettingSpec base = cfg.setting.value_or(SettingSpec{});
    cfg.setting = SettingSpec::preset(s);
    cfg.setting->rho_x = base.rho_x;
    cfg.setting->missing_rate = base.missing_rate;
    cfg.setting->with_replacement = base.with_replacement;
    cfg.data.reset();
  }
  if (f.theta || f.rho_x || f.with_replacement) {
    if (!cfg.setting) cfg.setting = SettingSpec{};
    if (f.theta) cfg.setting->missing_rate = *f.theta;
    if (f.rho_x) cfg.setting->rho_x = *f.rho_x;
    if (f.with_replacement) cfg.setting->with_replacement = true;
  }
  if (f.x || f.z || f.mask) {
    DataPaths paths = cfg.data.value_or(DataPaths{});
    if (f.x) paths.x = *f.x;
    if (f.z) paths.z = *f.z;
    if (f.mask) paths.mask = fs::path(*f.mask);
    cfg.data = paths;
  }
  if (f.standardize && cfg.data) cfg.data->standardize = true;
  if (!f.algorithms.empty()) {
    cfg.algorithms.clear();
    for (const auto& a : f.algorithms) cfg.algorithms.push_back(parse_algorithm(a));
  }
  if (f.lambda) parse_lambda(*f.lambda, cfg.model);
  if (f.tau2) cfg.model.tau2 = *f.tau2;
  if (f.iterations) cfg.fit.iterations = *f.iterations;
  if (f.burn_in) cfg.fit.burn_in = *f.burn_in;
  if (f.auto_tune) {
    cfg.fit.step_alpha.reset();
    cfg.fit.step_size.reset();
  }
  if (f.step_alpha) {
    cfg.fit.step_alpha = *f.step_alpha;
    cfg.fit.step_size.reset();
  }
  if (f.step_size) cfg.fit.step_size = *f.step_size;
  if (f.reps) cfg.reps = *f.reps;
  if (f.seed) cfg.seed = *f.seed;
  if (f.workers) cfg.workers = *f.workers;
  if (f.out) cfg.out = *f.out;
  if (f.n_override) cfg.bound.n_override = *f.n_override;
  return cfg;
}

void require_file_input(const Flags& f, const ExperimentConfig& cfg) {
  if (f.standardize && !cfg.data && !f.data)
    throw ConfigError("--standardize applies to file inputs only (--data, --x/--z)");
}

// Validation for commands that read data from disk rather than simulate.
void validate_sampling(const ExperimentConfig& cfg) {
  ExperimentConfig probe = cfg;
  if (!probe.setting && !probe.data) probe.setting = SettingSpec{};
  if (probe.setting && probe.data) probe.data.reset();
  probe.validate();
}

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

int cmd_simulate(const Flags& f) {
  ExperimentConfig cfg = resolve(f);
  if (f.standardize) throw ConfigError("--standardize applies to file inputs only");
  if (!cfg.setting) cfg.setting = SettingSpec{};
  cfg.data.reset();
  cfg.validate();
  for (int rep = 1; rep <= cfg.reps; ++rep) {
    const fs::path dir = cfg.reps == 1 ? cfg.out : cfg.out / ("rep_" + std::to_string(rep));
    write_dataset(dir, from_synthetic(replication_dataset(cfg, rep)));
  }
  write_manifest(cfg.out, "simulate", cfg);
  std::cout << "wrote " << cfg.reps << " dataset(s) to " << cfg.out.string() << "\n";
  return kOk;
}

Dataset fit_input(const Flags& f, ExperimentConfig& cfg) {
  if (f.data) {
    const fs::path dir = *f.data;
    DataPaths paths;
    paths.x = dir / "X.csv";
    paths.z = dir / "Z.csv";
    if (fs::exists(dir / "mask.csv")) paths.mask = dir / "mask.csv";
    if (fs::exists(dir / "Z_full.csv")) paths.z_full = dir / "Z_full.csv";
    paths.standardize = f.standardize;
    cfg.setting.reset();
    cfg.data = paths;
  }
  if (cfg.data) return load_dataset(*cfg.data);
  require_file_input(f, cfg);
  if (!cfg.setting) throw ConfigError("fit needs --data DIR, data paths in the config, or --setting");
  return from_synthetic(replication_dataset(cfg, 1));
}

void write_fit(const fs::path& dir, const Dataset& data, const FitResult& fit,
               const TunedStep& step, Algorithm alg, const ExperimentConfig& cfg,
               std::uint64_t seed) {
  const auto& s = fit.summary;
  csv::write_matrix(dir / "M_hat.csv", s.mean_coef, "y");
  csv::write_matrix(dir / "fitted.csv", s.mean_fitted, "y");
  for (std::size_t q = 0; q < s.quantile_levels.size(); ++q) {
    const double level = s.quantile_levels[q];
    std::string name = level == 0.025   ? "lower"
                       : level == 0.975 ? "upper"
                                        : "quantile_" + csv::format_double(level);
    csv::write_matrix(dir / (name + ".csv"), s.quantiles[q], "y");
  }
  json run = {{"algorithm", to_string(alg)},
              {"acceptance_rate", alg == Algorithm::kMala ? json(s.acceptance_rate) : json(nullptr)},
              {"step_size", s.step_size},
              {"alpha", std::isnan(step.alpha) ? json(nullptr) : json(step.alpha)},
              {"tuning_acceptance",
               std::isnan(step.acceptance) ? json(nullptr) : json(step.acceptance)},
              {"tuning_in_window", step.in_window},
              {"iterations", cfg.fit.iterations},
              {"burn_in", cfg.fit.burn_in},
              {"n_samples", s.n_samples},
              {"restarts", fit.restarts},
              {"lambda", fit.lambda},
              {"tau2", cfg.model.tau2},
              {"clamp", fit.clamp},
              {"n", fit.n},
              {"quantile_levels", s.quantile_levels},
              {"seed", cfg.seed},
              {"chain_seed", seed},
              {"wall_time_s", fit.wall_time_s},
              {"ell", data.design.rows()},
              {"m", data.design.cols()},
              {"p", data.response.cols()}};
  csv::write_text(dir / "run.json", run.dump(2) + "\n");
}

int cmd_fit(const Flags& f) {
  ExperimentConfig cfg = resolve(f);
  validate_sampling(cfg);
  const Dataset data = fit_input(f, cfg);
  const ObservationSet obs = data.observations();
  const RrrProblem prob = make_problem(data.design, obs, cfg.model);
  const TunedStep step = resolve_step(prob, cfg.fit, stream_seed(cfg.seed, {stream::kTuning, 1}));
  for (const Algorithm alg : cfg.algorithms) {
    const auto seed =
        stream_seed(cfg.seed, {stream::kChain, 1, static_cast<std::uint64_t>(alg)});
    FitResult fit;
    try {
      fit = fit_model(prob, alg, cfg.fit, step, seed);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + "; halve h and restart (e.g. --step-alpha " +
                                csv::format_double((std::isnan(step.alpha) ? 1.0 : step.alpha) +
                                                   0.25) +
                                ")",
                            e.iteration(), e.sup_norm());
    }
    const fs::path dir = cfg.algorithms.size() == 1 ? cfg.out : cfg.out / to_string(alg);
    write_fit(dir, data, fit, step, alg, cfg, seed);
    std::cout << to_string(alg) << ": h = " << csv::format_double(fit.summary.step_size)
              << ", acceptance = " << csv::format_double(fit.summary.acceptance_rate)
              << ", restarts = " << fit.restarts << " -> " << dir.string() << "\n";
  }
  write_manifest(cfg.out, "fit", cfg);
  return kOk;
}

PosteriorSummary load_summary(const fs::path& dir) {
  PosteriorSummary s;
  s.mean_coef = csv::read_matrix(dir / "M_hat.csv").values;
  s.mean_fitted = csv::read_matrix(dir / "fitted.csv").values;
  if (fs::exists(dir / "lower.csv") && fs::exists(dir / "upper.csv")) {
    s.quantile_levels = {0.025, 0.975};
    s.quantiles = {csv::read_matrix(dir / "lower.csv").values,
                   csv::read_matrix(dir / "upper.csv").values};
  }
  if (fs::exists(dir / "run.json")) {
    try {
      const json run = json::parse(csv::read_text(dir / "run.json"));
      if (run.contains("acceptance_rate") && !run["acceptance_rate"].is_null())
        s.acceptance_rate = run["acceptance_rate"].get<double>();
      s.step_size = run.value("step_size", 0.0);
    } catch (const json::exception& e) {
      throw IoError((dir / "run.json").string() + ": " + e.what());
    }
  }
  return s;
}

int cmd_evaluate(const Flags& f) {
  ExperimentConfig cfg = resolve(f);
  if (!f.fit_dir) throw ConfigError("evaluate needs --fit DIR");
  const fs::path fit_dir = *f.fit_dir;
  Dataset data;
  if (f.data) {
    data = load_dataset(fs::path(*f.data));
  } else if (cfg.data) {
    data = load_dataset(*cfg.data);
  } else {
    throw ConfigError("evaluate needs --data DIR or data paths in the config");
  }
  const PosteriorSummary summary = load_summary(fit_dir);

  std::optional<Matrix> reference;
  if (f.no_est) {
  } else if (f.reference) {
    reference = csv::read_matrix(*f.reference).values;
  } else if (f.ols) {
    const Matrix& full = data.response_full ? *data.response_full : data.response;
    reference = data.design * ols_fit(data.design, full);
  } else if (data.coef_star) {
    reference = data.design * *data.coef_star;
  }
  if (reference && (reference->rows() != data.response.rows() ||
                    reference->cols() != data.response.cols()))
    throw ConfigError("reference surface shape does not match Z");

  ReportRow row;
  row.result = score(data, summary, reference);
  row.setting = "data";
  row.theta = static_cast<double>(data.heldout().size()) / static_cast<double>(data.response.size());
  row.rho_x = std::numeric_limits<double>::quiet_NaN();
  row.method = "MALA";
  row.step_size = summary.step_size;
  row.alpha = std::numeric_limits<double>::quiet_NaN();
  if (fs::exists(fit_dir / "run.json")) {
    const json run = json::parse(csv::read_text(fit_dir / "run.json"));
    row.method = run.value("algorithm", "mala") == "lmc" ? "LMC" : "MALA";
    if (run.contains("alpha") && !run["alpha"].is_null()) row.alpha = run["alpha"].get<double>();
    row.restarts = run.value("restarts", 0);
    if (row.method == "LMC") row.result.acceptance_rate.reset();
  }
  const fs::path data_dir = f.data ? fs::path(*f.data) : cfg.data->z.parent_path();
  if (fs::exists(data_dir / "manifest.json")) {
    const ExperimentConfig sim = config_from_json(csv::read_text(data_dir / "manifest.json"));
    if (sim.setting) {
      row.setting = to_string(sim.setting->setting);
      row.rho_x = sim.setting->rho_x;
      row.theta = sim.setting->missing_rate;
    }
  }
  write_reports(cfg.out, {row});
  write_manifest(cfg.out, "evaluate", cfg);
  std::cout << summary_text({row});
  return kOk;
}

int cmd_bound(const Flags& f) {
  ExperimentConfig cfg = resolve(f);
  require_file_input(f, cfg);
  if (!cfg.setting && !cfg.data) cfg.setting = SettingSpec{};
  std::optional<csv::Table> report;
  if (f.report) report = csv::read_table(*f.report);
  const auto rows = bound_rows(cfg, report ? &*report : nullptr);
  const csv::Table t = bound_table(rows);
  csv::write_table(cfg.out / "bound.csv", t);
  write_manifest(cfg.out, "bound", cfg);
  const auto& k = rows.front().constants;
  std::cout << "C1 = " << csv::format_double(k.c1) << "  C2 = " << csv::format_double(k.c2)
            << "  tau* = " << csv::format_double(k.tau_star)
            << "  lambda* = " << csv::format_double(k.lambda_star) << "\n";
  int violations = 0;
  for (const auto& b : rows) {
    std::cout << "rep " << b.rep << "  bound " << csv::format_double(b.bound);
    if (b.est) std::cout << "  est " << csv::format_double(*b.est) << (b.violated ? "  VIOLATED" : "");
    std::cout << "\n";
    violations += b.violated ? 1 : 0;
  }
  if (report) std::cout << violations << " of " << rows.size() << " replications violate the bound\n";
  return kOk;
}

int cmd_run_all(const Flags& f) {
  ExperimentConfig cfg = resolve(f);
  if (f.standardize) throw ConfigError("--standardize applies to file inputs only");
  if (!cfg.setting) cfg.setting = SettingSpec{};
  cfg.data.reset();
  cfg.validate();
  const double t0 = now_s();
  const auto rows = run_all(cfg);
  write_reports(cfg.out, rows);
  write_manifest(cfg.out, "run-all", cfg);
  json timings = json::array();
  for (const auto& r : rows)
    timings.push_back({{"rep", r.rep}, {"method", r.method}, {"wall_time_s", r.result.wall_time_s}});
  csv::write_text(cfg.out / "timings.json",
                  json{{"total_s", now_s() - t0}, {"fits", timings}}.dump(2) + "\n");
  std::cout << summary_text(rows);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-Bayesian reduced-rank regression with an incomplete response"};
  app.require_subcommand(1);
  Flags f;

  auto* sim = app.add_subcommand("simulate", "Generate synthetic datasets");
  auto* fit = app.add_subcommand("fit", "Run the Langevin sampler on a dataset");
  auto* eval = app.add_subcommand("evaluate", "Score a fit against truth or a reference");
  auto* bound = app.add_subcommand("bound", "Evaluate the oracle bound");
  auto* all = app.add_subcommand("run-all", "Simulate, fit and score every replication");
  for (auto* sub : {sim, fit, eval, bound, all}) add_common(sub, f);
  for (auto* sub : {fit, eval}) {
    sub->add_option("--data", f.data, "Dataset directory (X.csv, Z.csv, mask.csv, ...)");
    sub->add_option("--x", f.x, "Design CSV");
    sub->add_option("--z", f.z, "Response CSV with NA cells");
    sub->add_option("--mask", f.mask, "Observation count CSV");
  }
  eval->add_option("--fit", f.fit_dir, "Directory written by fit")->required();
  eval->add_option("--reference", f.reference, "Reference surface CSV for est");
  eval->add_flag("--ols", f.ols, "Use an OLS fit on the complete response as reference");
  eval->add_flag("--no-est", f.no_est, "Omit est, mse and ecovr");
  bound->add_option("--report", f.report, "report.csv with realized est per rep");
  bound->add_option("--n-override", f.n_override, "Override the observation count n");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*sim) return cmd_simulate(f);
    if (*fit) return cmd_fit(f);
    if (*eval) return cmd_evaluate(f);
    if (*bound) return cmd_bound(f);
    if (*all) return cmd_run_all(f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
