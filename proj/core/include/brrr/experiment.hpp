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

// Experiment orchestration behind the command-line tool: configuration,
// dataset files, fitting with restart-on-divergence, scoring, replication
// fan-out and report tables.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "brrr/csv.hpp"
#include "brrr/eval.hpp"
#include "brrr/model.hpp"
#include "brrr/prior.hpp"
#include "brrr/sampler.hpp"
#include "brrr/simgen.hpp"
#include "brrr/theory.hpp"

namespace brrr {

namespace fs = std::filesystem;

struct ModelOptions {
  std::optional<double> lambda;  // absolute value; overrides lambda_factor
  double lambda_factor = 0.5;    // lambda = factor * n
  double tau2 = 10.0;
  std::optional<double> clamp;   // default: 10 max |Y_i|
  double sigma = 1.0;
  double xi = 1.0;
};

// Accepts "n", "n/8", "2n", "0.5n" or a plain number.
void parse_lambda(const std::string& text, ModelOptions& model);

struct FitOptions {
  std::int64_t iterations = 5000;
  std::int64_t burn_in = 2000;
  std::int64_t thin = 5;
  std::vector<double> quantiles{0.025, 0.975};
  std::optional<double> step_size;   // explicit h
  std::optional<double> step_alpha;  // h = (pm)^{-alpha}
  StepSearch search;                 // used when neither is given
  int max_restarts = 3;              // halvings of h after a divergence
  PriorSolver prior_solver = PriorSolver::kAuto;
  double ridge_tol = 1e-8;
};

struct DataPaths {
  fs::path x;
  fs::path z;
  std::optional<fs::path> mask;    // observation counts; default: non-NA cells of Z once
  std::optional<fs::path> z_full;  // complete response for held-out scoring
  bool standardize = false;
};

struct BoundOptions {
  double delta = 1.0;
  double epsilon = 0.05;
  std::optional<double> n_override;
};

struct ExperimentConfig {
  std::optional<SettingSpec> setting;
  std::optional<DataPaths> data;
  std::vector<Algorithm> algorithms{Algorithm::kMala};
  ModelOptions model;
  FitOptions fit;
  BoundOptions bound;
  int reps = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  fs::path out = "out";

  // Throws ConfigError.
  void validate() const;
};

std::string config_to_json(const ExperimentConfig& cfg);
// Parses a config document, or a manifest carrying one under "config".
// Keys absent from the document keep their value in `base`.
ExperimentConfig config_from_json(const std::string& text, ExperimentConfig base = {});

// A response matrix with its observation pattern, plus truth when known.
struct Dataset {
  Matrix design;
  Matrix response;          // NaN at unobserved cells
  Eigen::MatrixXi counts;   // times each cell was observed
  bool with_replacement = false;
  std::optional<Matrix> response_full;
  std::optional<Matrix> coef_star;

  ObservationSet observations() const;
  std::vector<std::pair<Index, Index>> heldout() const;  // count == 0
};

Dataset from_synthetic(const SyntheticDataset& data);
void write_dataset(const fs::path& dir, const Dataset& data);
Dataset load_dataset(const fs::path& dir);
Dataset load_dataset(const DataPaths& paths);

// Columns to zero mean and unit sample variance; the response uses its
// present cells only.
void standardize_columns(Matrix& a, const csv::BoolArray* present = nullptr);

// Least squares X B = Z on a complete response.
Matrix ols_fit(const Matrix& design, const Matrix& response);

RrrProblem make_problem(const Matrix& design, const ObservationSet& obs,
                        const ModelOptions& model);

// Step size per the options: explicit h, then alpha, then the MALA search.
TunedStep resolve_step(const RrrProblem& prob, const FitOptions& fit, std::uint64_t seed);

struct FitResult {
  PosteriorSummary summary;
  double lambda = 0.0;
  double tau = 0.0;
  double clamp = 0.0;
  std::size_t n = 0;
  int restarts = 0;
  double wall_time_s = 0.0;
};

// Runs the chain; on DivergenceError halves h and restarts from M_0 up to
// fit.max_restarts times, then rethrows.
FitResult fit_model(const RrrProblem& prob, Algorithm algorithm, const FitOptions& fit,
                    const TunedStep& step, std::uint64_t seed);

// Scores a fit. `reference` is the surface the estimate is compared with
// (X M* for simulations, an OLS fit for real data); metrics that need an
// unavailable input are NaN.
ReplicationResult score(const Dataset& data, const PosteriorSummary& summary,
                        const std::optional<Matrix>& reference);

struct ReportRow {
  std::string setting;
  std::string method;
  double theta = 0.0;
  double rho_x = 0.0;
  int rep = 1;
  ReplicationResult result;
  double step_size = 0.0;
  double alpha = 0.0;  // NaN when h was given directly
  int restarts = 0;
};

csv::Table report_table(const std::vector<ReportRow>& rows);
// One row per (setting, method, theta, rho_x): mean, sd and sd/sqrt(reps).
csv::Table aggregate_table(const std::vector<ReportRow>& rows);
// Text layout "mean (sd)" per metric and method.
std::string summary_text(const std::vector<ReportRow>& rows);

// Dataset of replication `rep` (1-based) of a simulation config.
SyntheticDataset replication_dataset(const ExperimentConfig& cfg, int rep);

// Simulate, fit every configured algorithm and score, for every replication.
// Rows are ordered by (rep, algorithm) regardless of cfg.workers.
std::vector<ReportRow> run_all(const ExperimentConfig& cfg);

struct BoundRow {
  int rep = 1;
  BoundInputs inputs;
  TheoryConstants constants{};
  double bound = 0.0;
  std::optional<double> est;
  bool violated = false;
};

// Corollary-form bound (Mbar = M*, r = rank M*) for every replication of a
// simulation config; `report` supplies realized Est values by rep.
std::vector<BoundRow> bound_rows(const ExperimentConfig& cfg, const csv::Table* report);
csv::Table bound_table(const std::vector<BoundRow>& rows);

// Numerical rank at relative tolerance tol.
Index numerical_rank(const Matrix& a, double tol = 1e-8);

// Writes `rows` as report.csv, aggregate.csv and summary.txt under dir.
void write_reports(const fs::path& dir, const std::vector<ReportRow>& rows);

// Manifest: the resolved config plus command name.
void write_manifest(const fs::path& dir, const std::string& command,
                    const ExperimentConfig& cfg);

}  // namespace brrr
