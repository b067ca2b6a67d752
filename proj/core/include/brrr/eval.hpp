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

// Error metrics, credible-interval coverage and replication aggregation.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brrr/model.hpp"
#include "brrr/sampler.hpp"

namespace brrr {

// ||X M* - X M_hat||_F^2 / (ell p)
double est_error(const Matrix& design, const Matrix& coef_star, const Matrix& coef_hat);

// Same normalization for two fitted surfaces (e.g. a reference fit against
// the truncated posterior mean).
double surface_error(const Matrix& reference, const Matrix& fitted);

// Mean of (Z_ij - (X M_hat)_ij)^2 over the held-out cells. Cells flagged
// false in `valid` (e.g. missing in the raw data) are skipped.
double pred_error(const Matrix& response, const Matrix& design, const Matrix& coef_hat,
                  const std::vector<std::pair<Index, Index>>& heldout,
                  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>* valid = nullptr);

// Fraction of cells with lower_ij <= truth_ij <= upper_ij.
double coverage_rate(const Matrix& lower, const Matrix& upper, const Matrix& truth);
// Coverage of X M* by the 95% equal-tailed intervals of the summary.
double coverage_rate(const PosteriorSummary& summary, const Matrix& design,
                     const Matrix& coef_star);

// Mean width of the 95% equal-tailed intervals.
double mean_interval_width(const PosteriorSummary& summary);

struct ReplicationResult {
  double est = 0.0;
  double pred = 0.0;
  double mse = 0.0;     // error of the truncated posterior mean of X M
  double ecovr = 0.0;
  std::optional<double> acceptance_rate;
  double wall_time_s = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; NaN for a single value
  double se = 0.0;  // sd / sqrt(count)
};

struct AggregateReport {
  std::size_t count = 0;
  MetricSummary est, pred, mse, ecovr;
  std::optional<MetricSummary> acceptance_rate;
};

MetricSummary summarize(const std::vector<double>& values);
AggregateReport aggregate(const std::vector<ReplicationResult>& results);

}  // namespace brrr
