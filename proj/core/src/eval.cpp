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

#include "brrr/eval.hpp"

#include <cmath>
#include <limits>

#include "brrr/errors.hpp"

namespace brrr {

double surface_error(const Matrix& reference, const Matrix& fitted) {
  if (reference.rows() != fitted.rows() || reference.cols() != fitted.cols())
    throw InvalidInput("fitted surfaces have different shapes");
  return (reference - fitted).squaredNorm() / static_cast<double>(reference.size());
}

double est_error(const Matrix& design, const Matrix& coef_star, const Matrix& coef_hat) {
  if (coef_star.rows() != coef_hat.rows() || coef_star.cols() != coef_hat.cols() ||
      design.cols() != coef_star.rows())
    throw InvalidInput("est_error: inconsistent shapes");
  return surface_error(design * coef_star, design * coef_hat);
}

double pred_error(const Matrix& response, const Matrix& design, const Matrix& coef_hat,
                  const std::vector<std::pair<Index, Index>>& heldout,
                  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>* valid) {
  if (design.rows() != response.rows() || design.cols() != coef_hat.rows() ||
      coef_hat.cols() != response.cols())
    throw InvalidInput("pred_error: inconsistent shapes");
  if (valid && (valid->rows() != response.rows() || valid->cols() != response.cols()))
    throw InvalidInput("pred_error: validity mask has the wrong shape");
  const Matrix fitted = design * coef_hat;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [i, j] : heldout) {
    if (i < 0 || i >= response.rows() || j < 0 || j >= response.cols())
      throw InvalidInput("pred_error: held-out cell outside the grid");
    if (valid && !(*valid)(i, j)) continue;
    const double r = response(i, j) - fitted(i, j);
    sum += r * r;
    ++count;
  }
  if (count == 0) throw InvalidInput("pred_error: no held-out cells to score");
  return sum / static_cast<double>(count);
}

double coverage_rate(const Matrix& lower, const Matrix& upper, const Matrix& truth) {
  if (lower.rows() != truth.rows() || lower.cols() != truth.cols() ||
      upper.rows() != truth.rows() || upper.cols() != truth.cols())
    throw InvalidInput("coverage_rate: inconsistent shapes");
  if (truth.size() == 0) throw InvalidInput("coverage_rate: empty matrices");
  const auto inside = (lower.array() <= truth.array()) && (truth.array() <= upper.array());
  return static_cast<double>(inside.count()) / static_cast<double>(truth.size());
}

double coverage_rate(const PosteriorSummary& summary, const Matrix& design,
                     const Matrix& coef_star) {
  return coverage_rate(summary.quantile(0.025), summary.quantile(0.975), design * coef_star);
}

double mean_interval_width(const PosteriorSummary& summary) {
  return (summary.quantile(0.975) - summary.quantile(0.025)).mean();
}

MetricSummary summarize(const std::vector<double>& values) {
  if (values.empty()) throw InvalidInput("cannot summarize an empty list");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  MetricSummary s{mean, std::numeric_limits<double>::quiet_NaN(),
                  std::numeric_limits<double>::quiet_NaN()};
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.sd = std::sqrt(ss / (n - 1.0));
    s.se = s.sd / std::sqrt(n);
  }
  return s;
}

AggregateReport aggregate(const std::vector<ReplicationResult>& results) {
  if (results.empty()) throw InvalidInput("no replications to aggregate");
  std::vector<double> est, pred, mse, ecovr, acc;
  for (const auto& r : results) {
    est.push_back(r.est);
    pred.push_back(r.pred);
    mse.push_back(r.mse);
    ecovr.push_back(r.ecovr);
    if (r.acceptance_rate) acc.push_back(*r.acceptance_rate);
  }
  AggregateReport out;
  out.count = results.size();
  out.est = summarize(est);
  out.pred = summarize(pred);
  out.mse = summarize(mse);
  out.ecovr = summarize(ecovr);
  if (acc.size() == results.size()) out.acceptance_rate = summarize(acc);
  return out;
}

}  // namespace brrr
