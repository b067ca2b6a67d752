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

#include "brrr/simgen.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "brrr/errors.hpp"

namespace brrr {

namespace {

Matrix normal_matrix(Index rows, Index cols, double sd, Engine& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = normal(rng);
  return a;
}

}  // namespace

const char* to_string(Setting s) noexcept {
  switch (s) {
    case Setting::kI: return "I";
    case Setting::kII: return "II";
    case Setting::kIII: return "III";
    case Setting::kIV: return "IV";
  }
  return "?";
}

Setting parse_setting(const std::string& name) {
  if (name == "I" || name == "1") return Setting::kI;
  if (name == "II" || name == "2") return Setting::kII;
  if (name == "III" || name == "3") return Setting::kIII;
  if (name == "IV" || name == "4") return Setting::kIV;
  throw ConfigError("unknown setting '" + name + "' (expected I, II, III or IV)");
}

const char* to_string(NoiseKind k) noexcept {
  switch (k) {
    case NoiseKind::kGaussian: return "gaussian";
    case NoiseKind::kStudentT3: return "student_t3";
    case NoiseKind::kNone: return "none";
  }
  return "?";
}

NoiseKind parse_noise(const std::string& name) {
  if (name == "gaussian" || name == "gaussian_unit") return NoiseKind::kGaussian;
  if (name == "student_t3" || name == "t3") return NoiseKind::kStudentT3;
  if (name == "none") return NoiseKind::kNone;
  throw ConfigError("unknown noise '" + name + "'");
}

SettingSpec SettingSpec::preset(Setting s) {
  SettingSpec spec;
  spec.setting = s;
  switch (s) {
    case Setting::kI:
      break;
    case Setting::kII:
      spec.ell = 500;
      spec.m = 40;
      spec.p = 40;
      break;
    case Setting::kIII:
      spec.approx_low_rank = true;
      break;
    case Setting::kIV:
      spec.noise = NoiseKind::kStudentT3;
      break;
  }
  return spec;
}

Index SettingSpec::observed_count() const {
  return static_cast<Index>(
      std::llround((1.0 - missing_rate) * static_cast<double>(ell * p)));
}

void SettingSpec::validate() const {
  if (ell < 1 || m < 1 || p < 1) throw InvalidInput("dimensions must be positive");
  if (rank < 1 || rank > std::min(m, p)) throw InvalidInput("rank must lie in [1, min(m, p)]");
  if (!(rho_x >= 0.0 && rho_x < 1.0)) throw InvalidInput("rho_x must lie in [0, 1)");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0))
    throw InvalidInput("missing rate must lie in [0, 1)");
  if (observed_count() < 1) throw InvalidInput("missing rate leaves no observed entry");
  if (!(approx_lowrank_sd >= 0.0)) throw InvalidInput("perturbation sd must be >= 0");
}

Matrix gen_design(const SettingSpec& spec, Engine& rng) {
  if (!(spec.rho_x >= 0.0 && spec.rho_x < 1.0)) throw InvalidInput("rho_x must lie in [0, 1)");
  const Matrix z = normal_matrix(spec.ell, spec.m, 1.0, rng);
  if (spec.rho_x == 0.0) return z;
  // Symmetric root of (1 - rho) I + rho 11^T has the form a I + b 11^T.
  const double m = static_cast<double>(spec.m);
  const double a = std::sqrt(1.0 - spec.rho_x);
  const double b = (std::sqrt(1.0 - spec.rho_x + spec.rho_x * m) - a) / m;
  return a * z + (b * z.rowwise().sum()) * Eigen::RowVectorXd::Ones(spec.m);
}

Matrix gen_coef(const SettingSpec& spec, Engine& rng) {
  if (spec.rank < 1 || spec.rank > std::min(spec.m, spec.p))
    throw InvalidInput("rank must lie in [1, min(m, p)]");
  const Matrix g = normal_matrix(spec.p, spec.rank, 1.0, rng);
  const Matrix m1 = Eigen::HouseholderQR<Matrix>(g).householderQ() *
                    Matrix::Identity(spec.p, spec.rank);
  const Matrix m2 = normal_matrix(spec.m, spec.rank, 1.0, rng);
  Matrix coef = m2 * m1.transpose();
  if (spec.approx_low_rank) {
    coef *= 2.0;
    coef += normal_matrix(spec.m, spec.p, spec.approx_lowrank_sd, rng);
  }
  return coef;
}

Matrix gen_response(const SettingSpec& spec, const Matrix& design, const Matrix& coef,
                    Engine& rng) {
  if (design.cols() != coef.rows()) throw InvalidInput("design and coefficient shapes differ");
  Matrix z = design * coef;
  if (spec.intercept) z.array() += 1.0;
  switch (spec.noise) {
    case NoiseKind::kGaussian:
      z += normal_matrix(z.rows(), z.cols(), 1.0, rng);
      break;
    case NoiseKind::kStudentT3: {
      std::student_t_distribution<double> t3(3.0);
      for (Index j = 0; j < z.cols(); ++j)
        for (Index i = 0; i < z.rows(); ++i) z(i, j) += t3(rng);
      break;
    }
    case NoiseKind::kNone:
      break;
  }
  return z;
}

Mask gen_mask(const SettingSpec& spec, Engine& rng) {
  spec.validate();
  const Index cells = spec.ell * spec.p;
  const Index n = spec.observed_count();
  auto cell = [&](Index k) { return std::pair<Index, Index>{k % spec.ell, k / spec.ell}; };

  Mask mask;
  std::vector<char> hit(static_cast<std::size_t>(cells), 0);
  if (spec.with_replacement) {
    std::uniform_int_distribution<Index> pick(0, cells - 1);
    for (Index i = 0; i < n; ++i) {
      const Index k = pick(rng);
      hit[static_cast<std::size_t>(k)] = 1;
      mask.observed.push_back(cell(k));
    }
  } else {
    // Partial Fisher-Yates: the first n slots form a uniform n-subset.
    std::vector<Index> order(static_cast<std::size_t>(cells));
    std::iota(order.begin(), order.end(), Index{0});
    for (Index i = 0; i < n; ++i) {
      std::uniform_int_distribution<Index> pick(i, cells - 1);
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(pick(rng))]);
    }
    std::sort(order.begin(), order.begin() + n);
    for (Index i = 0; i < n; ++i) {
      hit[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
      mask.observed.push_back(cell(order[static_cast<std::size_t>(i)]));
    }
  }
  for (Index k = 0; k < cells; ++k)
    if (!hit[static_cast<std::size_t>(k)]) mask.heldout.push_back(cell(k));
  return mask;
}

ObservationSet observe(const Matrix& response,
                       const std::vector<std::pair<Index, Index>>& cells,
                       bool with_replacement) {
  std::vector<Observation> entries;
  entries.reserve(cells.size());
  for (const auto& [i, j] : cells) entries.push_back({i, j, response(i, j)});
  return ObservationSet(std::move(entries), response.rows(), response.cols(), with_replacement);
}

SyntheticDataset generate(const SettingSpec& spec) {
  spec.validate();
  Engine design_rng = make_engine(spec.seed, {stream::kDesign});
  Engine coef_rng = make_engine(spec.seed, {stream::kCoef});
  Engine noise_rng = make_engine(spec.seed, {stream::kNoise});
  Engine mask_rng = make_engine(spec.seed, {stream::kMask});

  Matrix design = gen_design(spec, design_rng);
  Matrix coef = gen_coef(spec, coef_rng);
  Matrix response = gen_response(spec, design, coef, noise_rng);
  Mask mask = gen_mask(spec, mask_rng);
  ObservationSet obs = observe(response, mask.observed, spec.with_replacement);
  return {std::move(design), std::move(coef), std::move(response), std::move(obs),
          std::move(mask.heldout)};
}

}  // namespace brrr
