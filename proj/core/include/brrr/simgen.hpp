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

// Synthetic reduced-rank regression data with a partially observed response:
//   X rows ~ N(0, (1 - rho) I + rho 11^T)
//   M* = M2 M1^T   (M1: p x r orthonormal columns, M2: m x r standard normal)
//        Setting III: 2 M2 M1^T + small Gaussian perturbation
//   Z  = 1 + X M* + E, E Gaussian or Student t with 3 degrees of freedom
// and a uniformly random observation pattern with or without replacement.

#include <cstdint>
#include <string>
#include <vector>

#include "brrr/model.hpp"
#include "brrr/rng.hpp"

namespace brrr {

enum class Setting { kI, kII, kIII, kIV };
enum class NoiseKind { kGaussian, kStudentT3, kNone };

const char* to_string(Setting s) noexcept;
Setting parse_setting(const std::string& name);
const char* to_string(NoiseKind k) noexcept;
NoiseKind parse_noise(const std::string& name);

struct SettingSpec {
  Setting setting = Setting::kI;
  Index ell = 100;
  Index m = 12;
  Index p = 8;
  Index rank = 2;
  double rho_x = 0.0;
  double missing_rate = 0.2;  // fraction of the ell x p cells left unobserved
  bool with_replacement = false;
  bool intercept = true;      // all-ones ell x p offset in Z
  NoiseKind noise = NoiseKind::kGaussian;
  bool approx_low_rank = false;
  double approx_lowrank_sd = 0.1;
  std::uint64_t seed = 0;

  // Paper defaults for each setting; rho_x, missing rate and seed are left
  // at their defaults.
  static SettingSpec preset(Setting s);

  Index observed_count() const;
  void validate() const;
};

struct SyntheticDataset {
  Matrix design;   // ell x m
  Matrix coef;     // M*, m x p
  Matrix response; // Z, ell x p, fully populated
  ObservationSet obs;
  std::vector<std::pair<Index, Index>> heldout;  // cells never observed, column-major order
};

Matrix gen_design(const SettingSpec& spec, Engine& rng);
Matrix gen_coef(const SettingSpec& spec, Engine& rng);
Matrix gen_response(const SettingSpec& spec, const Matrix& design, const Matrix& coef,
                    Engine& rng);

struct Mask {
  std::vector<std::pair<Index, Index>> observed;  // with multiplicity
  std::vector<std::pair<Index, Index>> heldout;
};
Mask gen_mask(const SettingSpec& spec, Engine& rng);

// Builds the whole dataset from spec.seed, with one independent stream per
// component so that, e.g., changing the mask mode leaves X, M* and Z intact.
SyntheticDataset generate(const SettingSpec& spec);

// Observations of `response` at the mask positions.
ObservationSet observe(const Matrix& response, const std::vector<std::pair<Index, Index>>& cells,
                       bool with_replacement);

}  // namespace brrr
