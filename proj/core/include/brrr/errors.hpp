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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace brrr {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by caller-supplied data or configuration.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A factorization or other numerical kernel failed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// An iterative solver hit its iteration cap before reaching tolerance.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// A Markov chain left the finite region (non-finite entry or
// sup-norm above the divergence threshold).
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, std::int64_t iteration,
                  double sup_norm)
      : NumericalError(what), iteration_(iteration), sup_norm_(sup_norm) {}
  std::int64_t iteration() const noexcept { return iteration_; }
  double sup_norm() const noexcept { return sup_norm_; }

 private:
  std::int64_t iteration_;
  double sup_norm_;
};

// Every pilot chain of the step-size search diverged.
class TuningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace brrr
