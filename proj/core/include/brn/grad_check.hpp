// Copyright 2026 The BandRoute Authors
//
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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "brn/tape.hpp"
#include "brn/tensor.hpp"

BRN_NN_BEGIN

inline constexpr double kGradCheckDivFloor = 1e-8;

// Relative error |a - n| / max(|a|, |n|, 1e-8).
double gradient_relative_error(double analytic, double numeric);

struct GradEntry {
  std::string name;
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_abs_error = 0;
  double max_rel_error = 0;
};

struct GradReport {
  std::vector<GradEntry> entries;
  double max_abs_error = 0;
  double max_rel_error = 0;

  bool passed(double rel_tol) const { return max_rel_error <= rel_tol; }
};

// Builds the scalar to differentiate on the given tape.
using ScalarFn = std::function<Tensor(Tape&)>;

// One perturbed scalar: element `index` of leaf `tensor`.
struct GradProbe {
  std::string name;
  Tensor tensor;
  std::size_t index = 0;
};

/// Compares tape gradients with central differences
/// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every element of every
/// input. Inputs must be leaves; their requires_grad flag is set and their
/// gradients are cleared. Throws UsageError if f is not scalar or not
/// deterministic.
GradReport grad_check(const ScalarFn& f, std::span<Tensor> inputs, double eps = 1e-5);

// Same, restricted to selected elements.
GradReport grad_check(const ScalarFn& f, std::span<const GradProbe> probes, double eps = 1e-5);

BRN_NN_END
