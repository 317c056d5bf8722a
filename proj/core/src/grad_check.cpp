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

#include "brn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "brn/error.hpp"

BRN_NN_BEGIN

double gradient_relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckDivFloor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const ScalarFn& f) {
  Tape tape = Tape::no_grad();
  Tensor y = f(tape);
  if (y.numel() != 1) throw UsageError("grad_check: function must return a scalar");
  return static_cast<double>(y.item());
}

}  // namespace

GradReport grad_check(const ScalarFn& f, std::span<const GradProbe> probes, double eps) {
  if (!(eps > 0)) throw ConfigError("grad_check: eps must be positive");
  std::vector<Tensor> leaves;
  for (const auto& p : probes) {
    if (p.index >= p.tensor.numel()) throw UsageError("grad_check: probe index out of range");
    Tensor t = p.tensor;
    t.set_requires_grad(true);
    t.clear_grad();
    leaves.push_back(t);
  }

  const double base = evaluate(f);
  if (evaluate(f) != base) throw UsageError("grad_check: function is not deterministic");

  Tape tape;
  Tensor y = f(tape);
  if (y.numel() != 1) throw UsageError("grad_check: function must return a scalar");
  tape.backward(y);

  GradReport report;
  std::map<std::string, std::size_t> slot;
  for (const auto& p : probes) {
    auto [it, inserted] = slot.try_emplace(p.name, report.entries.size());
    if (inserted) report.entries.push_back(GradEntry{p.name, {}, {}, 0, 0});
    GradEntry& e = report.entries[it->second];

    Tensor t = p.tensor;
    const double analytic = t.has_grad() ? static_cast<double>(t.grad()[p.index]) : 0.0;
    auto data = t.data();
    const Real orig = data[p.index];
    data[p.index] = static_cast<Real>(orig + eps);
    const double fp = evaluate(f);
    data[p.index] = static_cast<Real>(orig - eps);
    const double fm = evaluate(f);
    data[p.index] = orig;
    const double numeric = (fp - fm) / (2 * eps);

    const double abs_err = std::abs(analytic - numeric);
    const double rel_err = gradient_relative_error(analytic, numeric);
    e.analytic.push_back(analytic);
    e.numeric.push_back(numeric);
    e.max_abs_error = std::max(e.max_abs_error, abs_err);
    e.max_rel_error = std::max(e.max_rel_error, rel_err);
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    report.max_rel_error = std::max(report.max_rel_error, rel_err);
  }
  for (auto& t : leaves) t.clear_grad();
  return report;
}

GradReport grad_check(const ScalarFn& f, std::span<Tensor> inputs, double eps) {
  std::vector<GradProbe> probes;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      probes.push_back(GradProbe{"input" + std::to_string(k), inputs[k], i});
    }
  }
  return grad_check(f, probes, eps);
}

BRN_NN_END
