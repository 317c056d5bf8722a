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

#include "brn/tape.hpp"

#include <algorithm>

#include "brn/error.hpp"

BRN_NN_BEGIN

bool Tape::tracks(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t && t->defined() && t->requires_grad(); });
}

bool Tape::tracks(std::span<const Tensor> inputs) const {
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor& t) { return t.defined() && t.requires_grad(); });
}

void Tape::record(std::string_view op, std::vector<Tensor> inputs, Tensor& output, BackwardFn fn) {
  if (!recording_) throw UsageError("record() on a non-recording tape");
  output.set_requires_grad(true);
  entries_.push_back(Entry{op, std::move(inputs), output, std::move(fn)});
}

void Tape::backward(const Tensor& root) {
  if (root.numel() != 1) {
    throw UsageError("backward() without a seed needs a scalar root, got " +
                     shape_str(root.shape()));
  }
  const Real one = 1;
  backward(root, std::span<const Real>(&one, 1));
}

void Tape::backward(const Tensor& root, std::span<const Real> seed) {
  auto it = std::find_if(entries_.rbegin(), entries_.rend(),
                         [&](const Entry& e) { return e.output.same_as(root); });
  if (it == entries_.rend()) throw UsageError("backward() root was not produced by this tape");
  if (seed.size() != root.numel()) {
    throw ShapeError("seed gradient has " + std::to_string(seed.size()) + " values, root has " +
                     std::to_string(root.numel()));
  }
  Tensor r = root;
  auto g = r.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];

  for (; it != entries_.rend(); ++it) {
    Tensor& out = it->output;
    if (!out.has_grad()) continue;
    it->backward(out.grad());
    // Every consumer of the output was recorded later and has already run.
    out.clear_grad();
  }
}

void accumulate_grad(const Tensor& t, std::span<const Real> values) {
  if (!t.requires_grad()) return;
  auto g = t.ensure_grad();
  if (g.size() != values.size()) throw ShapeError("gradient size mismatch in accumulate_grad");
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += values[i];
}

BRN_NN_END
