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

#include "brn/params.hpp"

#include <algorithm>

#include "brn/error.hpp"

BRN_NN_BEGIN

Tensor ParamStore::add(const std::string& name, Tensor t) {
  if (name.empty()) throw ConfigError("parameter name must not be empty");
  if (name.size() > 0xFFFF) throw ConfigError("parameter name too long: " + name.substr(0, 64));
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  t.set_requires_grad(true);
  params_.push_back({name, t});
  return t;
}

Tensor ParamStore::add_uniform(const std::string& name, Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.data()) v = static_cast<Real>(dist(rng));
  return add(name, t);
}

Tensor ParamStore::add_constant(const std::string& name, Shape shape, Real value) {
  return add(name, Tensor(std::move(shape), value));
}

const Tensor& ParamStore::get(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.value;
  throw ConfigError("unknown parameter '" + name + "'");
}

bool ParamStore::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const NamedParam& p) { return p.name == name; });
}

std::size_t ParamStore::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

void ParamStore::zero_grad() const {
  for (const auto& p : params_) p.value.zero_grad();
}

void ParamStore::clear_grad() const {
  for (const auto& p : params_) p.value.clear_grad();
}

std::vector<std::vector<Real>> ParamStore::snapshot() const {
  std::vector<std::vector<Real>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) {
    auto d = p.value.data();
    out.emplace_back(d.begin(), d.end());
  }
  return out;
}

void ParamStore::restore(const std::vector<std::vector<Real>>& values) const {
  if (values.size() != params_.size()) throw ShapeError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    // data() on a const handle is read-only; copy through a writable handle.
    Tensor t = params_[i].value;
    auto d = t.data();
    if (d.size() != values[i].size()) throw ShapeError("restore: size mismatch for " + params_[i].name);
    std::copy(values[i].begin(), values[i].end(), d.begin());
  }
}

BRN_NN_END
