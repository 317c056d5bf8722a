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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "brn/tensor.hpp"

BRN_NN_BEGIN

using Rng = std::mt19937_64;

struct NamedParam {
  std::string name;
  Tensor value;
};

/// Registry of learnable tensors in registration order.
///
/// The order is the checkpoint order and the optimizer order. Names must be
/// unique; every tensor is registered exactly once.
class ParamStore {
 public:
  // Uniform in [-bound, bound].
  Tensor add_uniform(const std::string& name, Shape shape, double bound, Rng& rng);
  Tensor add_constant(const std::string& name, Shape shape, Real value);

  const std::vector<NamedParam>& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }
  // Throws ConfigError for an unknown name.
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  // Total element count.
  std::size_t count() const;

  void zero_grad() const;
  void clear_grad() const;

  // Deep copy of every value, for best-checkpoint retention.
  std::vector<std::vector<Real>> snapshot() const;
  void restore(const std::vector<std::vector<Real>>& values) const;

 private:
  Tensor add(const std::string& name, Tensor t);

  std::vector<NamedParam> params_;
};

BRN_NN_END
