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

#include "brn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "brn/error.hpp"

BRN_NN_BEGIN

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, Real fill, bool requires_grad) : impl_(std::make_shared<Impl>()) {
  validate_shape(shape);
  impl_->storage = std::make_shared<RealBuffer>(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<Real> values, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("tensor of shape " + shape_str(shape) + " needs " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  impl_->storage = std::make_shared<RealBuffer>(values.begin(), values.end());
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
  return Tensor(Shape{1}, value, requires_grad);
}

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape(), Real(0)); }

Tensor::Impl& Tensor::impl() const {
  if (!impl_) throw UsageError("use of an undefined tensor");
  return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return impl().storage->size(); }

std::span<Real> Tensor::data() { return *impl().storage; }
std::span<const Real> Tensor::data() const { return *impl().storage; }

Real Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return (*impl().storage)[0];
}

namespace {

std::size_t flat_index(const Shape& shape, std::initializer_list<std::size_t> index) {
  if (index.size() != shape.size()) {
    throw ShapeError("index rank " + std::to_string(index.size()) + " does not match shape " +
                     shape_str(shape));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= shape[axis]) throw ShapeError("index out of range for shape " + shape_str(shape));
    flat = flat * shape[axis] + i;
    ++axis;
  }
  return flat;
}

}  // namespace

Real& Tensor::at(std::initializer_list<std::size_t> index) {
  return (*impl().storage)[flat_index(shape(), index)];
}

Real Tensor::at(std::initializer_list<std::size_t> index) const {
  return (*impl().storage)[flat_index(shape(), index)];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }
void Tensor::set_requires_grad(bool value) { impl().requires_grad = value; }

bool Tensor::has_grad() const { return !impl().grad.empty(); }

std::span<Real> Tensor::ensure_grad() const {
  auto& i = impl();
  if (i.grad.empty()) i.grad.assign(i.storage->size(), Real(0));
  return i.grad;
}

std::span<Real> Tensor::grad() { return impl().grad; }
std::span<const Real> Tensor::grad() const { return impl().grad; }

void Tensor::zero_grad() const {
  auto& g = impl().grad;
  std::fill(g.begin(), g.end(), Real(0));
}

void Tensor::clear_grad() const {
  auto& g = impl().grad;
  g.clear();
  g.shrink_to_fit();
}

Tensor Tensor::clone() const {
  Tensor out(shape(), std::vector<Real>(data().begin(), data().end()), requires_grad());
  return out;
}

Tensor Tensor::view(Shape new_shape) const {
  validate_shape(new_shape);
  if (shape_numel(new_shape) != numel()) {
    throw ShapeError("cannot view " + shape_str(shape()) + " as " + shape_str(new_shape));
  }
  Tensor out;
  out.impl_ = std::make_shared<Impl>();
  out.impl_->shape = std::move(new_shape);
  out.impl_->storage = impl().storage;
  return out;
}

void check_finite(const Tensor& t, const char* what) {
  for (Real v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericFault(std::string("non-finite value produced by ") + what);
    }
  }
}

BRN_NN_END
