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

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "brn/real.hpp"

BRN_NN_BEGIN

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// 64-byte aligned allocation. Vectorized kernels peel loops according to the
// start address, so a fixed alignment keeps floating-point results identical
// from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlignment = 64;
  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kAlignment}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kAlignment}); }
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) noexcept { return true; }
};

using RealBuffer = std::vector<Real, AlignedAllocator<Real>>;

/// Dense row-major array of Real with an optional gradient buffer.
///
/// Tensor is a handle: copies share storage. Use clone() for a deep copy.
/// Storage may be shared between tensors of different shapes (see
/// ops::reshape); gradient buffers are never shared.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0), bool requires_grad = false);
  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false);

  static Tensor scalar(Real value, bool requires_grad = false);
  static Tensor zeros_like(const Tensor& other);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<Real> data();
  std::span<const Real> data() const;
  Real item() const;
  Real& at(std::initializer_list<std::size_t> index);
  Real at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  // Allocates a zero gradient buffer if none exists.
  // Gradient buffers belong to the shared state, so these are const on the handle.
  std::span<Real> ensure_grad() const;
  std::span<Real> grad();
  std::span<const Real> grad() const;
  void zero_grad() const;
  void clear_grad() const;

  Tensor clone() const;
  // New handle over the same storage with a different shape. No tape entry.
  Tensor view(Shape shape) const;

  bool same_as(const Tensor& other) const noexcept { return impl_ == other.impl_; }
  const void* id() const noexcept { return impl_.get(); }

 private:
  struct Impl {
    Shape shape;
    std::shared_ptr<RealBuffer> storage;
    RealBuffer grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;

  Impl& impl() const;
};

// Throws NumericFault naming `what` if any element is NaN or infinite.
void check_finite(const Tensor& t, const char* what);

BRN_NN_END
