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
#include <string_view>
#include <vector>

#include "brn/tensor.hpp"

BRN_NN_BEGIN

/// Records primitive applications of one forward pass for reverse-mode
/// differentiation.
///
/// A tape belongs to one thread. Entries are appended in execution order, so
/// every input of entry i is either a leaf or the output of some entry j < i.
/// A non-recording tape (Tape::no_grad()) is used for inference: ops check
/// recording() and skip bookkeeping entirely.
class Tape {
 public:
  // Receives dL/d(output) and accumulates into the inputs' gradient buffers.
  using BackwardFn = std::function<void(std::span<const Real> grad_out)>;

  struct Entry {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  explicit Tape(bool recording = true) : recording_(recording) {}
  static Tape no_grad() { return Tape(false); }

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool recording() const noexcept { return recording_; }

  // True when the tape records and at least one input requires a gradient.
  bool tracks(std::initializer_list<const Tensor*> inputs) const;
  bool tracks(std::span<const Tensor> inputs) const;

  // Appends an entry and marks `output` as requiring a gradient.
  void record(std::string_view op, std::vector<Tensor> inputs, Tensor& output, BackwardFn fn);

  // Seeds dL/droot = 1 (root must be a scalar) and propagates to every leaf
  // that requires a gradient. Gradients accumulate into existing buffers.
  void backward(const Tensor& root);
  void backward(const Tensor& root, std::span<const Real> seed);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  bool recording_;
  std::vector<Entry> entries_;
};

// Adds `values` into t's gradient buffer when t requires a gradient.
void accumulate_grad(const Tensor& t, std::span<const Real> values);

BRN_NN_END
