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

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "brn/tape.hpp"
#include "brn/tensor.hpp"

BRN_NN_BEGIN

enum class Primitive {
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kMatmul,
  kConv1d,
  kDepthwiseConv1d,
  kSigmoid,
  kTanh,
  kGelu,
  kSoftmax,
  kLayerNorm,
  kSum,
  kMean,
  kSumAll,
  kMeanAll,
  kAvgPool1d,
  kConcat,
  kSlice,
  kBroadcastTo,
  kReshape,
  kPermute,
  kGru,
};

// Attributes consumed by the primitives that need them; others ignore them.
struct PrimitiveAttrs {
  Real scalar = 0;                     // scale, add_scalar
  std::size_t axis = 0;                // sum, mean, concat, slice
  bool keepdim = false;                // sum, mean
  std::size_t kernel = 3;              // avg_pool1d
  std::size_t stride = 1;              // conv1d
  std::optional<std::size_t> padding;  // conv1d
  std::size_t begin = 0, end = 0;      // slice
  Shape shape;                         // broadcast_to, reshape
  std::vector<std::size_t> axes;       // permute
  bool trans_a = false, trans_b = false;
  Real eps = Real(1e-5);               // layer_norm
};

std::span<const Primitive> primitive_catalog();
std::string_view primitive_name(Primitive op);

/// Generic entry point over the ops:: functions.
///
/// Input lists per primitive: binary ops and matmul take two tensors; conv1d
/// and depthwise_conv1d take (x, weight[, bias]); layer_norm takes (x[, gamma,
/// beta]); concat takes one or more; gru takes (x, w_ih, w_hh, b_ih, b_hh);
/// everything else takes one.
Tensor apply_primitive(Tape& tape, Primitive op, std::span<const Tensor> inputs,
                       const PrimitiveAttrs& attrs = {});

BRN_NN_END
