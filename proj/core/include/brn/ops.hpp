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
#include <optional>
#include <span>
#include <vector>

#include "brn/tape.hpp"
#include "brn/tensor.hpp"

BRN_NN_BEGIN

/// Differentiable primitives. Every op computes its forward value eagerly and,
/// when the tape records and an input requires a gradient, appends a backward
/// rule. Outputs are checked for NaN/Inf (NumericFault).
namespace ops {

// Elementwise with numpy-style broadcasting (shapes aligned on the right).
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor scale(Tape& tape, const Tensor& x, Real factor);
Tensor add_scalar(Tape& tape, const Tensor& x, Real value);

Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor tanh(Tape& tape, const Tensor& x);
// Tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
Tensor gelu(Tape& tape, const Tensor& x);

// Softmax over the last axis.
Tensor softmax(Tape& tape, const Tensor& x);

// Normalizes over axis 1 of an (N, C, ...) tensor, independently for every
// other index. gamma/beta have shape [C] and may be undefined (no affine).
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Real eps = Real(1e-5));

Tensor sum(Tape& tape, const Tensor& x, std::size_t axis, bool keepdim = false);
Tensor mean(Tape& tape, const Tensor& x, std::size_t axis, bool keepdim = false);
Tensor sum_all(Tape& tape, const Tensor& x);
Tensor mean_all(Tape& tape, const Tensor& x);

// 2-D (M,K)x(K,N) or batched 3-D (B,M,K)x(B,K,N); the transpose flags apply to
// the trailing two axes.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b, bool trans_a = false,
              bool trans_b = false);

struct Conv1dOptions {
  std::size_t stride = 1;
  // Left/right zero padding; defaults to (kernel - 1) / 2 ("same" for odd kernels).
  std::optional<std::size_t> padding;
};

// Cross-correlation. x: (N, Cin, T), weight: (Cout, Cin, k), bias: (Cout) or undefined.
Tensor conv1d(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv1dOptions& options = {});

// Per-channel cross-correlation. x: (N, C, T), weight: (C, 1, k), bias: (C) or
// undefined. Zero "same" padding, stride 1.
Tensor depthwise_conv1d(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias);

// Sliding mean over the last axis of (N, C, T), zero "same" padding, divisor
// `kernel` at every position.
Tensor avg_pool1d(Tape& tape, const Tensor& x, std::size_t kernel);

Tensor concat(Tape& tape, std::span<const Tensor> inputs, std::size_t axis);
Tensor slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor broadcast_to(Tape& tape, const Tensor& x, const Shape& shape);
// Shares storage with x.
Tensor reshape(Tape& tape, const Tensor& x, const Shape& shape);
Tensor permute(Tape& tape, const Tensor& x, const std::vector<std::size_t>& axes);

/// Unidirectional single-layer GRU over the last axis.
///
/// x: (N, C, T); w_ih: (3H, C); w_hh: (3H, H); b_ih, b_hh: (3H). Gate rows are
/// ordered reset, update, candidate:
///   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
///   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
///   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
///   h' = (1 - z) * n + z * h
/// with h = 0 at t = 0. Returns the hidden state at every step, (N, H, T).
Tensor gru(Tape& tape, const Tensor& x, const Tensor& w_ih, const Tensor& w_hh,
           const Tensor& b_ih, const Tensor& b_hh);

}  // namespace ops

BRN_NN_END
