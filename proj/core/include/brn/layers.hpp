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
#include <string>
#include <vector>

#include "brn/ops.hpp"
#include "brn/params.hpp"

BRN_NN_BEGIN

/// Building blocks of the network. Each layer holds handles to tensors owned
/// by a ParamStore and is applied to (N, C, T) tensors with stride 1, so the
/// temporal length is preserved everywhere. Weights are initialized uniform in
/// +-1/sqrt(fan_in), biases to zero, norm scales to one.
namespace layers {

struct Conv1d {
  Tensor weight;  // (Cout, Cin, k)
  Tensor bias;    // (Cout)

  Conv1d() = default;
  Conv1d(ParamStore& store, const std::string& prefix, std::size_t cin, std::size_t cout,
         std::size_t kernel, Rng& rng);
  Tensor operator()(Tape& tape, const Tensor& x) const;
};

struct DepthwiseConv1d {
  Tensor weight;  // (C, 1, k)
  Tensor bias;    // (C)

  DepthwiseConv1d() = default;
  DepthwiseConv1d(ParamStore& store, const std::string& prefix, std::size_t channels,
                  std::size_t kernel, Rng& rng);
  Tensor operator()(Tape& tape, const Tensor& x) const;
};

// Normalizes over the channel axis at every time step.
struct LayerNorm {
  Tensor gamma;
  Tensor beta;
  Real eps = Real(1e-5);

  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& prefix, std::size_t channels);
  Tensor operator()(Tape& tape, const Tensor& x) const;
};

// y = x W^T + b over the last axis of a 2-D (N, in) tensor.
struct Linear {
  Tensor weight;  // (out, in)
  Tensor bias;    // (out), undefined when built without bias

  Linear() = default;
  Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
         bool with_bias = true);
  Tensor operator()(Tape& tape, const Tensor& x) const;
};

/// Four parallel branches of Cout/4 channels each: k=1, k=3, k=5 and
/// avg-pool(3) followed by k=1. Concatenated, passed through GELU, plus the
/// input when Cin == Cout.
struct Inception1d {
  Conv1d branch1, branch3, branch5, branch_pool;
  bool residual = false;

  Inception1d() = default;
  // Throws ConfigError unless cout % 4 == 0.
  Inception1d(ParamStore& store, const std::string& prefix, std::size_t cin, std::size_t cout,
              Rng& rng);
  Tensor operator()(Tape& tape, const Tensor& x) const;
};

// Single-layer unidirectional GRU with hidden size = input channels.
struct Gru {
  Tensor w_ih, w_hh, b_ih, b_hh;

  Gru() = default;
  Gru(ParamStore& store, const std::string& prefix, std::size_t channels, Rng& rng);
  Tensor operator()(Tape& tape, const Tensor& x) const;
};

// Per-channel conv followed by a 1x1 channel mix.
struct DepthwisePointwise {
  DepthwiseConv1d depthwise;
  Conv1d pointwise;

  DepthwisePointwise() = default;
  DepthwisePointwise(ParamStore& store, const std::string& prefix, std::size_t channels,
                     std::size_t kernel, Rng& rng);
  Tensor operator()(Tape& tape, const Tensor& x) const;
};

// e = u (1 + tanh(tau)) + psi. tau/psi may broadcast against u.
Tensor film_modulate(Tape& tape, const Tensor& u, const Tensor& tau, const Tensor& psi);

/// Pre-norm transformer layer over a set of tokens:
///   y = x + Wo MHSA(LN1(x)),  out = y + FFN(LN2(y)),  FFN = C -> 2C -> C with GELU.
/// Input (G, K, C): G independent groups of K tokens.
struct BandMixer {
  LayerNorm norm1, norm2;
  Linear q, k, v, out;
  Linear ffn1, ffn2;
  std::size_t heads = 1;

  BandMixer() = default;
  // Throws ConfigError unless channels % heads == 0.
  BandMixer(ParamStore& store, const std::string& prefix, std::size_t channels, std::size_t heads,
            Rng& rng);

  // attention, when non-null, receives the (G * heads, K, K) weights.
  Tensor operator()(Tape& tape, const Tensor& x, Tensor* attention = nullptr) const;

  // Attention sub-layer alone, without norm or residual: Wo concat_h softmax(Q K^T / sqrt(d)) V.
  Tensor attend(Tape& tape, const Tensor& x, Tensor* attention = nullptr) const;
};

// Stack of Inception1d blocks: in -> C, then (blocks - 1) x C -> C.
struct Encoder {
  std::vector<Inception1d> blocks;

  Encoder() = default;
  Encoder(ParamStore& store, const std::string& prefix, std::size_t cin, std::size_t channels,
          std::size_t blocks, Rng& rng);
  Tensor operator()(Tape& tape, const Tensor& x) const;
};

// blocks x (C -> C) Inception1d, then a 1x1 projection C -> 1.
struct Decoder {
  std::vector<Inception1d> blocks;
  Conv1d head;

  Decoder() = default;
  Decoder(ParamStore& store, const std::string& prefix, std::size_t channels, std::size_t blocks,
          Rng& rng);
  Tensor operator()(Tape& tape, const Tensor& x) const;
};

}  // namespace layers

BRN_NN_END
