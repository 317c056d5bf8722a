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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brn/layers.hpp"
#include "brn/params.hpp"
#include "brn/spectral.hpp"

BRN_NN_BEGIN

struct ModelConfig {
  std::size_t channels = 64;
  std::size_t heads = 4;
  std::size_t encoder_stages = 2;
  std::size_t blocks_per_stage = 2;
  BandSpec band_spec = BandSpec::standard();

  std::size_t band_count() const { return band_spec.band_count(); }
  std::size_t segment_length() const { return band_spec.segment_length; }
  // Inception blocks per encoder and per decoder.
  std::size_t blocks() const { return encoder_stages * blocks_per_stage; }

  // Small configuration for tests: K equal-width bands over [0, fs/2].
  static ModelConfig toy(std::size_t channels, std::size_t segment_length, std::size_t bands,
                         double sample_rate_hz = 256.0);

  // Throws ConfigError.
  void validate() const;
};

/// Switches that remove one component of the network.
struct Ablation {
  bool no_fullband = false;        // no conditioner: FiLM is the identity and lambda = 0
  bool route_all_one = false;      // g = 1, so z_k = f_k
  bool no_cross_band = false;      // Z' = Z
  bool no_band_embedding = false;  // b_k = 0

  bool operator==(const Ablation&) const = default;
};

// JSON object {"model": {...}, "ablation": {...}}.
std::string config_to_json(const ModelConfig& config, const Ablation& ablation);
// Throws ConfigError on malformed or invalid input.
void config_from_json(const std::string& text, ModelConfig& config, Ablation& ablation);

struct FullbandOutputs {
  Tensor h_f;          // (B, C, T)
  Tensor z_f;          // (B, C, T)
  Tensor d_f;          // (B, 1, T)
  Tensor lambda_gate;  // (B, 1, T), in (0, 1)
  Tensor tau;          // (B, C, T)
  Tensor psi;          // (B, C, T)
};

// Band pathway tensors for N = B * K' rows, ordered batch-major (row b * K' + k).
struct BandLatents {
  Tensor u;        // encoder output
  Tensor u_tilde;  // plus band embedding
  Tensor e;        // after FiLM
  Tensor g;        // routing mask in [0, 1]
  Tensor f;        // denoiser proposal
  Tensor z;        // (1 - g) e + g f
};

struct ForwardOptions {
  // Replaces the router output by a constant mask (tests of the routing rule).
  std::optional<Real> forced_gate;
  bool keep_attention = false;
};

struct Diagnostics {
  FullbandOutputs fullband;  // tensors undefined when the conditioner is ablated
  BandLatents latents;
  Tensor fused;              // (B, K, C, T) after cross-band fusion
  Tensor band_outputs;       // (B, K, T), y_k
  Tensor band_sum;           // (B, 1, T)
  Tensor refinement;         // (B, 1, T), lambda * d_f (zeros when ablated)
  Tensor attention;          // (B * T * heads, K, K) when requested
};

struct ForwardResult {
  Tensor y;  // (B, 1, T)
  Diagnostics diag;
};

class BandRouteNet {
 public:
  BandRouteNet(ModelConfig config, Ablation ablation = {}, std::uint64_t seed = 0);

  BandRouteNet(const BandRouteNet&) = delete;
  BandRouteNet& operator=(const BandRouteNet&) = delete;

  const ModelConfig& config() const noexcept { return config_; }
  const Ablation& ablation() const noexcept { return ablation_; }
  const ParamStore& params() const noexcept { return store_; }
  std::size_t count_params() const { return store_.count(); }

  // Splits (B, 1, T) into (B * K, 1, T) band signals. Not differentiable.
  Tensor decompose(const Tensor& x) const;

  FullbandOutputs fullband_condition(Tape& tape, const Tensor& x) const;

  // One band: x_k (B, 1, T), band index k, tau/psi (B, C, T) or undefined
  // (no conditioning).
  BandLatents band_adapter(Tape& tape, const Tensor& x_k, std::size_t k, const Tensor& tau,
                           const Tensor& psi, const ForwardOptions& options = {}) const;

  // All K bands at once: bands (B * K, 1, T).
  BandLatents band_adapters(Tape& tape, const Tensor& bands, const Tensor& tau, const Tensor& psi,
                            const ForwardOptions& options = {}) const;

  // (B, K, C, T) -> (B, K, C, T).
  Tensor cross_band_fuse(Tape& tape, const Tensor& z, Tensor* attention = nullptr) const;

  ForwardResult forward(Tape& tape, const Tensor& x, const ForwardOptions& options = {}) const;

  // Inference convenience: runs without recording.
  Tensor denoise(const Tensor& x) const;

 private:
  BandLatents adapt(Tape& tape, const Tensor& bands, const Tensor& embedding, std::size_t bands_per_row,
                    const Tensor& tau, const Tensor& psi, const ForwardOptions& options) const;

  ModelConfig config_;
  Ablation ablation_;
  ParamStore store_;
  BandDecomposer decomposer_;

  struct Fullband {
    layers::Encoder encoder;
    layers::LayerNorm norm;
    layers::Gru gru;
    layers::Conv1d gru_proj;
    layers::Decoder decoder;
    layers::Conv1d gate_in;
    layers::LayerNorm gate_norm;
    layers::Conv1d gate_out;
    layers::Conv1d film;
  } fullband_;

  struct Band {
    Tensor embedding;  // (K, C)
    layers::Encoder encoder;
    layers::DepthwisePointwise router_local;
    layers::Conv1d router_global1, router_global2;
    layers::Conv1d denoise_pre;
    layers::Gru denoise_gru;
    layers::Conv1d denoise_post;
    layers::DepthwisePointwise temporal_mix;
    layers::BandMixer band_mix;
    layers::Decoder decoder;
  } band_;
};

// Channel mean of g for sample b of a forward pass: K x T, row-major.
std::vector<double> routing_heatmap(const Diagnostics& diag, std::size_t bands, std::size_t sample = 0);

BRN_NN_END
