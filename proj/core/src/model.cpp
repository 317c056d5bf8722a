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

#include "brn/model.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "brn/error.hpp"
#include "brn/ops.hpp"

BRN_NN_BEGIN

ModelConfig ModelConfig::toy(std::size_t channels, std::size_t segment_length, std::size_t bands,
                             double sample_rate_hz) {
  ModelConfig c;
  c.channels = channels;
  c.heads = channels % 4 == 0 ? 4 : 1;
  c.band_spec.sample_rate_hz = sample_rate_hz;
  c.band_spec.segment_length = segment_length;
  c.band_spec.bands.clear();
  const double width = sample_rate_hz / 2.0 / static_cast<double>(bands);
  for (std::size_t k = 0; k < bands; ++k) {
    const double hi = k + 1 == bands ? sample_rate_hz / 2.0 : width * static_cast<double>(k + 1);
    c.band_spec.bands.push_back({"band" + std::to_string(k), width * static_cast<double>(k), hi});
  }
  return c;
}

void ModelConfig::validate() const {
  if (channels < 4 || channels % 4 != 0) {
    throw ConfigError("model: channels must be a positive multiple of 4, got " + std::to_string(channels));
  }
  if (heads == 0 || channels % heads != 0) {
    throw ConfigError("model: channels (" + std::to_string(channels) + ") must be divisible by heads (" +
                      std::to_string(heads) + ")");
  }
  if (encoder_stages == 0 || blocks_per_stage == 0) {
    throw ConfigError("model: encoder_stages and blocks_per_stage must be positive");
  }
  band_spec.validate();
}

std::string config_to_json(const ModelConfig& config, const Ablation& ablation) {
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : config.band_spec.bands) bands.push_back({{"name", b.name}, {"lo_hz", b.lo_hz}, {"hi_hz", b.hi_hz}});
  nlohmann::json j = {
      {"model",
       {{"channels", config.channels},
        {"heads", config.heads},
        {"encoder_stages", config.encoder_stages},
        {"blocks_per_stage", config.blocks_per_stage},
        {"segment_length", config.band_spec.segment_length},
        {"sample_rate_hz", config.band_spec.sample_rate_hz},
        {"bands", bands}}},
      {"ablation",
       {{"no_fullband", ablation.no_fullband},
        {"route_all_one", ablation.route_all_one},
        {"no_cross_band", ablation.no_cross_band},
        {"no_band_embedding", ablation.no_band_embedding}}},
  };
  return j.dump();
}

void config_from_json(const std::string& text, ModelConfig& config, Ablation& ablation) {
  try {
    const auto j = nlohmann::json::parse(text);
    ModelConfig c;
    Ablation a;
    const auto& m = j.at("model");
    c.channels = m.at("channels").get<std::size_t>();
    c.heads = m.at("heads").get<std::size_t>();
    c.encoder_stages = m.at("encoder_stages").get<std::size_t>();
    c.blocks_per_stage = m.at("blocks_per_stage").get<std::size_t>();
    c.band_spec.segment_length = m.at("segment_length").get<std::size_t>();
    c.band_spec.sample_rate_hz = m.at("sample_rate_hz").get<double>();
    c.band_spec.bands.clear();
    for (const auto& b : m.at("bands")) {
      c.band_spec.bands.push_back({b.at("name").get<std::string>(), b.at("lo_hz").get<double>(),
                                   b.at("hi_hz").get<double>()});
    }
    if (j.contains("ablation")) {
      const auto& ab = j.at("ablation");
      a.no_fullband = ab.value("no_fullband", false);
      a.route_all_one = ab.value("route_all_one", false);
      a.no_cross_band = ab.value("no_cross_band", false);
      a.no_band_embedding = ab.value("no_band_embedding", false);
    }
    c.validate();
    config = c;
    ablation = a;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

BandRouteNet::BandRouteNet(ModelConfig config, Ablation ablation, std::uint64_t seed)
    : config_((config.validate(), std::move(config))),
      ablation_(ablation),
      decomposer_(config_.band_spec) {
  Rng rng(seed);
  const std::size_t c = config_.channels;
  const std::size_t blocks = config_.blocks();
  auto& s = store_;

  fullband_.encoder = layers::Encoder(s, "fullband.encoder", 1, c, blocks, rng);
  fullband_.norm = layers::LayerNorm(s, "fullband.norm", c);
  fullband_.gru = layers::Gru(s, "fullband.gru", c, rng);
  fullband_.gru_proj = layers::Conv1d(s, "fullband.gru_proj", c, c, 1, rng);
  fullband_.decoder = layers::Decoder(s, "fullband.decoder", c, blocks, rng);
  fullband_.gate_in = layers::Conv1d(s, "fullband.gate.in", c, c, 1, rng);
  fullband_.gate_norm = layers::LayerNorm(s, "fullband.gate.norm", c);
  fullband_.gate_out = layers::Conv1d(s, "fullband.gate.out", c, 1, 3, rng);
  fullband_.film = layers::Conv1d(s, "fullband.film", c, 2 * c, 1, rng);

  band_.embedding = s.add_uniform("band.embedding", {config_.band_count(), c},
                                  1.0 / std::sqrt(static_cast<double>(c)), rng);
  band_.encoder = layers::Encoder(s, "band.encoder", 1, c, blocks, rng);
  band_.router_local = layers::DepthwisePointwise(s, "band.router.local", c, 5, rng);
  band_.router_global1 = layers::Conv1d(s, "band.router.global1", c, c / 4, 1, rng);
  band_.router_global2 = layers::Conv1d(s, "band.router.global2", c / 4, c, 1, rng);
  band_.denoise_pre = layers::Conv1d(s, "band.denoiser.pre", c, c, 3, rng);
  band_.denoise_gru = layers::Gru(s, "band.denoiser.gru", c, rng);
  band_.denoise_post = layers::Conv1d(s, "band.denoiser.post", c, c, 1, rng);
  band_.temporal_mix = layers::DepthwisePointwise(s, "fusion.temporal", c, 5, rng);
  band_.band_mix = layers::BandMixer(s, "fusion.band", c, config_.heads, rng);
  band_.decoder = layers::Decoder(s, "band.decoder", c, blocks, rng);
}

Tensor BandRouteNet::decompose(const Tensor& x) const {
  const std::size_t len = config_.segment_length();
  if (x.ndim() != 3 || x.dim(1) != 1 || x.dim(2) != len) {
    throw ShapeError("decompose: expected (B, 1, " + std::to_string(len) + "), got " + shape_str(x.shape()));
  }
  const std::size_t batch = x.dim(0), k_bands = config_.band_count();
  Tensor out({batch * k_bands, 1, len});
  auto src = x.data();
  auto dst = out.data();
  std::vector<double> signal(len);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < len; ++t) signal[t] = static_cast<double>(src[b * len + t]);
    const BandSignals bands = decomposer_.decompose(signal);
    for (std::size_t k = 0; k < k_bands; ++k) {
      auto row = bands.band(k);
      for (std::size_t t = 0; t < len; ++t) dst[(b * k_bands + k) * len + t] = static_cast<Real>(row[t]);
    }
  }
  return out;
}

FullbandOutputs BandRouteNet::fullband_condition(Tape& tape, const Tensor& x) const {
  const std::size_t c = config_.channels;
  FullbandOutputs out;
  out.h_f = fullband_.encoder(tape, x);
  out.z_f = fullband_.gru_proj(tape, fullband_.gru(tape, fullband_.norm(tape, out.h_f)));
  out.d_f = fullband_.decoder(tape, out.z_f);
  Tensor gate = fullband_.gate_norm(tape, fullband_.gate_in(tape, out.z_f));
  out.lambda_gate = ops::sigmoid(tape, fullband_.gate_out(tape, ops::gelu(tape, gate)));
  Tensor film = fullband_.film(tape, out.z_f);
  out.tau = ops::slice(tape, film, 1, 0, c);
  out.psi = ops::slice(tape, film, 1, c, 2 * c);
  return out;
}

BandLatents BandRouteNet::adapt(Tape& tape, const Tensor& bands, const Tensor& embedding,
                                std::size_t per_row, const Tensor& tau, const Tensor& psi,
                                const ForwardOptions& options) const {
  const std::size_t c = config_.channels, len = config_.segment_length();
  if (bands.ndim() != 3 || bands.dim(1) != 1 || bands.dim(2) != len || bands.dim(0) % per_row != 0) {
    throw ShapeError("band adapter: bad band tensor " + shape_str(bands.shape()));
  }
  const std::size_t n = bands.dim(0), batch = n / per_row;
  const Shape grouped{batch, per_row, c, len};
  const Shape flat{n, c, len};

  BandLatents lat;
  lat.u = band_.encoder(tape, bands);
  if (ablation_.no_band_embedding) {
    lat.u_tilde = lat.u;
  } else {
    Tensor emb = ops::reshape(tape, embedding, {1, per_row, c, 1});
    lat.u_tilde = ops::reshape(tape, ops::add(tape, ops::reshape(tape, lat.u, grouped), emb), flat);
  }
  if (tau.defined()) {
    if (tau.shape() != Shape{batch, c, len} || psi.shape() != tau.shape()) {
      throw ShapeError("band adapter: tau/psi must be " + shape_str({batch, c, len}) + ", got " +
                       shape_str(tau.shape()) + " and " + shape_str(psi.shape()));
    }
    Tensor e = layers::film_modulate(tape, ops::reshape(tape, lat.u_tilde, grouped),
                                     ops::reshape(tape, tau, {batch, 1, c, len}),
                                     ops::reshape(tape, psi, {batch, 1, c, len}));
    lat.e = ops::reshape(tape, e, flat);
  } else {
    lat.e = lat.u_tilde;
  }

  std::optional<Real> forced = options.forced_gate;
  if (ablation_.route_all_one) forced = Real(1);
  if (forced) {
    lat.g = Tensor(flat, *forced);
  } else {
    Tensor local = band_.router_local(tape, lat.e);
    Tensor pooled = ops::mean(tape, lat.e, 2, true);
    Tensor global = band_.router_global2(tape, ops::gelu(tape, band_.router_global1(tape, pooled)));
    lat.g = ops::sigmoid(tape, ops::add(tape, local, global));
  }

  Tensor proposal = band_.denoise_post(
      tape, band_.denoise_gru(tape, ops::gelu(tape, band_.denoise_pre(tape, lat.e))));
  lat.f = ops::add(tape, lat.e, proposal);

  // (1 - g) e + g f rather than e + g (f - e): exact at g = 0 and g = 1.
  Tensor keep = ops::add_scalar(tape, ops::scale(tape, lat.g, Real(-1)), Real(1));
  lat.z = ops::add(tape, ops::mul(tape, keep, lat.e), ops::mul(tape, lat.g, lat.f));
  return lat;
}

BandLatents BandRouteNet::band_adapter(Tape& tape, const Tensor& x_k, std::size_t k, const Tensor& tau,
                                       const Tensor& psi, const ForwardOptions& options) const {
  if (k >= config_.band_count()) {
    throw ShapeError("band_adapter: band index " + std::to_string(k) + " out of range");
  }
  Tensor emb = ops::slice(tape, band_.embedding, 0, k, k + 1);
  return adapt(tape, x_k, emb, 1, tau, psi, options);
}

BandLatents BandRouteNet::band_adapters(Tape& tape, const Tensor& bands, const Tensor& tau,
                                        const Tensor& psi, const ForwardOptions& options) const {
  return adapt(tape, bands, band_.embedding, config_.band_count(), tau, psi, options);
}

Tensor BandRouteNet::cross_band_fuse(Tape& tape, const Tensor& z, Tensor* attention) const {
  if (z.ndim() != 4 || z.dim(2) != config_.channels) {
    throw ShapeError("cross_band_fuse: expected (B, K, " + std::to_string(config_.channels) +
                     ", T), got " + shape_str(z.shape()));
  }
  const std::size_t batch = z.dim(0), k_bands = z.dim(1), c = z.dim(2), len = z.dim(3);
  Tensor flat = ops::reshape(tape, z, {batch * k_bands, c, len});
  Tensor mixed = ops::add(tape, flat, band_.temporal_mix(tape, flat));
  Tensor tokens = ops::permute(tape, ops::reshape(tape, mixed, {batch, k_bands, c, len}), {0, 3, 1, 2});
  tokens = ops::reshape(tape, tokens, {batch * len, k_bands, c});
  Tensor fused = band_.band_mix(tape, tokens, attention);
  fused = ops::reshape(tape, fused, {batch, len, k_bands, c});
  return ops::permute(tape, fused, {0, 2, 3, 1});
}

ForwardResult BandRouteNet::forward(Tape& tape, const Tensor& x, const ForwardOptions& options) const {
  const std::size_t len = config_.segment_length(), c = config_.channels, k_bands = config_.band_count();
  if (x.ndim() != 3 || x.dim(1) != 1 || x.dim(2) != len) {
    throw ShapeError("forward: expected input (B, 1, " + std::to_string(len) + "), got " + shape_str(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  ForwardResult r;
  auto& d = r.diag;
  if (!ablation_.no_fullband) d.fullband = fullband_condition(tape, x);

  d.latents = band_adapters(tape, decompose(x), d.fullband.tau, d.fullband.psi, options);
  Tensor z = ops::reshape(tape, d.latents.z, {batch, k_bands, c, len});
  d.fused = ablation_.no_cross_band
                ? z
                : cross_band_fuse(tape, z, options.keep_attention ? &d.attention : nullptr);

  Tensor decoded = band_.decoder(tape, ops::reshape(tape, d.fused, {batch * k_bands, c, len}));
  d.band_outputs = ops::reshape(tape, decoded, {batch, k_bands, len});
  d.band_sum = ops::sum(tape, d.band_outputs, 1, true);
  if (ablation_.no_fullband) {
    d.refinement = Tensor({batch, 1, len});
    r.y = d.band_sum;
  } else {
    d.refinement = ops::mul(tape, d.fullband.lambda_gate, d.fullband.d_f);
    r.y = ops::add(tape, d.band_sum, d.refinement);
  }
  return r;
}

Tensor BandRouteNet::denoise(const Tensor& x) const {
  Tape tape = Tape::no_grad();
  return forward(tape, x).y;
}

std::vector<double> routing_heatmap(const Diagnostics& diag, std::size_t bands, std::size_t sample) {
  const Tensor& g = diag.latents.g;
  if (!g.defined() || g.ndim() != 3 || bands == 0 || g.dim(0) % bands != 0) {
    throw ShapeError("routing_heatmap: diagnostics carry no routing mask for " + std::to_string(bands) + " bands");
  }
  const std::size_t batch = g.dim(0) / bands, c = g.dim(1), len = g.dim(2);
  if (sample >= batch) throw ShapeError("routing_heatmap: sample index out of range");
  std::vector<double> map(bands * len, 0.0);
  auto v = g.data();
  for (std::size_t k = 0; k < bands; ++k) {
    const std::size_t row = sample * bands + k;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t t = 0; t < len; ++t) map[k * len + t] += static_cast<double>(v[(row * c + ch) * len + t]);
    for (std::size_t t = 0; t < len; ++t) map[k * len + t] /= static_cast<double>(c);
  }
  return map;
}

BRN_NN_END
