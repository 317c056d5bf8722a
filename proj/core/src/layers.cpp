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

#include "brn/layers.hpp"

#include <cmath>

#include "brn/error.hpp"

BRN_NN_BEGIN

namespace layers {

namespace {

double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

}  // namespace

Conv1d::Conv1d(ParamStore& store, const std::string& prefix, std::size_t cin, std::size_t cout,
               std::size_t kernel, Rng& rng) {
  if (kernel % 2 == 0) throw ConfigError(prefix + ": conv kernel must be odd to preserve length");
  weight = store.add_uniform(prefix + ".weight", {cout, cin, kernel}, fan_in_bound(cin * kernel), rng);
  bias = store.add_constant(prefix + ".bias", {cout}, Real(0));
}

Tensor Conv1d::operator()(Tape& tape, const Tensor& x) const { return ops::conv1d(tape, x, weight, bias); }

DepthwiseConv1d::DepthwiseConv1d(ParamStore& store, const std::string& prefix, std::size_t channels,
                                 std::size_t kernel, Rng& rng) {
  if (kernel % 2 == 0) throw ConfigError(prefix + ": depthwise kernel must be odd");
  weight = store.add_uniform(prefix + ".weight", {channels, 1, kernel}, fan_in_bound(kernel), rng);
  bias = store.add_constant(prefix + ".bias", {channels}, Real(0));
}

Tensor DepthwiseConv1d::operator()(Tape& tape, const Tensor& x) const {
  return ops::depthwise_conv1d(tape, x, weight, bias);
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& prefix, std::size_t channels) {
  gamma = store.add_constant(prefix + ".gamma", {channels}, Real(1));
  beta = store.add_constant(prefix + ".beta", {channels}, Real(0));
}

Tensor LayerNorm::operator()(Tape& tape, const Tensor& x) const {
  return ops::layer_norm(tape, x, gamma, beta, eps);
}

Linear::Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
               bool with_bias) {
  weight = store.add_uniform(prefix + ".weight", {out, in}, fan_in_bound(in), rng);
  if (with_bias) bias = store.add_constant(prefix + ".bias", {out}, Real(0));
}

Tensor Linear::operator()(Tape& tape, const Tensor& x) const {
  const Tensor y = ops::matmul(tape, x, weight, false, true);
  return bias.defined() ? ops::add(tape, y, bias) : y;
}

Inception1d::Inception1d(ParamStore& store, const std::string& prefix, std::size_t cin,
                         std::size_t cout, Rng& rng) {
  if (cout % 4 != 0) {
    throw ConfigError(prefix + ": Inception1d output channels must be divisible by 4, got " +
                      std::to_string(cout));
  }
  const std::size_t c = cout / 4;
  branch1 = Conv1d(store, prefix + ".k1", cin, c, 1, rng);
  branch3 = Conv1d(store, prefix + ".k3", cin, c, 3, rng);
  branch5 = Conv1d(store, prefix + ".k5", cin, c, 5, rng);
  branch_pool = Conv1d(store, prefix + ".pool", cin, c, 1, rng);
  residual = cin == cout;
}

Tensor Inception1d::operator()(Tape& tape, const Tensor& x) const {
  const Tensor parts[] = {branch1(tape, x), branch3(tape, x), branch5(tape, x),
                          branch_pool(tape, ops::avg_pool1d(tape, x, 3))};
  Tensor y = ops::gelu(tape, ops::concat(tape, parts, 1));
  return residual ? ops::add(tape, y, x) : y;
}

Gru::Gru(ParamStore& store, const std::string& prefix, std::size_t channels, Rng& rng) {
  const double bound = fan_in_bound(channels);
  w_ih = store.add_uniform(prefix + ".w_ih", {3 * channels, channels}, bound, rng);
  w_hh = store.add_uniform(prefix + ".w_hh", {3 * channels, channels}, bound, rng);
  b_ih = store.add_constant(prefix + ".b_ih", {3 * channels}, Real(0));
  b_hh = store.add_constant(prefix + ".b_hh", {3 * channels}, Real(0));
}

Tensor Gru::operator()(Tape& tape, const Tensor& x) const {
  return ops::gru(tape, x, w_ih, w_hh, b_ih, b_hh);
}

DepthwisePointwise::DepthwisePointwise(ParamStore& store, const std::string& prefix,
                                       std::size_t channels, std::size_t kernel, Rng& rng)
    : depthwise(store, prefix + ".dw", channels, kernel, rng),
      pointwise(store, prefix + ".pw", channels, channels, 1, rng) {}

Tensor DepthwisePointwise::operator()(Tape& tape, const Tensor& x) const {
  return pointwise(tape, depthwise(tape, x));
}

Tensor film_modulate(Tape& tape, const Tensor& u, const Tensor& tau, const Tensor& psi) {
  Tensor gain = ops::add_scalar(tape, ops::tanh(tape, tau), Real(1));
  return ops::add(tape, ops::mul(tape, u, gain), psi);
}

BandMixer::BandMixer(ParamStore& store, const std::string& prefix, std::size_t channels,
                     std::size_t heads_, Rng& rng)
    : heads(heads_) {
  if (heads == 0 || channels % heads != 0) {
    throw ConfigError(prefix + ": channels (" + std::to_string(channels) +
                      ") must be divisible by heads (" + std::to_string(heads) + ")");
  }
  norm1 = LayerNorm(store, prefix + ".norm1", channels);
  q = Linear(store, prefix + ".q", channels, channels, rng);
  // A key bias shifts every score of a query row equally, which softmax
  // cancels, so it would be a parameter with identically zero gradient.
  k = Linear(store, prefix + ".k", channels, channels, rng, false);
  v = Linear(store, prefix + ".v", channels, channels, rng);
  out = Linear(store, prefix + ".out", channels, channels, rng);
  norm2 = LayerNorm(store, prefix + ".norm2", channels);
  ffn1 = Linear(store, prefix + ".ffn1", channels, 2 * channels, rng);
  ffn2 = Linear(store, prefix + ".ffn2", 2 * channels, channels, rng);
}

Tensor BandMixer::attend(Tape& tape, const Tensor& x, Tensor* attention) const {
  if (x.ndim() != 3) throw ShapeError("BandMixer expects (groups, tokens, channels), got " + shape_str(x.shape()));
  const std::size_t groups = x.dim(0), tokens = x.dim(1), channels = x.dim(2);
  if (channels != q.weight.dim(1)) {
    throw ShapeError("BandMixer: expected " + std::to_string(q.weight.dim(1)) + " channels, got " +
                     std::to_string(channels));
  }
  const std::size_t dh = channels / heads;
  Tensor flat = ops::reshape(tape, x, {groups * tokens, channels});
  auto split_heads = [&](const Tensor& t) {
    Tensor h = ops::reshape(tape, t, {groups, tokens, heads, dh});
    h = ops::permute(tape, h, {0, 2, 1, 3});
    return ops::reshape(tape, h, {groups * heads, tokens, dh});
  };
  Tensor qh = split_heads(q(tape, flat));
  Tensor kh = split_heads(k(tape, flat));
  Tensor vh = split_heads(v(tape, flat));
  Tensor scores = ops::scale(tape, ops::matmul(tape, qh, kh, false, true),
                             Real(1) / std::sqrt(static_cast<Real>(dh)));
  Tensor weights = ops::softmax(tape, scores);
  if (attention) *attention = weights;
  Tensor ctx = ops::matmul(tape, weights, vh);
  ctx = ops::reshape(tape, ctx, {groups, heads, tokens, dh});
  ctx = ops::permute(tape, ctx, {0, 2, 1, 3});
  ctx = ops::reshape(tape, ctx, {groups * tokens, channels});
  return ops::reshape(tape, out(tape, ctx), {groups, tokens, channels});
}

Tensor BandMixer::operator()(Tape& tape, const Tensor& x, Tensor* attention) const {
  const Shape shape = x.shape();
  if (shape.size() != 3) throw ShapeError("BandMixer expects (groups, tokens, channels), got " + shape_str(shape));
  const std::size_t rows = shape[0] * shape[1], channels = shape[2];
  Tensor flat = ops::reshape(tape, x, {rows, channels});
  Tensor normed = ops::reshape(tape, norm1(tape, flat), shape);
  Tensor y = ops::add(tape, x, attend(tape, normed, attention));
  Tensor y_flat = ops::reshape(tape, y, {rows, channels});
  Tensor hidden = ops::gelu(tape, ffn1(tape, norm2(tape, y_flat)));
  Tensor out_flat = ops::add(tape, y_flat, ffn2(tape, hidden));
  return ops::reshape(tape, out_flat, shape);
}

Encoder::Encoder(ParamStore& store, const std::string& prefix, std::size_t cin, std::size_t channels,
                 std::size_t n_blocks, Rng& rng) {
  if (n_blocks == 0) throw ConfigError(prefix + ": encoder needs at least one block");
  for (std::size_t i = 0; i < n_blocks; ++i) {
    blocks.emplace_back(store, prefix + "." + std::to_string(i), i == 0 ? cin : channels, channels, rng);
  }
}

Tensor Encoder::operator()(Tape& tape, const Tensor& x) const {
  Tensor h = x;
  for (const auto& b : blocks) h = b(tape, h);
  return h;
}

Decoder::Decoder(ParamStore& store, const std::string& prefix, std::size_t channels,
                 std::size_t n_blocks, Rng& rng) {
  for (std::size_t i = 0; i < n_blocks; ++i) {
    blocks.emplace_back(store, prefix + "." + std::to_string(i), channels, channels, rng);
  }
  head = Conv1d(store, prefix + ".head", channels, 1, 1, rng);
}

Tensor Decoder::operator()(Tape& tape, const Tensor& x) const {
  Tensor h = x;
  for (const auto& b : blocks) h = b(tape, h);
  return head(tape, h);
}

}  // namespace layers

BRN_NN_END
