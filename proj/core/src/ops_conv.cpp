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

#include <algorithm>
#include <vector>

#include "brn/error.hpp"
#include "brn/ops.hpp"
#include "ops_detail.hpp"

BRN_NN_BEGIN
namespace ops {

using namespace detail;

namespace {

struct ConvGeometry {
  std::size_t batch, cin, cout, len, kernel, stride, pad, out_len;
};

// col[(c * k + j), t] = x[c, t * stride + j - pad], zero outside [0, len).
void im2col(const Real* x, const ConvGeometry& g, Real* col) {
  const auto len = static_cast<std::ptrdiff_t>(g.len);
  const auto out_len = static_cast<std::ptrdiff_t>(g.out_len);
  for (std::size_t c = 0; c < g.cin; ++c) {
    const Real* xc = x + c * g.len;
    for (std::size_t j = 0; j < g.kernel; ++j) {
      Real* dst = col + (c * g.kernel + j) * g.out_len;
      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.pad);
      if (g.stride == 1) {
        // Valid outputs t satisfy 0 <= t + shift < len.
        const std::ptrdiff_t t0 = std::clamp<std::ptrdiff_t>(-shift, 0, out_len);
        const std::ptrdiff_t t1 = std::clamp<std::ptrdiff_t>(len - shift, t0, out_len);
        std::fill(dst, dst + t0, Real(0));
        std::copy(xc + t0 + shift, xc + t1 + shift, dst + t0);
        std::fill(dst + t1, dst + out_len, Real(0));
        continue;
      }
      for (std::ptrdiff_t t = 0; t < out_len; ++t) {
        const std::ptrdiff_t src = t * static_cast<std::ptrdiff_t>(g.stride) + shift;
        dst[t] = (src >= 0 && src < len) ? xc[src] : Real(0);
      }
    }
  }
}

void col2im_add(const Real* col, const ConvGeometry& g, Real* x) {
  const auto len = static_cast<std::ptrdiff_t>(g.len);
  const auto out_len = static_cast<std::ptrdiff_t>(g.out_len);
  for (std::size_t c = 0; c < g.cin; ++c) {
    Real* xc = x + c * g.len;
    for (std::size_t j = 0; j < g.kernel; ++j) {
      const Real* src = col + (c * g.kernel + j) * g.out_len;
      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.pad);
      if (g.stride == 1) {
        const std::ptrdiff_t t0 = std::clamp<std::ptrdiff_t>(-shift, 0, out_len);
        const std::ptrdiff_t t1 = std::clamp<std::ptrdiff_t>(len - shift, t0, out_len);
        Real* d = xc + shift;
        for (std::ptrdiff_t t = t0; t < t1; ++t) d[t] += src[t];
        continue;
      }
      for (std::ptrdiff_t t = 0; t < out_len; ++t) {
        const std::ptrdiff_t dst = t * static_cast<std::ptrdiff_t>(g.stride) + shift;
        if (dst >= 0 && dst < len) xc[dst] += src[t];
      }
    }
  }
}

// A 1x1 kernel with stride 1 and no padding multiplies the input directly.
bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1 && g.pad == 0; }

}  // namespace

Tensor conv1d(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv1dOptions& options) {
  require_rank(x, 3, "conv1d", "input");
  require_rank(weight, 3, "conv1d", "weight");
  ConvGeometry g{};
  g.batch = x.dim(0);
  g.cin = x.dim(1);
  g.len = x.dim(2);
  g.cout = weight.dim(0);
  g.kernel = weight.dim(2);
  require_dim(weight.dim(1), g.cin, "conv1d", "weight input channels");
  if (bias.defined()) require_dim(bias.numel(), g.cout, "conv1d", "bias size");
  if (options.stride == 0) throw ConfigError("conv1d: stride must be positive");
  g.stride = options.stride;
  g.pad = options.padding.value_or((g.kernel - 1) / 2);
  if (g.len + 2 * g.pad < g.kernel) throw ShapeError("conv1d: kernel longer than padded input");
  g.out_len = (g.len + 2 * g.pad - g.kernel) / g.stride + 1;

  Tensor out(Shape{g.batch, g.cout, g.out_len});
  const auto rows_w = static_cast<Eigen::Index>(g.cout);
  const auto cols_w = static_cast<Eigen::Index>(g.cin * g.kernel);
  const auto ol = static_cast<Eigen::Index>(g.out_len);
  ConstMatMap W(weight.data().data(), rows_w, cols_w);
  RealBuffer col;
  if (!is_pointwise(g)) col.resize(g.cin * g.kernel * g.out_len);
  for (std::size_t n = 0; n < g.batch; ++n) {
    MatMap Y(out.data().data() + n * g.cout * g.out_len, rows_w, ol);
    const Real* xn = x.data().data() + n * g.cin * g.len;
    if (is_pointwise(g)) {
      Y.noalias() = W * ConstMatMap(xn, cols_w, ol);
    } else {
      im2col(xn, g, col.data());
      Y.noalias() = W * ConstMatMap(col.data(), cols_w, ol);
    }
    if (bias.defined()) Y.colwise() += ConstVecMap(bias.data().data(), rows_w);
  }

  if (tape.tracks({&x, &weight, &bias})) {
    std::vector<Tensor> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    tape.record("conv1d", std::move(inputs), out, [x, weight, bias, g](std::span<const Real> grad) {
      const auto rows_w = static_cast<Eigen::Index>(g.cout);
      const auto cols_w = static_cast<Eigen::Index>(g.cin * g.kernel);
      const auto ol = static_cast<Eigen::Index>(g.out_len);
      ConstMatMap W(weight.data().data(), rows_w, cols_w);
      std::span<Real> gw, gb, gx;
      if (weight.requires_grad()) gw = weight.ensure_grad();
      if (bias.defined() && bias.requires_grad()) gb = bias.ensure_grad();
      if (x.requires_grad()) gx = x.ensure_grad();
      RealBuffer col, dcol;
      if (!is_pointwise(g)) {
        col.resize(g.cin * g.kernel * g.out_len);
        dcol.resize(col.size());
      }
      for (std::size_t n = 0; n < g.batch; ++n) {
        ConstMatMap G(grad.data() + n * g.cout * g.out_len, rows_w, ol);
        const Real* xn = x.data().data() + n * g.cin * g.len;
        if (!gb.empty()) VecMap(gb.data(), rows_w) += G.rowwise().sum();
        if (is_pointwise(g)) {
          if (!gw.empty()) MatMap(gw.data(), rows_w, cols_w).noalias() += G * ConstMatMap(xn, cols_w, ol).transpose();
          if (!gx.empty()) MatMap(gx.data() + n * g.cin * g.len, cols_w, ol).noalias() += W.transpose() * G;
        } else {
          if (!gw.empty()) {
            im2col(xn, g, col.data());
            MatMap(gw.data(), rows_w, cols_w).noalias() += G * ConstMatMap(col.data(), cols_w, ol).transpose();
          }
          if (!gx.empty()) {
            MatMap(dcol.data(), cols_w, ol).noalias() = W.transpose() * G;
            col2im_add(dcol.data(), g, gx.data() + n * g.cin * g.len);
          }
        }
      }
    });
  }
  return finish(out, "conv1d");
}

Tensor depthwise_conv1d(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 3, "depthwise_conv1d", "input");
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  require_rank(weight, 3, "depthwise_conv1d", "weight");
  require_dim(weight.dim(0), ch, "depthwise_conv1d", "weight channels");
  require_dim(weight.dim(1), 1, "depthwise_conv1d", "weight group width");
  const std::size_t k = weight.dim(2);
  if (bias.defined()) require_dim(bias.numel(), ch, "depthwise_conv1d", "bias size");
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
  const auto slen = static_cast<std::ptrdiff_t>(len);
  Tensor out(x.shape());
  auto xv = x.data();
  auto wv = weight.data();
  auto o = out.data();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      const Real* xc = xv.data() + (n * ch + c) * len;
      Real* yc = o.data() + (n * ch + c) * len;
      const Real b = bias.defined() ? bias.data()[c] : Real(0);
      std::fill(yc, yc + len, b);
      for (std::size_t j = 0; j < k; ++j) {
        const Real w = wv[c * k + j];
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
        const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(slen, slen - shift);
        for (std::ptrdiff_t t = t0; t < t1; ++t) yc[t] += w * xc[t + shift];
      }
    }
  }
  if (tape.tracks({&x, &weight, &bias})) {
    std::vector<Tensor> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    tape.record("depthwise_conv1d", std::move(inputs), out,
                [x, weight, bias, batch, ch, len, k, pad](std::span<const Real> g) mutable {
                  std::span<Real> gw, gb, gx;
                  if (weight.requires_grad()) gw = weight.ensure_grad();
                  if (bias.defined() && bias.requires_grad()) gb = bias.ensure_grad();
                  if (x.requires_grad()) gx = x.ensure_grad();
                  auto xv = x.data();
                  auto wv = weight.data();
                  const auto slen = static_cast<std::ptrdiff_t>(len);
                  for (std::size_t n = 0; n < batch; ++n) {
                    for (std::size_t c = 0; c < ch; ++c) {
                      const std::size_t base = (n * ch + c) * len;
                      const Real* gc = g.data() + base;
                      if (!gb.empty()) {
                        Real s = 0;
                        for (std::size_t t = 0; t < len; ++t) s += gc[t];
                        gb[c] += s;
                      }
                      for (std::size_t j = 0; j < k; ++j) {
                        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
                        const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -shift);
                        const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(slen, slen - shift);
                        if (!gw.empty()) {
                          Real s = 0;
                          for (std::ptrdiff_t t = t0; t < t1; ++t) s += gc[t] * xv[base + t + shift];
                          gw[c * k + j] += s;
                        }
                        if (!gx.empty()) {
                          const Real w = wv[c * k + j];
                          for (std::ptrdiff_t t = t0; t < t1; ++t) gx[base + t + shift] += w * gc[t];
                        }
                      }
                    }
                  }
                });
  }
  return finish(out, "depthwise_conv1d");
}

namespace {

// dst[t] += scale * sum of src over the zero-padded window centred at t.
void window_sum_add(const Real* src, Real* dst, std::size_t len, std::size_t pad, Real scale) {
  for (std::size_t t = 0; t < len; ++t) {
    const std::size_t lo = t >= pad ? t - pad : 0;
    const std::size_t hi = std::min(len, t + pad + 1);
    Real s = 0;
    for (std::size_t j = lo; j < hi; ++j) s += src[j];
    dst[t] += s * scale;
  }
}

}  // namespace

Tensor avg_pool1d(Tape& tape, const Tensor& x, std::size_t kernel) {
  require_rank(x, 3, "avg_pool1d", "input");
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("avg_pool1d: kernel must be odd");
  const std::size_t rows = x.dim(0) * x.dim(1);
  const std::size_t len = x.dim(2);
  const std::size_t pad = kernel / 2;
  const Real inv = Real(1) / static_cast<Real>(kernel);
  Tensor out(x.shape());
  auto xv = x.data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) window_sum_add(xv.data() + r * len, o.data() + r * len, len, pad, inv);
  if (tape.tracks({&x})) {
    // the window is symmetric, so the adjoint is the same windowed sum
    tape.record("avg_pool1d", {x}, out, [x, rows, len, pad, inv](std::span<const Real> g) {
      auto gx = x.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) window_sum_add(g.data() + r * len, gx.data() + r * len, len, pad, inv);
    });
  }
  return finish(out, "avg_pool1d");
}

}  // namespace ops
BRN_NN_END
