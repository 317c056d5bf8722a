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

#include "brn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>

#include "brn/error.hpp"
#include "ops_detail.hpp"

BRN_NN_BEGIN
namespace ops {

using namespace detail;

namespace {

// Output shape and per-axis input strides (0 on broadcast axes).
struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;
  bool same = false;
};

std::vector<std::size_t> contiguous_strides(const Shape& shape) {
  std::vector<std::size_t> s(shape.size());
  std::size_t acc = 1;
  for (std::size_t i = shape.size(); i-- > 0;) {
    s[i] = acc;
    acc *= shape[i];
  }
  return s;
}

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* op) {
  BroadcastPlan p;
  if (a == b) {
    p.out = a;
    p.same = true;
    return p;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  Shape pa(rank, 1), pb(rank, 1);
  std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
  const auto sa = contiguous_strides(pa);
  const auto sb = contiguous_strides(pb);
  p.out.resize(rank);
  p.stride_a.resize(rank);
  p.stride_b.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a) + " with " +
                       shape_str(b));
    }
    p.out[i] = std::max(pa[i], pb[i]);
    p.stride_a[i] = pa[i] == 1 ? 0 : sa[i];
    p.stride_b[i] = pb[i] == 1 ? 0 : sb[i];
  }
  return p;
}

// Calls f(i, ia, ib) for every output element i.
template <class F>
void for_each_broadcast(const BroadcastPlan& p, F&& f) {
  const std::size_t total = shape_numel(p.out);
  if (p.same) {
    for (std::size_t i = 0; i < total; ++i) f(i, i, i);
    return;
  }
  const std::size_t rank = p.out.size();
  const std::size_t inner = p.out.back();
  const std::size_t ia_step = p.stride_a.back();
  const std::size_t ib_step = p.stride_b.back();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t i = 0; i < total; i += inner) {
    for (std::size_t j = 0; j < inner; ++j) f(i + j, oa + j * ia_step, ob + j * ib_step);
    for (std::size_t d = rank - 1; d-- > 0;) {
      ++idx[d];
      oa += p.stride_a[d];
      ob += p.stride_b[d];
      if (idx[d] < p.out[d]) break;
      oa -= p.stride_a[d] * p.out[d];
      ob -= p.stride_b[d] * p.out[d];
      idx[d] = 0;
    }
  }
}

enum class BinaryKind { kAdd, kSub, kMul };

Tensor binary(Tape& tape, const Tensor& a, const Tensor& b, BinaryKind kind, const char* name) {
  auto plan = plan_broadcast(a.shape(), b.shape(), name);
  Tensor out(plan.out);
  auto o = out.data();
  auto av = a.data();
  auto bv = b.data();
  switch (kind) {
    case BinaryKind::kAdd:
      for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = av[ia] + bv[ib]; });
      break;
    case BinaryKind::kSub:
      for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = av[ia] - bv[ib]; });
      break;
    case BinaryKind::kMul:
      for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = av[ia] * bv[ib]; });
      break;
  }
  if (tape.tracks({&a, &b})) {
    tape.record(name, {a, b}, out,
                [a, b, plan, kind](std::span<const Real> g) mutable {
                  const bool need_a = a.requires_grad();
                  const bool need_b = b.requires_grad();
                  std::span<Real> ga, gb;
                  if (need_a) ga = a.ensure_grad();
                  if (need_b) gb = b.ensure_grad();
                  auto av = a.data();
                  auto bv = b.data();
                  if (plan.same) {
                    const std::size_t n = g.size();
                    switch (kind) {
                      case BinaryKind::kAdd:
                        if (need_a) for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                        if (need_b) for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
                        break;
                      case BinaryKind::kSub:
                        if (need_a) for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                        if (need_b) for (std::size_t i = 0; i < n; ++i) gb[i] -= g[i];
                        break;
                      case BinaryKind::kMul:
                        if (need_a) for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
                        if (need_b) for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * av[i];
                        break;
                    }
                    return;
                  }
                  for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                    switch (kind) {
                      case BinaryKind::kAdd:
                        if (need_a) ga[ia] += g[i];
                        if (need_b) gb[ib] += g[i];
                        break;
                      case BinaryKind::kSub:
                        if (need_a) ga[ia] += g[i];
                        if (need_b) gb[ib] -= g[i];
                        break;
                      case BinaryKind::kMul:
                        if (need_a) ga[ia] += g[i] * bv[ib];
                        if (need_b) gb[ib] += g[i] * av[ia];
                        break;
                    }
                  });
                });
  }
  return finish(out, name);
}

// Unary elementwise op whose derivative is expressed through input and output.
template <class Fwd, class Deriv>
Tensor unary(Tape& tape, const Tensor& x, const char* name, Fwd fwd, Deriv deriv) {
  Tensor out(x.shape());
  auto xv = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < xv.size(); ++i) o[i] = fwd(xv[i]);
  if (tape.tracks({&x})) {
    Tensor y = out;
    tape.record(name, {x}, out, [x, y, deriv](std::span<const Real> g) mutable {
      auto gx = x.ensure_grad();
      auto xv = x.data();
      auto yv = y.data();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
    });
  }
  return finish(out, name);
}

struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                     shape_str(s));
  }
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Tensor reduce_axis(Tape& tape, const Tensor& x, std::size_t axis, bool keepdim, bool average,
                   const char* name) {
  const auto sp = split_axis(x.shape(), axis, name);
  Shape out_shape = x.shape();
  if (keepdim) {
    out_shape[axis] = 1;
  } else {
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    if (out_shape.empty()) out_shape = {1};
  }
  Tensor out(out_shape);
  auto xv = x.data();
  auto o = out.data();
  const Real factor = average ? Real(1) / static_cast<Real>(sp.n) : Real(1);
  for (std::size_t a = 0; a < sp.outer; ++a) {
    Real* dst = o.data() + a * sp.inner;
    for (std::size_t k = 0; k < sp.n; ++k) {
      const Real* src = xv.data() + (a * sp.n + k) * sp.inner;
      for (std::size_t j = 0; j < sp.inner; ++j) dst[j] += src[j];
    }
    for (std::size_t j = 0; j < sp.inner; ++j) dst[j] *= factor;
  }
  if (tape.tracks({&x})) {
    tape.record(name, {x}, out, [x, sp, factor](std::span<const Real> g) mutable {
      auto gx = x.ensure_grad();
      for (std::size_t a = 0; a < sp.outer; ++a) {
        const Real* src = g.data() + a * sp.inner;
        for (std::size_t k = 0; k < sp.n; ++k) {
          Real* dst = gx.data() + (a * sp.n + k) * sp.inner;
          for (std::size_t j = 0; j < sp.inner; ++j) dst[j] += factor * src[j];
        }
      }
    });
  }
  return finish(out, name);
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(tape, a, b, BinaryKind::kAdd, "add");
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(tape, a, b, BinaryKind::kSub, "sub");
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(tape, a, b, BinaryKind::kMul, "mul");
}

Tensor scale(Tape& tape, const Tensor& x, Real factor) {
  return unary(
      tape, x, "scale", [factor](Real v) { return v * factor; },
      [factor](Real, Real) { return factor; });
}

Tensor add_scalar(Tape& tape, const Tensor& x, Real value) {
  return unary(
      tape, x, "add_scalar", [value](Real v) { return v + value; }, [](Real, Real) { return Real(1); });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, "sigmoid", [](Real v) { return Real(1) / (Real(1) + std::exp(-v)); },
      [](Real, Real y) { return y * (Real(1) - y); });
}

Tensor tanh(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, "tanh", [](Real v) { return std::tanh(v); },
      [](Real, Real y) { return Real(1) - y * y; });
}

namespace {
constexpr Real kGeluC = static_cast<Real>(0.7978845608028654);  // sqrt(2 / pi)
constexpr Real kGeluA = static_cast<Real>(0.044715);
}  // namespace

Tensor gelu(Tape& tape, const Tensor& x) {
  using Arr = Eigen::Array<Real, Eigen::Dynamic, 1>;
  using ArrMap = Eigen::Map<Arr>;
  using ConstArrMap = Eigen::Map<const Arr>;
  const auto n = static_cast<Eigen::Index>(x.numel());
  Tensor out(x.shape());
  ConstArrMap xv(x.data().data(), n);
  // tanh of the inner polynomial, kept for the backward pass.
  auto th = std::make_shared<Arr>((kGeluC * (xv + kGeluA * xv.cube())).tanh());
  ArrMap(out.data().data(), n) = Real(0.5) * xv * (Real(1) + *th);
  if (tape.tracks({&x})) {
    tape.record("gelu", {x}, out, [x, th, n](std::span<const Real> g) {
      ConstArrMap xv(x.data().data(), n);
      ConstArrMap gv(g.data(), n);
      const Arr du = kGeluC * (Real(1) + Real(3) * kGeluA * xv.square());
      ArrMap(x.ensure_grad().data(), n) +=
          gv * (Real(0.5) * (Real(1) + *th) + Real(0.5) * xv * (Real(1) - th->square()) * du);
    });
  }
  return finish(out, "gelu");
}

Tensor softmax(Tape& tape, const Tensor& x) {
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.numel() / n;
  Tensor out(x.shape());
  auto xv = x.data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* src = xv.data() + r * n;
    Real* dst = o.data() + r * n;
    const Real mx = *std::max_element(src, src + n);
    Real total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      dst[j] = std::exp(src[j] - mx);
      total += dst[j];
    }
    for (std::size_t j = 0; j < n; ++j) dst[j] /= total;
  }
  if (tape.tracks({&x})) {
    Tensor y = out;
    tape.record("softmax", {x}, out, [x, y, n, rows](std::span<const Real> g) mutable {
      auto gx = x.ensure_grad();
      auto yv = y.data();
      for (std::size_t r = 0; r < rows; ++r) {
        const Real* yr = yv.data() + r * n;
        const Real* gr = g.data() + r * n;
        Real dot = 0;
        for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
        for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += yr[j] * (gr[j] - dot);
      }
    });
  }
  return finish(out, "softmax");
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps) {
  if (x.ndim() < 2) throw ShapeError("layer_norm: input needs rank >= 2, got " + shape_str(x.shape()));
  const std::size_t n = x.dim(0);
  const std::size_t c = x.dim(1);
  const std::size_t len = x.numel() / (n * c);
  const bool affine = gamma.defined();
  if (affine) {
    require_dim(gamma.numel(), c, "layer_norm", "gamma size");
    require_dim(beta.numel(), c, "layer_norm", "beta size");
  }
  const RealBuffer ones(c, Real(1)), zeros(c, Real(0));
  const Real* gm = affine ? gamma.data().data() : ones.data();
  const Real* bt = affine ? beta.data().data() : zeros.data();
  const Real inv_c = Real(1) / static_cast<Real>(c);

  Tensor out(x.shape());
  auto xhat = std::make_shared<RealBuffer>(x.numel());
  auto rstd = std::make_shared<RealBuffer>(n * len);
  const Real* xv = x.data().data();
  Real* o = out.data().data();
  Real* xh = xhat->data();
  RealBuffer mu(len), var(len);
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t base = b * c * len;
    std::fill(mu.begin(), mu.end(), Real(0));
    std::fill(var.begin(), var.end(), Real(0));
    for (std::size_t ch = 0; ch < c; ++ch) {
      const Real* xr = xv + base + ch * len;
      for (std::size_t t = 0; t < len; ++t) mu[t] += xr[t];
    }
    for (std::size_t t = 0; t < len; ++t) mu[t] *= inv_c;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const Real* xr = xv + base + ch * len;
      for (std::size_t t = 0; t < len; ++t) {
        const Real d = xr[t] - mu[t];
        var[t] += d * d;
      }
    }
    Real* rs = rstd->data() + b * len;
    for (std::size_t t = 0; t < len; ++t) rs[t] = Real(1) / std::sqrt(var[t] * inv_c + eps);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const Real* xr = xv + base + ch * len;
      Real* hr = xh + base + ch * len;
      Real* orow = o + base + ch * len;
      for (std::size_t t = 0; t < len; ++t) {
        hr[t] = (xr[t] - mu[t]) * rs[t];
        orow[t] = hr[t] * gm[ch] + bt[ch];
      }
    }
  }
  if (tape.tracks({&x, &gamma, &beta})) {
    std::vector<Tensor> inputs{x};
    if (affine) {
      inputs.push_back(gamma);
      inputs.push_back(beta);
    }
    tape.record("layer_norm", std::move(inputs), out,
                [x, gamma, beta, affine, n, c, len, inv_c, xhat, rstd](std::span<const Real> g) {
                  const Real* xh = xhat->data();
                  if (affine && gamma.requires_grad()) {
                    Real* gg = gamma.ensure_grad().data();
                    for (std::size_t b = 0; b < n; ++b)
                      for (std::size_t ch = 0; ch < c; ++ch) {
                        const std::size_t i0 = (b * c + ch) * len;
                        Real s = 0;
                        for (std::size_t t = 0; t < len; ++t) s += g[i0 + t] * xh[i0 + t];
                        gg[ch] += s;
                      }
                  }
                  if (affine && beta.requires_grad()) {
                    Real* gb = beta.ensure_grad().data();
                    for (std::size_t b = 0; b < n; ++b)
                      for (std::size_t ch = 0; ch < c; ++ch) {
                        const std::size_t i0 = (b * c + ch) * len;
                        Real s = 0;
                        for (std::size_t t = 0; t < len; ++t) s += g[i0 + t];
                        gb[ch] += s;
                      }
                  }
                  if (!x.requires_grad()) return;
                  const RealBuffer ones(c, Real(1));
                  const Real* gm = affine ? gamma.data().data() : ones.data();
                  Real* gx = x.ensure_grad().data();
                  RealBuffer m1(len), m2(len);
                  for (std::size_t b = 0; b < n; ++b) {
                    const std::size_t base = b * c * len;
                    std::fill(m1.begin(), m1.end(), Real(0));
                    std::fill(m2.begin(), m2.end(), Real(0));
                    for (std::size_t ch = 0; ch < c; ++ch) {
                      const Real* gr = g.data() + base + ch * len;
                      const Real* hr = xh + base + ch * len;
                      for (std::size_t t = 0; t < len; ++t) {
                        const Real v = gr[t] * gm[ch];
                        m1[t] += v;
                        m2[t] += v * hr[t];
                      }
                    }
                    const Real* rs = rstd->data() + b * len;
                    for (std::size_t ch = 0; ch < c; ++ch) {
                      const Real* gr = g.data() + base + ch * len;
                      const Real* hr = xh + base + ch * len;
                      Real* dr = gx + base + ch * len;
                      for (std::size_t t = 0; t < len; ++t) {
                        dr[t] += rs[t] * (gr[t] * gm[ch] - m1[t] * inv_c - hr[t] * m2[t] * inv_c);
                      }
                    }
                  }
                });
  }
  return finish(out, "layer_norm");
}

Tensor sum(Tape& tape, const Tensor& x, std::size_t axis, bool keepdim) {
  return reduce_axis(tape, x, axis, keepdim, false, "sum");
}

Tensor mean(Tape& tape, const Tensor& x, std::size_t axis, bool keepdim) {
  return reduce_axis(tape, x, axis, keepdim, true, "mean");
}

Tensor sum_all(Tape& tape, const Tensor& x) {
  return reduce_axis(tape, reshape(tape, x, {x.numel()}), 0, false, false, "sum_all");
}

Tensor mean_all(Tape& tape, const Tensor& x) {
  return reduce_axis(tape, reshape(tape, x, {x.numel()}), 0, false, true, "mean_all");
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  if (a.ndim() != b.ndim() || (a.ndim() != 2 && a.ndim() != 3)) {
    throw ShapeError("matmul: operands must both be 2-D or 3-D, got " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  }
  const bool batched = a.ndim() == 3;
  const std::size_t batch = batched ? a.dim(0) : 1;
  if (batched) require_dim(b.dim(0), batch, "matmul", "batch size of b");
  const std::size_t ar = a.shape()[a.ndim() - 2], ac = a.shape()[a.ndim() - 1];
  const std::size_t br = b.shape()[b.ndim() - 2], bc = b.shape()[b.ndim() - 1];
  const std::size_t m = trans_a ? ac : ar;
  const std::size_t k = trans_a ? ar : ac;
  const std::size_t kb = trans_b ? bc : br;
  const std::size_t nn = trans_b ? br : bc;
  if (k != kb) {
    throw ShapeError("matmul: inner dimensions differ for " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  Shape out_shape = batched ? Shape{batch, m, nn} : Shape{m, nn};
  Tensor out(out_shape);
  const auto ia = static_cast<Eigen::Index>(ar), ja = static_cast<Eigen::Index>(ac);
  const auto ib = static_cast<Eigen::Index>(br), jb = static_cast<Eigen::Index>(bc);
  const auto mo = static_cast<Eigen::Index>(m), no = static_cast<Eigen::Index>(nn);
  for (std::size_t s = 0; s < batch; ++s) {
    ConstMatMap A(a.data().data() + s * ar * ac, ia, ja);
    ConstMatMap B(b.data().data() + s * br * bc, ib, jb);
    MatMap C(out.data().data() + s * m * nn, mo, no);
    if (!trans_a && !trans_b) C.noalias() = A * B;
    else if (trans_a && !trans_b) C.noalias() = A.transpose() * B;
    else if (!trans_a && trans_b) C.noalias() = A * B.transpose();
    else C.noalias() = A.transpose() * B.transpose();
  }
  if (tape.tracks({&a, &b})) {
    tape.record("matmul", {a, b}, out,
                [a, b, trans_a, trans_b, batch, ar, ac, br, bc, m, nn](std::span<const Real> g) mutable {
                  const auto ia = static_cast<Eigen::Index>(ar), ja = static_cast<Eigen::Index>(ac);
                  const auto ib = static_cast<Eigen::Index>(br), jb = static_cast<Eigen::Index>(bc);
                  const auto mo = static_cast<Eigen::Index>(m), no = static_cast<Eigen::Index>(nn);
                  std::span<Real> ga, gb;
                  if (a.requires_grad()) ga = a.ensure_grad();
                  if (b.requires_grad()) gb = b.ensure_grad();
                  for (std::size_t s = 0; s < batch; ++s) {
                    ConstMatMap A(a.data().data() + s * ar * ac, ia, ja);
                    ConstMatMap B(b.data().data() + s * br * bc, ib, jb);
                    ConstMatMap G(g.data() + s * m * nn, mo, no);
                    if (!ga.empty()) {
                      MatMap GA(ga.data() + s * ar * ac, ia, ja);
                      // d(op(A)) = G op(B)^T
                      if (!trans_a && !trans_b) GA.noalias() += G * B.transpose();
                      else if (!trans_a && trans_b) GA.noalias() += G * B;
                      else if (trans_a && !trans_b) GA.noalias() += B * G.transpose();
                      else GA.noalias() += B.transpose() * G.transpose();
                    }
                    if (!gb.empty()) {
                      MatMap GB(gb.data() + s * br * bc, ib, jb);
                      // d(op(B)) = op(A)^T G
                      if (!trans_a && !trans_b) GB.noalias() += A.transpose() * G;
                      else if (trans_a && !trans_b) GB.noalias() += A * G;
                      else if (!trans_a && trans_b) GB.noalias() += G.transpose() * A;
                      else GB.noalias() += G.transpose() * A.transpose();
                    }
                  }
                });
  }
  return finish(out, "matmul");
}

Tensor concat(Tape& tape, std::span<const Tensor> inputs, std::size_t axis) {
  if (inputs.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = inputs.front().shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + shape_str(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  for (const auto& t : inputs) {
    if (t.ndim() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < first.size(); ++d) {
      if (d != axis && t.dim(d) != first[d]) {
        throw ShapeError("concat: shape " + shape_str(t.shape()) + " incompatible with " +
                         shape_str(first) + " along axis " + std::to_string(axis));
      }
    }
    out_shape[axis] += t.dim(axis);
  }
  const auto sp = split_axis(out_shape, axis, "concat");
  for (const auto& t : inputs) widths.push_back(t.dim(axis) * sp.inner);
  const std::size_t row = sp.n * sp.inner;
  Tensor out(out_shape);
  auto o = out.data();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto src = inputs[i].data();
    for (std::size_t a = 0; a < sp.outer; ++a) {
      std::copy_n(src.data() + a * widths[i], widths[i], o.data() + a * row + offset);
    }
    offset += widths[i];
  }
  if (tape.tracks(inputs)) {
    std::vector<Tensor> ins(inputs.begin(), inputs.end());
    tape.record("concat", ins, out, [ins, widths, sp, row](std::span<const Real> g) mutable {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < ins.size(); ++i) {
        if (ins[i].requires_grad()) {
          auto gi = ins[i].ensure_grad();
          for (std::size_t a = 0; a < sp.outer; ++a) {
            const Real* src = g.data() + a * row + offset;
            Real* dst = gi.data() + a * widths[i];
            for (std::size_t j = 0; j < widths[i]; ++j) dst[j] += src[j];
          }
        }
        offset += widths[i];
      }
    });
  }
  return finish(out, "concat");
}

Tensor slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const auto sp = split_axis(x.shape(), axis, "slice");
  if (begin >= end || end > sp.n) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for axis of size " + std::to_string(sp.n));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  Tensor out(out_shape);
  const std::size_t width = (end - begin) * sp.inner;
  const std::size_t row = sp.n * sp.inner;
  const std::size_t offset = begin * sp.inner;
  auto xv = x.data();
  auto o = out.data();
  for (std::size_t a = 0; a < sp.outer; ++a) {
    std::copy_n(xv.data() + a * row + offset, width, o.data() + a * width);
  }
  if (tape.tracks({&x})) {
    tape.record("slice", {x}, out, [x, sp, width, row, offset](std::span<const Real> g) mutable {
      auto gx = x.ensure_grad();
      for (std::size_t a = 0; a < sp.outer; ++a) {
        Real* dst = gx.data() + a * row + offset;
        const Real* src = g.data() + a * width;
        for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
      }
    });
  }
  return finish(out, "slice");
}

Tensor broadcast_to(Tape& tape, const Tensor& x, const Shape& shape) {
  auto plan = plan_broadcast(x.shape(), shape, "broadcast_to");
  if (plan.out != shape) {
    throw ShapeError("broadcast_to: " + shape_str(x.shape()) + " does not broadcast to " +
                     shape_str(shape));
  }
  Tensor out(shape);
  auto xv = x.data();
  auto o = out.data();
  for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t) { o[i] = xv[ia]; });
  if (tape.tracks({&x})) {
    tape.record("broadcast_to", {x}, out, [x, plan](std::span<const Real> g) mutable {
      auto gx = x.ensure_grad();
      for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t) { gx[ia] += g[i]; });
    });
  }
  return out;
}

Tensor reshape(Tape& tape, const Tensor& x, const Shape& shape) {
  Tensor out = x.view(shape);
  if (tape.tracks({&x})) {
    tape.record("reshape", {x}, out, [x](std::span<const Real> g) mutable { accumulate_grad(x, g); });
  }
  return out;
}

Tensor permute(Tape& tape, const Tensor& x, const std::vector<std::size_t>& axes) {
  const Shape& in = x.shape();
  const std::size_t rank = in.size();
  if (axes.size() != rank) throw ShapeError("permute: axes rank mismatch for " + shape_str(in));
  std::vector<bool> seen(rank, false);
  for (auto ax : axes) {
    if (ax >= rank || seen[ax]) throw ShapeError("permute: axes are not a permutation");
    seen[ax] = true;
  }
  const auto in_strides = contiguous_strides(in);
  Shape out_shape(rank);
  std::vector<std::size_t> src_stride(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in[axes[i]];
    src_stride[i] = in_strides[axes[i]];
  }
  // Reuse the broadcast iterator: "a" walks the output contiguously, "b" the source.
  BroadcastPlan plan;
  plan.out = out_shape;
  plan.stride_a = contiguous_strides(out_shape);
  plan.stride_b = src_stride;
  Tensor out(out_shape);
  auto xv = x.data();
  auto o = out.data();
  for_each_broadcast(plan, [&](std::size_t i, std::size_t, std::size_t ib) { o[i] = xv[ib]; });
  if (tape.tracks({&x})) {
    tape.record("permute", {x}, out, [x, plan](std::span<const Real> g) mutable {
      auto gx = x.ensure_grad();
      for_each_broadcast(plan, [&](std::size_t i, std::size_t, std::size_t ib) { gx[ib] += g[i]; });
    });
  }
  return out;
}

}  // namespace ops
BRN_NN_END
