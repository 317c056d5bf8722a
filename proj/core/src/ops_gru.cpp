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

#include <cmath>
#include <vector>

#include "brn/error.hpp"
#include "brn/ops.hpp"
#include "ops_detail.hpp"

BRN_NN_BEGIN
namespace ops {

using namespace detail;

namespace {

inline Real sigm(Real v) { return Real(1) / (Real(1) + std::exp(-v)); }

// (N, C, T) -> rows t * N + n of a (T * N, C) matrix.
void to_time_major(const Real* x, std::size_t n, std::size_t c, std::size_t len, Real* out) {
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const Real* src = x + (b * c + ch) * len;
      for (std::size_t t = 0; t < len; ++t) out[(t * n + b) * c + ch] = src[t];
    }
}

void from_time_major_add(const Real* in, std::size_t n, std::size_t c, std::size_t len, Real* x) {
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      Real* dst = x + (b * c + ch) * len;
      for (std::size_t t = 0; t < len; ++t) dst[t] += in[(t * n + b) * c + ch];
    }
}

struct GruSaved {
  RealBuffer r, z, cand, gh_n;  // (T * N, H) each
  RealBuffer h;                 // (T + 1) * N * H, h[0] = 0
};

}  // namespace

Tensor gru(Tape& tape, const Tensor& x, const Tensor& w_ih, const Tensor& w_hh,
           const Tensor& b_ih, const Tensor& b_hh) {
  require_rank(x, 3, "gru", "input");
  require_rank(w_ih, 2, "gru", "w_ih");
  require_rank(w_hh, 2, "gru", "w_hh");
  const std::size_t n = x.dim(0), c = x.dim(1), len = x.dim(2);
  const std::size_t hid = w_hh.dim(1);
  require_dim(w_hh.dim(0), 3 * hid, "gru", "w_hh rows");
  require_dim(w_ih.dim(0), 3 * hid, "gru", "w_ih rows");
  require_dim(w_ih.dim(1), c, "gru", "w_ih columns");
  require_dim(b_ih.numel(), 3 * hid, "gru", "b_ih size");
  require_dim(b_hh.numel(), 3 * hid, "gru", "b_hh size");

  const auto rows = static_cast<Eigen::Index>(len * n);
  const auto ec = static_cast<Eigen::Index>(c);
  const auto eh = static_cast<Eigen::Index>(hid);
  const auto en = static_cast<Eigen::Index>(n);
  const auto g3 = static_cast<Eigen::Index>(3 * hid);

  RealBuffer xt(len * n * c);
  to_time_major(x.data().data(), n, c, len, xt.data());
  RowMat gx = ConstMatMap(xt.data(), rows, ec) * ConstMatMap(w_ih.data().data(), g3, ec).transpose();
  gx.rowwise() += ConstVecMap(b_ih.data().data(), g3).transpose();

  GruSaved s;
  s.r.resize(len * n * hid);
  s.z.resize(len * n * hid);
  s.cand.resize(len * n * hid);
  s.gh_n.resize(len * n * hid);
  s.h.assign((len + 1) * n * hid, Real(0));
  ConstMatMap Whh(w_hh.data().data(), g3, eh);
  const auto bhh = ConstVecMap(b_hh.data().data(), g3).transpose();
  RowMat gh(en, g3);
  for (std::size_t t = 0; t < len; ++t) {
    ConstMatMap hprev(s.h.data() + t * n * hid, en, eh);
    gh.noalias() = hprev * Whh.transpose();
    gh.rowwise() += bhh;
    for (std::size_t b = 0; b < n; ++b) {
      const Real* gxr = gx.data() + (t * n + b) * 3 * hid;
      const Real* ghr = gh.data() + b * 3 * hid;
      const std::size_t o = (t * n + b) * hid;
      const Real* hp = s.h.data() + t * n * hid + b * hid;
      Real* hn = s.h.data() + (t + 1) * n * hid + b * hid;
      for (std::size_t j = 0; j < hid; ++j) {
        const Real r = sigm(gxr[j] + ghr[j]);
        const Real z = sigm(gxr[hid + j] + ghr[hid + j]);
        const Real ghn = ghr[2 * hid + j];
        const Real cand = std::tanh(gxr[2 * hid + j] + r * ghn);
        s.r[o + j] = r;
        s.z[o + j] = z;
        s.cand[o + j] = cand;
        s.gh_n[o + j] = ghn;
        hn[j] = (Real(1) - z) * cand + z * hp[j];
      }
    }
  }

  Tensor out(Shape{n, hid, len});
  auto o = out.data();
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t j = 0; j < hid; ++j)
        o[(b * hid + j) * len + t] = s.h[(t + 1) * n * hid + b * hid + j];

  if (tape.tracks({&x, &w_ih, &w_hh, &b_ih, &b_hh})) {
    tape.record("gru", {x, w_ih, w_hh, b_ih, b_hh}, out,
                [x, w_ih, w_hh, b_ih, b_hh, n, c, len, hid,
                 s = std::move(s)](std::span<const Real> grad) mutable {
                  const auto rows = static_cast<Eigen::Index>(len * n);
                  const auto ec = static_cast<Eigen::Index>(c);
                  const auto eh = static_cast<Eigen::Index>(hid);
                  const auto en = static_cast<Eigen::Index>(n);
                  const auto g3 = static_cast<Eigen::Index>(3 * hid);
                  RowMat dgx(rows, g3), dgh(rows, g3);
                  RowMat dh_next = RowMat::Zero(en, eh);
                  ConstMatMap Whh(w_hh.data().data(), g3, eh);
                  for (std::size_t t = len; t-- > 0;) {
                    for (std::size_t b = 0; b < n; ++b) {
                      const std::size_t o = (t * n + b) * hid;
                      const Real* hp = s.h.data() + t * n * hid + b * hid;
                      Real* dgxr = dgx.data() + (t * n + b) * 3 * hid;
                      Real* dghr = dgh.data() + (t * n + b) * 3 * hid;
                      Real* dhn = dh_next.data() + b * hid;
                      for (std::size_t j = 0; j < hid; ++j) {
                        const Real dh = grad[(b * hid + j) * len + t] + dhn[j];
                        const Real r = s.r[o + j], z = s.z[o + j], cand = s.cand[o + j];
                        const Real dcand = dh * (Real(1) - z);
                        const Real dz = dh * (hp[j] - cand);
                        const Real dan = dcand * (Real(1) - cand * cand);
                        const Real dar = dan * s.gh_n[o + j] * r * (Real(1) - r);
                        const Real daz = dz * z * (Real(1) - z);
                        dgxr[j] = dar;
                        dgxr[hid + j] = daz;
                        dgxr[2 * hid + j] = dan;
                        dghr[j] = dar;
                        dghr[hid + j] = daz;
                        dghr[2 * hid + j] = dan * r;
                        dhn[j] = dh * z;
                      }
                    }
                    dh_next.noalias() += ConstMatMap(dgh.data() + t * n * 3 * hid, en, g3) * Whh;
                  }
                  if (w_hh.requires_grad()) {
                    MatMap(w_hh.ensure_grad().data(), g3, eh).noalias() +=
                        dgh.transpose() * ConstMatMap(s.h.data(), rows, eh);
                  }
                  if (b_hh.requires_grad()) {
                    VecMap(b_hh.ensure_grad().data(), g3) += dgh.colwise().sum().transpose();
                  }
                  if (b_ih.requires_grad()) {
                    VecMap(b_ih.ensure_grad().data(), g3) += dgx.colwise().sum().transpose();
                  }
                  if (w_ih.requires_grad()) {
                    RealBuffer xt(len * n * c);
                    to_time_major(x.data().data(), n, c, len, xt.data());
                    MatMap(w_ih.ensure_grad().data(), g3, ec).noalias() +=
                        dgx.transpose() * ConstMatMap(xt.data(), rows, ec);
                  }
                  if (x.requires_grad()) {
                    RowMat dxt = dgx * ConstMatMap(w_ih.data().data(), g3, ec);
                    from_time_major_add(dxt.data(), n, c, len, x.ensure_grad().data());
                  }
                });
  }
  return finish(out, "gru");
}

}  // namespace ops
BRN_NN_END
