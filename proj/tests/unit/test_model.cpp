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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "brn/error.hpp"
#include "brn/grad_check.hpp"
#include "brn/model.hpp"
#include "brn/train.hpp"
#include "nn_support.hpp"

using namespace brn;

namespace {

Tensor weighted_sum(Tape& tape, const Tensor& y, std::uint64_t seed) {
  return ops::sum_all(tape, ops::mul(tape, y, test::random_tensor(y.shape(), seed)));
}

// Closed-form parameter count, written from the layer definitions.
std::size_t expected_params(std::size_t c, std::size_t blocks, std::size_t k) {
  auto inception = [](std::size_t cin, std::size_t cout) { return cout / 4 * cin * 10 + cout; };
  const std::size_t encoder = inception(1, c) + (blocks - 1) * inception(c, c);
  const std::size_t decoder = blocks * inception(c, c) + c + 1;
  const std::size_t norm = 2 * c, gru = 6 * c * c + 6 * c, pointwise = c * c + c;
  const std::size_t dw_pw = 6 * c + c * c + c;
  const std::size_t fullband = encoder + norm + gru + pointwise + decoder + pointwise + norm + (3 * c + 1) + (2 * c * c + 2 * c);
  const std::size_t mixer = 8 * c * c + 10 * c;
  const std::size_t band = k * c + encoder + dw_pw + (c * (c / 4) + c / 4) + (c / 4 * c + c) + (3 * c * c + c) + gru +
                           pointwise + dw_pw + mixer + decoder;
  return fullband + band;
}

// One element of every parameter tensor, chosen by seed.
std::vector<GradProbe> probes_for(const ParamStore& store, std::uint64_t seed, const std::string& prefix = "") {
  std::mt19937_64 rng(seed);
  std::vector<GradProbe> probes;
  for (const auto& p : store.params()) {
    if (p.name.rfind(prefix, 0) != 0) continue;
    std::uniform_int_distribution<std::size_t> pick(0, p.value.numel() - 1);
    probes.push_back({p.name, p.value, pick(rng)});
  }
  return probes;
}

void randomize_zero_params(const ParamStore& store, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(-0.3, 0.3);
  for (const auto& p : store.params()) {
    Tensor t = p.value;
    bool all_zero = true;
    for (auto v : t.data()) all_zero = all_zero && v == 0;
    if (all_zero)
      for (auto& v : t.data()) v = static_cast<Real>(ud(rng));
  }
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("full-band conditioner shapes and gate range") {
    BandRouteNet model(ModelConfig::toy(8, 32, 3), {}, 1);
    Tape tape;
    const auto fb = model.fullband_condition(tape, test::random_tensor({2, 1, 32}, 2, -3, 3));
    CHECK(fb.h_f.shape() == Shape{2, 8, 32});
    CHECK(fb.z_f.shape() == Shape{2, 8, 32});
    CHECK(fb.d_f.shape() == Shape{2, 1, 32});
    CHECK(fb.lambda_gate.shape() == Shape{2, 1, 32});
    CHECK(fb.tau.shape() == Shape{2, 8, 32});
    CHECK(fb.psi.shape() == Shape{2, 8, 32});
    for (auto v : fb.lambda_gate.data()) {
      CHECK(v > 0);
      CHECK(v < 1);
    }
  }

  TEST_CASE("full-band conditioner gradients") {
    BandRouteNet model(ModelConfig::toy(8, 16, 2), {}, 3);
    randomize_zero_params(model.params(), 4);
    Tensor x = test::random_tensor({2, 1, 16}, 5);
    auto probes = probes_for(model.params(), 6, "fullband.");
    for (std::size_t i = 0; i < 16; i += 5) probes.push_back({"x", x, i});
    auto f = [&](Tape& tape) {
      const auto fb = model.fullband_condition(tape, x);
      Tensor s = ops::add(tape, weighted_sum(tape, fb.d_f, 1), weighted_sum(tape, fb.lambda_gate, 2));
      s = ops::add(tape, s, weighted_sum(tape, fb.tau, 3));
      return ops::add(tape, s, weighted_sum(tape, fb.psi, 4));
    };
    CHECK(grad_check(f, probes, 1e-6).max_rel_error <= 1e-4);
  }

  TEST_CASE("forced gate zero keeps e and gate one takes f") {
    BandRouteNet model(ModelConfig::toy(8, 32, 3), {}, 2);
    Tensor x = test::random_tensor({2, 1, 32}, 3);
    Tape tape;
    ForwardOptions off;
    off.forced_gate = Real(0);
    auto r0 = model.forward(tape, x, off);
    CHECK(test::bit_equal(r0.diag.latents.z, r0.diag.latents.e));
    ForwardOptions on;
    on.forced_gate = Real(1);
    auto r1 = model.forward(tape, x, on);
    CHECK(test::bit_equal(r1.diag.latents.z, r1.diag.latents.f));
    // the proposal is a real change, so the two settings differ
    CHECK(test::max_abs_diff(r0.y, r1.y) > 0);
  }

  TEST_CASE("property: routed latent lies between e and f") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      BandRouteNet model(ModelConfig::toy(8, 16, 3), {}, seed);
      randomize_zero_params(model.params(), seed + 100);
      Tape tape;
      const auto lat = model.forward(tape, test::random_tensor({2, 1, 16}, seed, -2, 2)).diag.latents;
      const auto e = lat.e.data(), f = lat.f.data(), z = lat.z.data(), g = lat.g.data();
      for (std::size_t i = 0; i < z.size(); ++i) {
        CHECK(g[i] >= 0);
        CHECK(g[i] <= 1);
        const double lo = std::min(e[i], f[i]), hi = std::max(e[i], f[i]);
        CHECK(z[i] >= lo - 1e-12);
        CHECK(z[i] <= hi + 1e-12);
      }
    }
  }

  TEST_CASE("single-band adapter equals its row in the batched adapter") {
    BandRouteNet model(ModelConfig::toy(8, 16, 3), {}, 4);
    Tensor x = test::random_tensor({2, 1, 16}, 5);
    Tape tape;
    const auto fb = model.fullband_condition(tape, x);
    Tensor bands = model.decompose(x);
    const auto all = model.band_adapters(tape, bands, fb.tau, fb.psi);
    for (std::size_t k = 0; k < 3; ++k) {
      Tensor xk({2, 1, 16});
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t t = 0; t < 16; ++t) xk.data()[b * 16 + t] = bands.data()[(b * 3 + k) * 16 + t];
      const auto one = model.band_adapter(tape, xk, k, fb.tau, fb.psi);
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t i = 0; i < 8 * 16; ++i)
          CHECK(one.z.data()[b * 128 + i] == doctest::Approx(all.z.data()[(b * 3 + k) * 128 + i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(model.band_adapter(tape, x, 3, fb.tau, fb.psi), ShapeError);
  }

  TEST_CASE("band weights are shared: only the embedding grows with K") {
    auto two = ModelConfig::toy(8, 16, 2);
    auto five = ModelConfig::toy(8, 16, 5);
    BandRouteNet a(two), b(five);
    CHECK(b.count_params() - a.count_params() == 3 * 8);
    CHECK(a.params().size() == b.params().size());
  }

  TEST_CASE("cross-band fusion keeps shape") {
    BandRouteNet model(ModelConfig::toy(8, 8, 3), {}, 1);
    Tape tape;
    Tensor att;
    Tensor out = model.cross_band_fuse(tape, test::random_tensor({2, 3, 8, 8}, 2), &att);
    CHECK(out.shape() == Shape{2, 3, 8, 8});
    CHECK(att.shape() == Shape{2 * 8 * 4, 3, 3});
    CHECK_THROWS_AS(model.cross_band_fuse(tape, test::random_tensor({2, 3, 4, 8}, 2)), ShapeError);
  }

  TEST_CASE("fusion with one band attends only to itself") {
    BandRouteNet model(ModelConfig::toy(8, 8, 1), {}, 1);
    Tape tape;
    Tensor att;
    model.cross_band_fuse(tape, test::random_tensor({1, 1, 8, 8}, 3), &att);
    for (auto v : att.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("cross-band fusion gradients") {
    BandRouteNet model(ModelConfig::toy(8, 8, 2), {}, 5);
    randomize_zero_params(model.params(), 6);
    Tensor z = test::random_tensor({1, 2, 8, 8}, 7);
    auto probes = probes_for(model.params(), 8, "fusion.");
    for (std::size_t i = 0; i < z.numel(); i += 13) probes.push_back({"z", z, i});
    auto f = [&](Tape& tape) { return weighted_sum(tape, model.cross_band_fuse(tape, z), 9); };
    CHECK(grad_check(f, probes, 1e-6).max_rel_error <= 1e-4);
  }

  TEST_CASE("forward shape and determinism") {
    BandRouteNet a(ModelConfig::toy(8, 32, 3), {}, 7);
    BandRouteNet b(ModelConfig::toy(8, 32, 3), {}, 7);
    BandRouteNet c(ModelConfig::toy(8, 32, 3), {}, 8);
    Tensor x = test::random_tensor({3, 1, 32}, 1);
    Tape tape;
    Tensor ya = a.forward(tape, x).y;
    CHECK(ya.shape() == Shape{3, 1, 32});
    CHECK(test::bit_equal(ya, a.forward(tape, x).y));
    CHECK(test::bit_equal(ya, b.forward(tape, x).y));
    CHECK(test::bit_equal(ya, a.denoise(x)));
    CHECK_FALSE(test::bit_equal(ya, c.forward(tape, x).y));
    CHECK_THROWS_AS(a.forward(tape, test::random_tensor({3, 1, 31}, 1)), ShapeError);
    CHECK_THROWS_AS(a.forward(tape, test::random_tensor({3, 2, 32}, 1)), ShapeError);
  }

  TEST_CASE("full model gradients over several seeds") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      BandRouteNet model(ModelConfig::toy(8, 32, 3), {}, seed);
      Tensor x = test::random_tensor({2, 1, 32}, seed + 10, -2, 2);
      Tensor y = test::random_tensor({2, 1, 32}, seed + 20, -2, 2);
      auto all = probes_for(model.params(), seed);
      // 20 tensors per seed, spread over the registration order
      std::vector<GradProbe> probes;
      for (std::size_t i = 0; i < 20; ++i) probes.push_back(all[(i * all.size()) / 20 + seed % (all.size() / 20)]);
      auto f = [&](Tape& tape) { return mse_loss(tape, model.forward(tape, x).y, y); };
      const auto r = grad_check(f, probes, 1e-5);
      CHECK_MESSAGE(r.max_rel_error <= 1e-3, "seed " << seed << " max rel " << r.max_rel_error);
    }
  }

  TEST_CASE("parameter count matches the closed form") {
    CHECK(BandRouteNet(ModelConfig{}).count_params() == 273363);
    CHECK(expected_params(64, 4, 6) == 273363);
    for (std::size_t c : {8, 16, 32})
      for (std::size_t k : {1, 3, 6}) {
        auto cfg = ModelConfig::toy(c, 64, k);
        CHECK(BandRouteNet(cfg).count_params() == expected_params(c, 4, k));
        cfg.encoder_stages = 1;
        cfg.blocks_per_stage = 3;
        CHECK(BandRouteNet(cfg).count_params() == expected_params(c, 3, k));
      }
  }

  TEST_CASE("doubling channels roughly quadruples recurrent parameters") {
    auto gru_params = [](std::size_t c) {
      BandRouteNet m(ModelConfig::toy(c, 16, 2));
      std::size_t n = 0;
      for (const auto& p : m.params().params())
        if (p.name.find(".gru.") != std::string::npos) n += p.value.numel();
      return n;
    };
    const double ratio = static_cast<double>(gru_params(64)) / static_cast<double>(gru_params(32));
    CHECK(ratio > 3.9);
    CHECK(ratio < 4.0);
  }

  TEST_CASE("routing heatmap is the channel mean of the mask") {
    BandRouteNet model(ModelConfig::toy(8, 16, 3), {}, 2);
    Tape tape;
    const auto r = model.forward(tape, test::random_tensor({2, 1, 16}, 1));
    const auto map = routing_heatmap(r.diag, 3, 1);
    REQUIRE(map.size() == 3 * 16);
    const auto g = r.diag.latents.g.data();
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t t = 0; t < 16; ++t) {
        double s = 0;
        for (std::size_t c = 0; c < 8; ++c) s += g[((3 + k) * 8 + c) * 16 + t];
        CHECK(map[k * 16 + t] == doctest::Approx(s / 8).epsilon(1e-12));
      }
    CHECK_THROWS_AS(routing_heatmap(r.diag, 3, 2), ShapeError);

    ForwardOptions one;
    one.forced_gate = Real(1);
    for (double v : routing_heatmap(model.forward(tape, test::random_tensor({1, 1, 16}, 2), one).diag, 3)) CHECK(v == 1.0);
  }

  TEST_CASE("output is band sum plus gated refinement") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      BandRouteNet model(ModelConfig::toy(8, 32, 3), {}, seed);
      Tape tape;
      const auto r = model.forward(tape, test::random_tensor({2, 1, 32}, seed));
      const auto& d = r.diag;
      for (std::size_t i = 0; i < 64; ++i) {
        const double refine = d.fullband.lambda_gate.data()[i] * d.fullband.d_f.data()[i];
        CHECK(std::abs(r.y.data()[i] - d.band_sum.data()[i] - refine) < 1e-10);
        double s = 0;
        const std::size_t b = i / 32, t = i % 32;
        for (std::size_t k = 0; k < 3; ++k) s += d.band_outputs.data()[(b * 3 + k) * 32 + t];
        CHECK(std::abs(d.band_sum.data()[i] - s) < 1e-12);
      }
    }
  }

  TEST_CASE("decomposition inside the model sums back to the input") {
    BandRouteNet model(ModelConfig::toy(8, 32, 4), {}, 1);
    Tensor x = test::random_tensor({2, 1, 32}, 3);
    Tensor bands = model.decompose(x);
    REQUIRE(bands.shape() == Shape{8, 1, 32});
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t t = 0; t < 32; ++t) {
        double s = 0;
        for (std::size_t k = 0; k < 4; ++k) s += bands.data()[(b * 4 + k) * 32 + t];
        CHECK(std::abs(s - x.data()[b * 32 + t]) < 1e-12);
      }
  }

  TEST_CASE("ablations remove their component") {
    const auto cfg = ModelConfig::toy(8, 16, 3);
    Tensor x = test::random_tensor({2, 1, 16}, 4);
    Tape tape;

    Ablation nf;
    nf.no_fullband = true;
    const auto r_nf = BandRouteNet(cfg, nf, 1).forward(tape, x);
    CHECK_FALSE(r_nf.diag.fullband.lambda_gate.defined());
    for (auto v : r_nf.diag.refinement.data()) CHECK(v == 0);
    CHECK(test::bit_equal(r_nf.y, r_nf.diag.band_sum));
    CHECK(test::bit_equal(r_nf.diag.latents.e, r_nf.diag.latents.u_tilde));

    Ablation ro;
    ro.route_all_one = true;
    const auto r_ro = BandRouteNet(cfg, ro, 1).forward(tape, x);
    for (auto v : r_ro.diag.latents.g.data()) CHECK(v == 1);
    CHECK(test::bit_equal(r_ro.diag.latents.z, r_ro.diag.latents.f));

    Ablation nc;
    nc.no_cross_band = true;
    const auto r_nc = BandRouteNet(cfg, nc, 1).forward(tape, x);
    CHECK(test::max_abs_diff(r_nc.diag.fused.view(r_nc.diag.latents.z.shape()), r_nc.diag.latents.z) == 0);

    Ablation ne;
    ne.no_band_embedding = true;
    const auto r_ne = BandRouteNet(cfg, ne, 1).forward(tape, x);
    CHECK(test::bit_equal(r_ne.diag.latents.u_tilde, r_ne.diag.latents.u));

    // same parameters, different outputs
    const auto r_full = BandRouteNet(cfg, {}, 1).forward(tape, x);
    for (const auto* r : {&r_nf, &r_ro, &r_nc, &r_ne}) CHECK(test::max_abs_diff(r->y, r_full.y) > 0);
  }

  TEST_CASE("config json round trip") {
    auto cfg = ModelConfig::toy(16, 64, 4, 128.0);
    cfg.heads = 2;
    cfg.encoder_stages = 3;
    Ablation ab;
    ab.route_all_one = true;
    ab.no_band_embedding = true;
    ModelConfig back;
    Ablation ab_back;
    config_from_json(config_to_json(cfg, ab), back, ab_back);
    CHECK(back.channels == 16);
    CHECK(back.heads == 2);
    CHECK(back.encoder_stages == 3);
    CHECK(back.blocks_per_stage == cfg.blocks_per_stage);
    CHECK(back.segment_length() == 64);
    CHECK(back.band_spec.sample_rate_hz == 128.0);
    REQUIRE(back.band_count() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(back.band_spec.bands[k].name == cfg.band_spec.bands[k].name);
      CHECK(back.band_spec.bands[k].lo_hz == cfg.band_spec.bands[k].lo_hz);
      CHECK(back.band_spec.bands[k].hi_hz == cfg.band_spec.bands[k].hi_hz);
    }
    CHECK(ab_back == ab);

    CHECK_THROWS_AS(config_from_json("{", back, ab_back), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"model": {"channels": 8}})", back, ab_back), ConfigError);
    auto bad = cfg;
    bad.channels = 10;
    CHECK_THROWS_AS(config_from_json(config_to_json(bad, ab), back, ab_back), ConfigError);
  }

  TEST_CASE("invalid configurations are rejected") {
    auto cfg = ModelConfig::toy(8, 32, 3);
    cfg.heads = 3;
    CHECK_THROWS_AS(BandRouteNet{cfg}, ConfigError);
    cfg = ModelConfig::toy(6, 32, 3);
    CHECK_THROWS_AS(BandRouteNet{cfg}, ConfigError);
    cfg = ModelConfig::toy(8, 32, 3);
    cfg.encoder_stages = 0;
    CHECK_THROWS_AS(BandRouteNet{cfg}, ConfigError);
  }
}
