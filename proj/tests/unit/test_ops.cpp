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

#include <cmath>
#include <limits>
#include <numbers>

#include "brn/error.hpp"
#include "brn/ops.hpp"
#include "nn_support.hpp"

using namespace brn;

namespace {

// Direct summation, cross-correlation with zero padding.
std::vector<double> conv_reference(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
                                   std::size_t pad, std::size_t& out_len) {
  const std::size_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  out_len = (len + 2 * pad - k) / stride + 1;
  std::vector<double> y(n * cout * out_len, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t t = 0; t < out_len; ++t) {
        double acc = b.defined() ? b.data()[o] : 0.0;
        for (std::size_t i = 0; i < cin; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            const long src = static_cast<long>(t * stride + j) - static_cast<long>(pad);
            if (src < 0 || src >= static_cast<long>(len)) continue;
            acc += w.data()[(o * cin + i) * k + j] * x.data()[(s * cin + i) * len + static_cast<std::size_t>(src)];
          }
        y[(s * cout + o) * out_len + t] = acc;
      }
  return y;
}

}  // namespace

TEST_SUITE("ops") {
  TEST_CASE("conv1d hand example") {
    Tape tape;
    Tensor x({1, 1, 3}, std::vector<Real>{1, 2, 3});
    Tensor w({1, 1, 3}, std::vector<Real>{1, 0, -1});
    Tensor y = ops::conv1d(tape, x, w, Tensor());
    CHECK(test::to_vector(y) == std::vector<double>{-2, -2, 2});
  }

  TEST_CASE("conv1d matches direct summation") {
    Tape tape;
    for (std::size_t k : {1, 3, 5}) {
      for (std::size_t stride : {1, 2}) {
        Tensor x = test::random_tensor({2, 3, 11}, 10 + k);
        Tensor w = test::random_tensor({4, 3, k}, 20 + k);
        Tensor b = test::random_tensor({4}, 30 + k);
        Tensor y = ops::conv1d(tape, x, w, b, {stride, std::nullopt});
        std::size_t len = 0;
        const auto ref = conv_reference(x, w, b, stride, (k - 1) / 2, len);
        REQUIRE(y.shape() == Shape{2, 4, len});
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y.data()[i] == doctest::Approx(ref[i]).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("depthwise conv1d matches per-channel summation") {
    Tape tape;
    Tensor x = test::random_tensor({2, 3, 9}, 1);
    Tensor w = test::random_tensor({3, 1, 5}, 2);
    Tensor b = test::random_tensor({3}, 3);
    Tensor y = ops::depthwise_conv1d(tape, x, w, b);
    for (std::size_t c = 0; c < 3; ++c) {
      Tensor xc({2, 1, 9}), wc({1, 1, 5}), bc({1});
      for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t t = 0; t < 9; ++t) xc.data()[s * 9 + t] = x.data()[(s * 3 + c) * 9 + t];
      for (std::size_t j = 0; j < 5; ++j) wc.data()[j] = w.data()[c * 5 + j];
      bc.data()[0] = b.data()[c];
      std::size_t len = 0;
      const auto ref = conv_reference(xc, wc, bc, 1, 2, len);
      for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t t = 0; t < 9; ++t)
          CHECK(y.data()[(s * 3 + c) * 9 + t] == doctest::Approx(ref[s * 9 + t]).epsilon(1e-13));
    }
  }

  TEST_CASE("avg_pool1d averages a zero-padded window") {
    Tape tape;
    Tensor x({1, 1, 4}, std::vector<Real>{3, 6, 9, 12});
    Tensor y = ops::avg_pool1d(tape, x, 3);
    CHECK(y.data()[0] == doctest::Approx(3.0));
    CHECK(y.data()[1] == doctest::Approx(6.0));
    CHECK(y.data()[3] == doctest::Approx(7.0));
    CHECK_THROWS_AS(ops::avg_pool1d(tape, x, 2), ConfigError);
  }

  TEST_CASE("matmul with transposes") {
    Tape tape;
    Tensor a = test::random_tensor({3, 4}, 5);
    Tensor b = test::random_tensor({4, 2}, 6);
    Tensor c = ops::matmul(tape, a, b);
    Tensor bt = ops::permute(tape, b, {1, 0});
    Tensor c2 = ops::matmul(tape, a, bt, false, true);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        double acc = 0;
        for (std::size_t k = 0; k < 4; ++k) acc += a.data()[i * 4 + k] * b.data()[k * 2 + j];
        CHECK(c.data()[i * 2 + j] == doctest::Approx(acc).epsilon(1e-14));
        CHECK(c2.data()[i * 2 + j] == doctest::Approx(acc).epsilon(1e-14));
      }
    CHECK_THROWS_AS(ops::matmul(tape, a, a), ShapeError);
  }

  TEST_CASE("softmax of equal logits is uniform") {
    Tape tape;
    Tensor y = ops::softmax(tape, Tensor({2}, std::vector<Real>{0, 0}));
    CHECK(y.data()[0] == 0.5);
    CHECK(y.data()[1] == 0.5);
  }

  TEST_CASE("softmax rows sum to one") {
    Tape tape;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Tensor x = test::random_tensor({4, 7}, seed, -30, 30);
      Tensor y = ops::softmax(tape, x);
      for (std::size_t r = 0; r < 4; ++r) {
        double s = 0;
        for (std::size_t c = 0; c < 7; ++c) s += y.data()[r * 7 + c];
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
    }
  }

  TEST_CASE("adding zeros is the identity") {
    Tape tape;
    Tensor x = test::random_tensor({3, 5}, 8);
    CHECK(test::bit_equal(ops::add(tape, x, Tensor::zeros_like(x)), x));
  }

  TEST_CASE("broadcasting add and its shape errors") {
    Tape tape;
    Tensor a = test::random_tensor({2, 3, 4}, 1);
    Tensor b = test::random_tensor({1, 3, 1}, 2);
    Tensor y = ops::add(tape, a, b);
    CHECK(y.data()[1 * 12 + 2 * 4 + 3] == doctest::Approx(a.data()[1 * 12 + 2 * 4 + 3] + b.data()[2]));
    CHECK_THROWS_AS(ops::add(tape, a, test::random_tensor({2, 2, 4}, 3)), ShapeError);
  }

  TEST_CASE("gelu uses the tanh form") {
    Tape tape;
    Tensor x({5}, std::vector<Real>{-3, -0.5, 0, 0.7, 2.5});
    Tensor y = ops::gelu(tape, x);
    const double c = std::sqrt(2.0 / std::numbers::pi);
    for (std::size_t i = 0; i < 5; ++i) {
      const double v = x.data()[i];
      CHECK(y.data()[i] == doctest::Approx(0.5 * v * (1 + std::tanh(c * (v + 0.044715 * v * v * v)))).epsilon(1e-14));
    }
  }

  TEST_CASE("layer norm normalises each position over channels") {
    Tape tape;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Tensor x = test::random_tensor({2, 16, 5}, seed, -4, 9);
      Tensor y = ops::layer_norm(tape, x, Tensor(), Tensor(), 0);
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t t = 0; t < 5; ++t) {
          double mean = 0, sq = 0;
          for (std::size_t c = 0; c < 16; ++c) mean += y.data()[(b * 16 + c) * 5 + t];
          mean /= 16;
          for (std::size_t c = 0; c < 16; ++c) sq += std::pow(y.data()[(b * 16 + c) * 5 + t] - mean, 2);
          CHECK(std::abs(mean) <= 1e-9);
          CHECK(std::abs(sq / 16 - 1.0) <= 1e-6);
        }
    }
  }

  TEST_CASE("reductions") {
    Tape tape;
    Tensor x({2, 3}, std::vector<Real>{1, 2, 3, 4, 5, 6});
    CHECK(test::to_vector(ops::sum(tape, x, 1)) == std::vector<double>{6, 15});
    CHECK(test::to_vector(ops::mean(tape, x, 0)) == std::vector<double>{2.5, 3.5, 4.5});
    CHECK(ops::sum(tape, x, 1, true).shape() == Shape{2, 1});
    CHECK(ops::sum_all(tape, x).item() == 21);
    CHECK(ops::mean_all(tape, x).item() == 3.5);
    CHECK_THROWS_AS(ops::sum(tape, x, 2), ShapeError);
  }

  TEST_CASE("concat, slice, permute and reshape move values") {
    Tape tape;
    Tensor a({1, 2}, std::vector<Real>{1, 2});
    Tensor b({1, 3}, std::vector<Real>{3, 4, 5});
    std::vector<Tensor> parts{a, b};
    Tensor c = ops::concat(tape, parts, 1);
    CHECK(test::to_vector(c) == std::vector<double>{1, 2, 3, 4, 5});
    CHECK(test::to_vector(ops::slice(tape, c, 1, 1, 4)) == std::vector<double>{2, 3, 4});
    Tensor m({2, 3}, std::vector<Real>{1, 2, 3, 4, 5, 6});
    CHECK(test::to_vector(ops::permute(tape, m, {1, 0})) == std::vector<double>{1, 4, 2, 5, 3, 6});
    CHECK(ops::reshape(tape, m, {3, 2}).shape() == Shape{3, 2});
    CHECK_THROWS_AS(ops::reshape(tape, m, {4}), ShapeError);
    CHECK_THROWS_AS(ops::slice(tape, c, 1, 3, 9), ShapeError);
    CHECK(test::to_vector(ops::broadcast_to(tape, a, {2, 2})) == std::vector<double>{1, 2, 1, 2});
  }

  TEST_CASE("non-finite outputs raise a numeric fault") {
    Tape tape;
    const Real big = std::numeric_limits<Real>::max();
    Tensor x({1}, std::vector<Real>{big});
    CHECK_THROWS_AS(ops::add(tape, x, x), NumericFault);
    CHECK_THROWS_AS(ops::scale(tape, x, 10), NumericFault);
  }
}
