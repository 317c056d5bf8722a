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

#include "brn/error.hpp"
#include "brn/grad_check.hpp"
#include "brn/ops.hpp"
#include "nn_support.hpp"

using namespace brn;

TEST_SUITE("grad_check") {
  TEST_CASE("tanh sum is checked to 1e-6") {
    Tensor x = test::random_tensor({12}, 4, -2, 2);
    std::vector<Tensor> in{x};
    auto f = [&](Tape& tape) { return ops::sum_all(tape, ops::tanh(tape, x)); };
    const auto r = grad_check(f, in, 1e-5);
    CHECK(r.max_rel_error <= 1e-6);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].analytic.size() == 12);
  }

  TEST_CASE("squared norm of a convolution") {
    Tensor x = test::random_tensor({2, 3, 8}, 1);
    Tensor w = test::random_tensor({2, 3, 3}, 2);
    Tensor b = test::random_tensor({2}, 3);
    std::vector<Tensor> in{x, w, b};
    auto f = [&](Tape& tape) {
      Tensor y = ops::conv1d(tape, x, w, b);
      return ops::sum_all(tape, ops::mul(tape, y, y));
    };
    CHECK(grad_check(f, in, 1e-5).max_rel_error <= 1e-4);
  }

  TEST_CASE("constant function has zero gradients") {
    Tensor x = test::random_tensor({4}, 1);
    std::vector<Tensor> in{x};
    auto f = [&](Tape& tape) { return ops::scale(tape, ops::sum_all(tape, x), 0); };
    const auto r = grad_check(f, in, 1e-5);
    for (double a : r.entries[0].analytic) CHECK(a == 0);
    for (double n : r.entries[0].numeric) CHECK(n == 0);
    CHECK(r.max_rel_error == 0);
  }

  TEST_CASE("non-deterministic function invalidates the check") {
    Tensor x = test::random_tensor({3}, 1);
    std::vector<Tensor> in{x};
    int calls = 0;
    auto f = [&](Tape& tape) { return ops::add_scalar(tape, ops::sum_all(tape, x), static_cast<Real>(++calls)); };
    CHECK_THROWS_AS(grad_check(f, in, 1e-5), UsageError);
  }

  TEST_CASE("relative error uses a floor on the denominator") {
    CHECK(gradient_relative_error(1.0, 1.0) == 0);
    CHECK(gradient_relative_error(2.0, 1.0) == doctest::Approx(0.5));
    CHECK(gradient_relative_error(0.0, 1e-12) == doctest::Approx(1e-4));
  }

  TEST_CASE("probes restore the perturbed values") {
    Tensor x = test::random_tensor({5}, 9);
    const auto before = test::to_vector(x);
    std::vector<GradProbe> probes{{"x", x, 2}, {"x", x, 4}};
    auto f = [&](Tape& tape) { return ops::sum_all(tape, ops::gelu(tape, x)); };
    const auto r = grad_check(f, probes, 1e-5);
    CHECK(test::to_vector(x) == before);
    CHECK(r.entries.size() == 1);
    CHECK(r.entries[0].numeric.size() == 2);
    CHECK_FALSE(x.has_grad());
  }
}
