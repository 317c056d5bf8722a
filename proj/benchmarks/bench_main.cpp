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
#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "brn/model.hpp"
#include "brn/ops.hpp"
#include "brn/spectral.hpp"
#include "brn/train.hpp"

namespace {

using namespace brn;

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Real> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<Real>(u(rng));
  return Tensor(std::move(shape), std::move(v));
}

void BM_Conv1d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({8, c, 512}, 1), w = random_tensor({c, c, 3}, 2), b = random_tensor({c}, 3);
  for (auto _ : state) {
    Tape tape = Tape::no_grad();
    benchmark::DoNotOptimize(ops::conv1d(tape, x, w, b).data().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * 512);
}
BENCHMARK(BM_Conv1d)->Arg(16)->Arg(64);

void BM_Gru(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({8, h, 512}, 1);
  const Tensor wi = random_tensor({3 * h, h}, 2), wh = random_tensor({3 * h, h}, 3);
  const Tensor bi = random_tensor({3 * h}, 4), bh = random_tensor({3 * h}, 5);
  for (auto _ : state) {
    Tape tape = Tape::no_grad();
    benchmark::DoNotOptimize(ops::gru(tape, x, wi, wh, bi, bh).data().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * 512);
}
BENCHMARK(BM_Gru)->Arg(16)->Arg(64);

void BM_Dft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(0.37 * static_cast<double>(i));
  for (auto _ : state) benchmark::DoNotOptimize(dft(x).data());
}
BENCHMARK(BM_Dft)->Arg(512)->Arg(500)->Arg(4096);

void BM_ModelForward(benchmark::State& state) {
  const BandRouteNet model(ModelConfig{}, {}, 0);
  const Tensor x = random_tensor({4, 1, 512}, 1);
  for (auto _ : state) {
    Tape tape = Tape::no_grad();
    benchmark::DoNotOptimize(model.forward(tape, x).y.data().data());
  }
}
BENCHMARK(BM_ModelForward)->Unit(benchmark::kMillisecond);

void BM_ModelForwardBackward(benchmark::State& state) {
  BandRouteNet model(ModelConfig{}, {}, 0);
  const Tensor x = random_tensor({4, 1, 512}, 1), y = random_tensor({4, 1, 512}, 2);
  for (auto _ : state) {
    model.params().zero_grad();
    Tape tape;
    const Tensor loss = mse_loss(tape, model.forward(tape, x).y, y);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_ModelForwardBackward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
