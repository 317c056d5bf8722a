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
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "brn/data.hpp"
#include "brn/metrics.hpp"
#include "brn/model.hpp"

BRN_NN_BEGIN

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  // Batches are processed in chunks of at most this many samples with
  // gradients accumulated, to bound activation memory. The update is that of
  // the full batch.
  std::size_t micro_batch = 8;
  // Global gradient-norm clipping; off when empty.
  std::optional<double> grad_clip;
  // Worker threads for validation passes.
  std::size_t threads = 1;

  // Throws ConfigError.
  void validate() const;
};

struct OptimState {
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;
  std::uint64_t step = 0;
};

// mean((yhat - y)^2) over all elements.
Tensor mse_loss(Tape& tape, const Tensor& yhat, const Tensor& y);

/// One AdamW update on a single parameter array, with `step` the 1-based
/// step count after increment:
///   m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2
///   theta -= lr m / (1 - b1^step) / (sqrt(v / (1 - b2^step)) + eps) + lr wd theta
void adamw_update(std::span<Real> theta, std::span<const Real> grad, std::span<Real> m,
                  std::span<Real> v, std::uint64_t step, const TrainConfig& cfg);

/// Updates every parameter that received a gradient. Parameters without a
/// gradient buffer (unused by an ablated model) are left untouched. Throws
/// NumericFault naming the parameter if a gradient is not finite.
void adamw_step(const ParamStore& params, OptimState& state, const TrainConfig& cfg);

// Stacks pairs[indices] into (B, 1, T) noisy and clean tensors.
struct Batch {
  Tensor noisy;
  Tensor clean;
};
Batch make_batch(std::span<const SignalPair> pairs, std::span<const std::size_t> indices);

struct EvalOptions {
  std::size_t threads = 1;
  std::size_t batch_size = 16;
  // Scores the noisy input itself (y_hat = y) instead of running the model.
  bool passthrough = false;
};

// Runs the model without recording and scores every pair. Batches are formed
// the same way for any thread count, so the report does not depend on it.
MetricReport evaluate(const BandRouteNet& model, std::span<const SignalPair> pairs,
                      const EvalOptions& options = {});

// Denoised signals for every pair's noisy input, in order.
std::vector<Signal> denoise_all(const BandRouteNet& model, std::span<const Signal> inputs,
                                const EvalOptions& options = {});

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_mse = 0;
  std::optional<MetricMeans> val;
};

struct FitResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::optional<MetricMeans> best_val;
  double initial_train_mse = 0;  // mean loss of the first epoch's first batch, before any update
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains with seeded shuffling and AdamW. After each epoch the validation set
/// is scored; the parameters with the lowest validation RRMSE_t are restored
/// at the end (the last epoch when there is no validation set).
FitResult fit(BandRouteNet& model, std::span<const SignalPair> train, std::span<const SignalPair> val,
              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// epoch,train_mse,val_rrmse_t,val_rrmse_s,val_cc,val_snr_imp
void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

BRN_NN_END
