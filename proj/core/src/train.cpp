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

#include "brn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <thread>

#include "brn/binary_io.hpp"
#include "brn/error.hpp"
#include "brn/ops.hpp"

BRN_NN_BEGIN

void TrainConfig::validate() const {
  if (!(lr > 0)) throw ConfigError("train: lr must be positive");
  if (!(weight_decay >= 0)) throw ConfigError("train: weight_decay must be non-negative");
  if (epochs == 0) throw ConfigError("train: epochs must be positive");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (micro_batch == 0) throw ConfigError("train: micro_batch must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("train: betas must lie in [0, 1)");
  if (!(eps > 0)) throw ConfigError("train: eps must be positive");
  if (grad_clip && !(*grad_clip > 0)) throw ConfigError("train: grad_clip must be positive");
  if (threads == 0) throw ConfigError("train: threads must be positive");
}

Tensor mse_loss(Tape& tape, const Tensor& yhat, const Tensor& y) {
  if (yhat.shape() != y.shape()) {
    throw ShapeError("mse_loss: shapes differ, " + shape_str(yhat.shape()) + " vs " + shape_str(y.shape()));
  }
  Tensor d = ops::sub(tape, yhat, y);
  return ops::mean_all(tape, ops::mul(tape, d, d));
}

void adamw_update(std::span<Real> theta, std::span<const Real> grad, std::span<Real> m,
                  std::span<Real> v, std::uint64_t step, const TrainConfig& cfg) {
  const Real b1 = static_cast<Real>(cfg.beta1), b2 = static_cast<Real>(cfg.beta2);
  const Real lr = static_cast<Real>(cfg.lr), wd = static_cast<Real>(cfg.weight_decay);
  const Real eps = static_cast<Real>(cfg.eps);
  const Real c1 = Real(1) - static_cast<Real>(std::pow(cfg.beta1, static_cast<double>(step)));
  const Real c2 = Real(1) - static_cast<Real>(std::pow(cfg.beta2, static_cast<double>(step)));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const Real g = grad[i];
    m[i] = b1 * m[i] + (Real(1) - b1) * g;
    v[i] = b2 * v[i] + (Real(1) - b2) * g * g;
    const Real m_hat = m[i] / c1;
    const Real v_hat = v[i] / c2;
    theta[i] = theta[i] - lr * m_hat / (std::sqrt(v_hat) + eps) - lr * wd * theta[i];
  }
}

void adamw_step(const ParamStore& params, OptimState& state, const TrainConfig& cfg) {
  const auto& list = params.params();
  if (state.m.size() != list.size()) {
    state.m.assign(list.size(), {});
    state.v.assign(list.size(), {});
    for (std::size_t i = 0; i < list.size(); ++i) {
      state.m[i].assign(list[i].value.numel(), Real(0));
      state.v[i].assign(list[i].value.numel(), Real(0));
    }
  }
  for (const auto& p : list) {
    if (!p.value.has_grad()) continue;
    for (Real g : p.value.grad()) {
      if (!std::isfinite(g)) throw NumericFault("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  ++state.step;
  for (std::size_t i = 0; i < list.size(); ++i) {
    Tensor t = list[i].value;
    if (!t.has_grad()) continue;
    adamw_update(t.data(), t.grad(), state.m[i], state.v[i], state.step, cfg);
  }
}

Batch make_batch(std::span<const SignalPair> pairs, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ConfigError("make_batch: empty batch");
  const std::size_t len = pairs[indices[0]].noisy.size();
  Batch b{Tensor({indices.size(), 1, len}), Tensor({indices.size(), 1, len})};
  auto nd = b.noisy.data();
  auto cd = b.clean.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& p = pairs[indices[i]];
    if (p.noisy.size() != len || p.clean.size() != len) throw ShapeError("make_batch: segment lengths differ");
    for (std::size_t t = 0; t < len; ++t) {
      nd[i * len + t] = static_cast<Real>(p.noisy[t]);
      cd[i * len + t] = static_cast<Real>(p.clean[t]);
    }
  }
  return b;
}

namespace {

// Runs fn(chunk) for chunks [0, n_chunks) over up to `threads` workers.
// Exceptions are rethrown on the calling thread.
template <class Fn>
void parallel_chunks(std::size_t n_chunks, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n_chunks));
  if (threads == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < n_chunks; c += threads) fn(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<Signal> denoise_all(const BandRouteNet& model, std::span<const Signal> inputs,
                                const EvalOptions& options) {
  std::vector<Signal> out(inputs.size());
  if (options.passthrough) {
    std::copy(inputs.begin(), inputs.end(), out.begin());
    return out;
  }
  const std::size_t len = model.config().segment_length();
  const std::size_t bs = std::max<std::size_t>(1, options.batch_size);
  const std::size_t n_chunks = (inputs.size() + bs - 1) / bs;
  parallel_chunks(n_chunks, options.threads, [&](std::size_t c) {
    const std::size_t begin = c * bs, end = std::min(inputs.size(), begin + bs);
    Tensor x({end - begin, 1, len});
    auto xd = x.data();
    for (std::size_t i = begin; i < end; ++i) {
      if (inputs[i].size() != len) {
        throw ShapeError("denoise: segment " + std::to_string(i) + " has length " + std::to_string(inputs[i].size()) +
                         ", model expects " + std::to_string(len));
      }
      for (std::size_t t = 0; t < len; ++t) xd[(i - begin) * len + t] = static_cast<Real>(inputs[i][t]);
    }
    Tensor y = model.denoise(x);
    auto yd = y.data();
    for (std::size_t i = begin; i < end; ++i) {
      out[i].assign(yd.begin() + static_cast<std::ptrdiff_t>((i - begin) * len),
                    yd.begin() + static_cast<std::ptrdiff_t>((i - begin + 1) * len));
    }
  });
  return out;
}

MetricReport evaluate(const BandRouteNet& model, std::span<const SignalPair> pairs, const EvalOptions& options) {
  if (pairs.empty()) throw ConfigError("evaluate: empty dataset");
  std::vector<Signal> inputs;
  inputs.reserve(pairs.size());
  for (const auto& p : pairs) inputs.push_back(p.noisy);
  const std::vector<Signal> outputs = denoise_all(model, inputs, options);
  std::vector<SampleMetrics> samples(pairs.size());
  WelchSettings welch;
  welch.sample_rate_hz = model.config().band_spec.sample_rate_hz;
  welch.segment_length = std::min<std::size_t>(256, pairs[0].clean.size());
  welch.overlap = welch.segment_length / 2;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    samples[i] = score_sample(i, pairs[i].snr_db, pairs[i].clean, pairs[i].noisy, outputs[i], welch);
  }
  return aggregate(std::move(samples));
}

namespace {

double clip_gradients(const ParamStore& params, double max_norm) {
  double sq = 0;
  for (const auto& p : params.params()) {
    if (!p.value.has_grad()) continue;
    for (Real g : p.value.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const Real factor = static_cast<Real>(max_norm / norm);
    for (const auto& p : params.params()) {
      if (!p.value.has_grad()) continue;
      for (Real& g : p.value.ensure_grad()) g *= factor;
    }
  }
  return norm;
}

}  // namespace

FitResult fit(BandRouteNet& model, std::span<const SignalPair> train, std::span<const SignalPair> val,
              const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) throw ConfigError("fit: empty training set");
  const ParamStore& params = model.params();
  params.clear_grad();

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  OptimState state;
  FitResult result;
  std::vector<std::vector<Real>> best;
  double best_score = std::numeric_limits<double>::infinity();
  EvalOptions eval_opts;
  eval_opts.threads = cfg.threads;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::size_t n = end - start;
      double batch_loss = 0;
      try {
        for (std::size_t ms = start; ms < end; ms += cfg.micro_batch) {
          const std::size_t me = std::min(end, ms + cfg.micro_batch);
          const Batch b = make_batch(train, std::span<const std::size_t>(order).subspan(ms, me - ms));
          Tape tape;
          Tensor y = model.forward(tape, b.noisy).y;
          Tensor loss = mse_loss(tape, y, b.clean);
          const double weight = static_cast<double>(me - ms) / static_cast<double>(n);
          const double value = static_cast<double>(loss.item());
          if (!std::isfinite(value)) throw NumericFault("non-finite loss");
          batch_loss += weight * value;
          const Real seed = static_cast<Real>(weight);
          tape.backward(loss, std::span<const Real>(&seed, 1));
        }
        if (cfg.grad_clip) clip_gradients(params, *cfg.grad_clip);
        adamw_step(params, state, cfg);
      } catch (const NumericFault& e) {
        throw NumericFault("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index) + ": " +
                           e.what());
      }
      params.clear_grad();
      if (epoch == 1 && batch_index == 0) result.initial_train_mse = batch_loss;
      loss_sum += batch_loss * static_cast<double>(n);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = loss_sum / static_cast<double>(train.size());
    double score = -static_cast<double>(epoch);  // without validation the last epoch wins
    if (!val.empty()) {
      rec.val = evaluate(model, val, eval_opts).overall;
      score = rec.val->rrmse_t;
    }
    if (score < best_score) {
      best_score = score;
      best = params.snapshot();
      result.best_epoch = epoch;
      result.best_val = rec.val;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  params.restore(best);
  return result;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  io::atomic_write(path, [&](std::ostream& os) {
    os << "epoch,train_mse,val_rrmse_t,val_rrmse_s,val_cc,val_snr_imp\n";
    char buf[64];
    auto num = [&](double v) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf);
    };
    for (const auto& r : history) {
      os << r.epoch << ',' << num(r.train_mse);
      if (r.val) {
        os << ',' << num(r.val->rrmse_t) << ',' << num(r.val->rrmse_s) << ',' << num(r.val->cc) << ','
           << (r.val->snr_imp ? num(*r.val->snr_imp) : std::string("inf"));
      } else {
        os << ",,,,";
      }
      os << '\n';
    }
  }, false);
}

BRN_NN_END
