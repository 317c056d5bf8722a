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

#include "brn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "brn/binary_io.hpp"
#include "brn/error.hpp"
#include "brn/spectral.hpp"

namespace brn {

const char* artifact_kind_name(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::kEog: return "eog";
    case ArtifactKind::kEmg: return "emg";
    case ArtifactKind::kMixed: return "mixed";
  }
  return "unknown";
}

ArtifactKind parse_artifact_kind(const std::string& name) {
  if (name == "eog" || name == "EOG") return ArtifactKind::kEog;
  if (name == "emg" || name == "EMG") return ArtifactKind::kEmg;
  if (name == "mixed" || name == "MIXED") return ArtifactKind::kMixed;
  throw ConfigError("unknown artifact kind '" + name + "' (expected eog, emg or mixed)");
}

double rms(std::span<const double> g) {
  if (g.empty()) throw ConfigError("rms: empty signal");
  double acc = 0;
  for (double v : g) acc += v * v;
  return std::sqrt(acc / static_cast<double>(g.size()));
}

double solve_lambda(std::span<const double> clean, std::span<const double> artifact, double snr_db) {
  const double rn = rms(artifact);
  if (rn == 0.0) throw DataError("solve_lambda: degenerate artifact with zero RMS");
  return rms(clean) / (rn * std::pow(10.0, snr_db / 10.0));
}

double contamination_snr_db(std::span<const double> clean, std::span<const double> noisy) {
  if (clean.size() != noisy.size()) throw ShapeError("contamination_snr_db: length mismatch");
  std::vector<double> residual(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) residual[i] = noisy[i] - clean[i];
  return 10.0 * std::log10(rms(clean) / rms(residual));
}

SignalPair contaminate(std::span<const double> clean, std::optional<std::span<const double>> eog,
                       std::optional<std::span<const double>> emg, double snr_db) {
  if (!eog && !emg) throw ConfigError("contaminate: at least one artifact is required");
  for (auto a : {eog, emg}) {
    if (a && a->size() != clean.size()) throw ShapeError("contaminate: artifact length differs from clean");
  }
  SignalPair pair;
  pair.clean.assign(clean.begin(), clean.end());
  pair.noisy = pair.clean;
  pair.snr_db = snr_db;
  pair.kind = eog && emg ? ArtifactKind::kMixed : (eog ? ArtifactKind::kEog : ArtifactKind::kEmg);
  for (auto a : {eog, emg}) {
    if (!a) continue;
    const double lambda = solve_lambda(clean, *a, snr_db);
    for (std::size_t i = 0; i < clean.size(); ++i) pair.noisy[i] += lambda * (*a)[i];
  }
  return pair;
}

SignalPair standardize(const SignalPair& pair) {
  const auto& y = pair.noisy;
  if (y.empty()) throw DataError("standardize: empty segment");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double var = 0;
  for (double v : y) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / static_cast<double>(y.size()));
  if (!(sigma > 0)) throw DataError("standardize: degenerate segment, noisy signal has zero variance");
  SignalPair out = pair;
  for (auto& v : out.clean) v /= sigma;
  for (auto& v : out.noisy) v /= sigma;
  return out;
}

std::vector<double> default_snr_grid() {
  std::vector<double> grid;
  for (int db = -7; db <= 2; ++db) grid.push_back(db);
  return grid;
}

namespace {

// Index into `pool` for pairing i: direct while i < pool size, then sampled
// with replacement.
std::size_t pick(std::size_t i, std::size_t pool, std::mt19937_64& rng) {
  if (i < pool) return i;
  return std::uniform_int_distribution<std::size_t>(0, pool - 1)(rng);
}

}  // namespace

std::vector<SignalPair> augment_snr_grid(const std::vector<Signal>& clean,
                                         const std::vector<Signal>& eog,
                                         const std::vector<Signal>& emg,
                                         std::span<const double> grid, ArtifactKind kind,
                                         std::uint64_t seed) {
  if (clean.empty()) throw ConfigError("augment_snr_grid: no clean segments");
  if (grid.empty()) throw ConfigError("augment_snr_grid: empty SNR grid");
  const bool need_eog = kind != ArtifactKind::kEmg;
  const bool need_emg = kind != ArtifactKind::kEog;
  if (need_eog && eog.empty()) throw ConfigError("augment_snr_grid: no EOG segments");
  if (need_emg && emg.empty()) throw ConfigError("augment_snr_grid: no EMG segments");

  std::mt19937_64 rng(seed);
  std::vector<SignalPair> out;
  std::size_t pairings = 0;
  switch (kind) {
    case ArtifactKind::kEog: pairings = eog.size(); break;
    case ArtifactKind::kEmg: pairings = emg.size(); break;
    case ArtifactKind::kMixed: pairings = std::max(eog.size(), emg.size()); break;
  }
  out.reserve(pairings * grid.size());
  for (std::size_t i = 0; i < pairings; ++i) {
    const Signal& x = kind == ArtifactKind::kEog ? clean[i % clean.size()] : clean[pick(i, clean.size(), rng)];
    std::optional<std::span<const double>> a_eog, a_emg;
    if (need_eog) a_eog = std::span<const double>(eog[pick(i, eog.size(), rng)]);
    if (need_emg) a_emg = std::span<const double>(emg[pick(i, emg.size(), rng)]);
    for (double level : grid) out.push_back(contaminate(x, a_eog, a_emg, level));
  }
  return out;
}

namespace {

enum class SurrogateClass : std::uint64_t { kClean = 1, kEog = 2, kEmg = 3 };

std::mt19937_64 stream(std::uint64_t seed, SurrogateClass cls, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cls), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  return std::mt19937_64(seq);
}

// Keeps the bins whose frequency lies in [lo, hi] (with mirrors), zeroes the rest.
Signal band_limit(const Signal& x, double fs, double lo, double hi) {
  Spectrum s = dft(std::span<const double>(x));
  const std::size_t n = x.size();
  const double res = fs / static_cast<double>(n);
  for (std::size_t f = 0; f < n; ++f) {
    const std::size_t mirror = std::min(f, n - f);
    const double hz = static_cast<double>(mirror) * res;
    if (hz < lo || hz > hi) s[f] = 0;
  }
  const Spectrum back = inverse_dft(s);
  Signal out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = back[t].real();
  return out;
}

void unit_rms(Signal& x) {
  const double r = rms(x);
  if (!(r > 0)) throw NumericFault("synth_surrogate: generated a zero segment");
  for (auto& v : x) v /= r;
}

Signal make_clean(const SurrogateConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = cfg.segment_length;
  const double res = cfg.sample_rate_hz / static_cast<double>(n);
  std::normal_distribution<double> normal;
  const double alpha_centre = std::uniform_real_distribution<double>(8.0, 12.0)(rng);
  Spectrum s(n, Complex(0));
  for (std::size_t f = 1; f <= n / 2; ++f) {
    const double hz = static_cast<double>(f) * res;
    const double re = normal(rng);
    const double im = normal(rng);
    if (hz < cfg.clean_lo_hz || hz > cfg.clean_hi_hz) continue;
    const double bump = cfg.alpha_gain * std::exp(-0.5 * std::pow((hz - alpha_centre) / cfg.alpha_width_hz, 2));
    const double amp = std::pow(hz, -cfg.clean_exponent / 2.0) * (1.0 + bump);
    s[f] = amp * Complex(re, f == n - f ? 0.0 : im);
    if (f != n - f) s[n - f] = std::conj(s[f]);
  }
  const Spectrum back = inverse_dft(s);
  Signal x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = back[t].real();
  unit_rms(x);
  return x;
}

Signal make_eog(const SurrogateConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = cfg.segment_length;
  const double fs = cfg.sample_rate_hz;
  const double duration = static_cast<double>(n) / fs;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Signal x(n, 0.0);
  // Blinks: monophasic bumps of 100-400 ms.
  const int blinks = 1 + static_cast<int>(unit(rng) * 3.0);
  for (int b = 0; b < blinks; ++b) {
    const double centre = unit(rng) * duration;
    const double width = 0.05 + 0.15 * unit(rng);
    const double amp = 0.5 + unit(rng);
    for (std::size_t t = 0; t < n; ++t) {
      const double d = (static_cast<double>(t) / fs - centre) / width;
      x[t] += amp * std::exp(-0.5 * d * d);
    }
  }
  // Saccade-like smooth step and slow drift.
  const double step_at = unit(rng) * duration;
  const double step_amp = (unit(rng) - 0.5) * 1.0;
  const double drift_hz = 0.2 + 0.8 * unit(rng);
  const double drift_phase = 2.0 * std::numbers::pi * unit(rng);
  for (std::size_t t = 0; t < n; ++t) {
    const double sec = static_cast<double>(t) / fs;
    x[t] += step_amp * std::tanh((sec - step_at) / 0.05);
    x[t] += 0.3 * std::sin(2.0 * std::numbers::pi * drift_hz * sec + drift_phase);
  }
  x = band_limit(x, fs, 1e-9, cfg.eog_cutoff_hz);
  unit_rms(x);
  return x;
}

Signal make_emg(const SurrogateConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = cfg.segment_length;
  const double fs = cfg.sample_rate_hz;
  const double duration = static_cast<double>(n) / fs;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  Signal envelope(n, 0.3);
  const int bursts = 1 + static_cast<int>(unit(rng) * 3.0);
  for (int b = 0; b < bursts; ++b) {
    const double centre = unit(rng) * duration;
    const double width = 0.1 + 0.3 * unit(rng);
    const double amp = 0.5 + 1.5 * unit(rng);
    for (std::size_t t = 0; t < n; ++t) {
      const double d = (static_cast<double>(t) / fs - centre) / width;
      envelope[t] += amp * std::exp(-0.5 * d * d);
    }
  }
  Signal x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = envelope[t] * normal(rng);
  x = band_limit(x, fs, cfg.emg_lo_hz, cfg.emg_hi_hz);
  unit_rms(x);
  return x;
}

}  // namespace

SurrogateSets synth_surrogate(const SurrogateConfig& cfg) {
  if (cfg.segment_length < 16) throw ConfigError("synth_surrogate: segment length too short");
  if (!(cfg.sample_rate_hz > 0)) throw ConfigError("synth_surrogate: sample rate must be positive");
  const double res = cfg.sample_rate_hz / static_cast<double>(cfg.segment_length);
  if (cfg.n_eog > 0 && res > cfg.eog_cutoff_hz)
    throw ConfigError("synth_surrogate: segment too short to hold any EOG frequency bin");
  SurrogateSets sets;
  for (std::size_t i = 0; i < cfg.n_clean; ++i) {
    auto rng = stream(cfg.seed, SurrogateClass::kClean, i);
    sets.clean.push_back(make_clean(cfg, rng));
  }
  for (std::size_t i = 0; i < cfg.n_eog; ++i) {
    auto rng = stream(cfg.seed, SurrogateClass::kEog, i);
    sets.eog.push_back(make_eog(cfg, rng));
  }
  for (std::size_t i = 0; i < cfg.n_emg; ++i) {
    auto rng = stream(cfg.seed, SurrogateClass::kEmg, i);
    sets.emg.push_back(make_emg(cfg, rng));
  }
  return sets;
}

DatasetSplit split(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw ConfigError("split: need at least 10 samples, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto tenth = static_cast<std::size_t>(std::llround(static_cast<double>(n) / 10.0));
  DatasetSplit s;
  s.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(tenth));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(tenth),
                order.begin() + static_cast<std::ptrdiff_t>(2 * tenth));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(2 * tenth), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

namespace {
constexpr char kDatasetMagic[] = "EDS1";
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

void write_dataset(const std::vector<SignalPair>& pairs, const std::filesystem::path& path) {
  if (pairs.empty()) throw ConfigError("write_dataset: no pairs to write");
  const std::size_t len = pairs.front().clean.size();
  const ArtifactKind kind = pairs.front().kind;
  for (const auto& p : pairs) {
    if (p.clean.size() != len || p.noisy.size() != len) {
      throw ShapeError("write_dataset: all pairs must share one segment length");
    }
    if (p.kind != kind) throw ConfigError("write_dataset: all pairs must share one artifact kind");
  }
  io::atomic_write(path, [&](std::ostream& os) {
    io::BinaryWriter w(os);
    w.bytes(std::string(kDatasetMagic, 4));
    w.u32(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(pairs.size()));
    w.u32(static_cast<std::uint32_t>(len));
    w.u8(static_cast<std::uint8_t>(kind));
    for (const auto& p : pairs) {
      w.f32(static_cast<float>(p.snr_db));
      for (double v : p.clean) w.f32(static_cast<float>(v));
      for (double v : p.noisy) w.f32(static_cast<float>(v));
    }
  });
}

std::vector<SignalPair> read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open dataset " + path.string());
  io::BinaryReader r(is, path.string());
  if (r.bytes(4) != std::string(kDatasetMagic, 4)) throw DataError(path.string() + ": not an EDS1 dataset (bad magic)");
  const auto version = r.u32();
  if (version != kDatasetVersion) {
    throw DataError(path.string() + ": unsupported dataset version " + std::to_string(version));
  }
  const auto count = r.u32();
  const auto len = r.u32();
  const auto kind = r.u8();
  if (len == 0) throw DataError(path.string() + ": segment length is zero");
  if (kind > static_cast<std::uint8_t>(ArtifactKind::kMixed)) {
    throw DataError(path.string() + ": unknown artifact kind " + std::to_string(kind));
  }
  std::vector<SignalPair> pairs(count);
  for (auto& p : pairs) {
    p.kind = static_cast<ArtifactKind>(kind);
    p.snr_db = r.f32();
    p.clean.resize(len);
    p.noisy.resize(len);
    for (auto& v : p.clean) v = r.f32();
    for (auto& v : p.noisy) v = r.f32();
    for (std::size_t t = 0; t < len; ++t) {
      if (!std::isfinite(p.clean[t]) || !std::isfinite(p.noisy[t])) {
        throw DataError(path.string() + ": non-finite sample value");
      }
    }
  }
  if (!r.at_end()) {
    throw DataError(path.string() + ": trailing bytes, record length does not match header T=" +
                    std::to_string(len));
  }
  return pairs;
}

void quantize_to_f32(std::vector<SignalPair>& pairs) {
  for (auto& p : pairs) {
    p.snr_db = static_cast<float>(p.snr_db);
    for (auto& v : p.clean) v = static_cast<float>(v);
    for (auto& v : p.noisy) v = static_cast<float>(v);
  }
}

std::vector<Signal> read_f32_matrix(const std::filesystem::path& path, std::size_t segment_length) {
  if (segment_length == 0) throw ConfigError("read_f32_matrix: segment length must be positive");
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw DataError("cannot stat " + path.string());
  const std::size_t row_bytes = 4 * segment_length;
  if (size == 0 || size % row_bytes != 0) {
    throw DataError(path.string() + ": size " + std::to_string(size) +
                    " is not a multiple of one f32 row of length " + std::to_string(segment_length));
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  io::BinaryReader r(is, path.string());
  std::vector<Signal> rows(size / row_bytes, Signal(segment_length));
  for (auto& row : rows)
    for (auto& v : row) {
      v = r.f32();
      if (!std::isfinite(v)) throw DataError(path.string() + ": non-finite sample value");
    }
  return rows;
}

void write_f32_matrix(const std::vector<Signal>& rows, const std::filesystem::path& path) {
  io::atomic_write(path, [&](std::ostream& os) {
    io::BinaryWriter w(os);
    for (const auto& row : rows)
      for (double v : row) w.f32(static_cast<float>(v));
  });
}

}  // namespace brn
