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

#include "brn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "brn/error.hpp"

namespace brn {

BandSpec BandSpec::standard(double sample_rate_hz, std::size_t segment_length) {
  BandSpec spec;
  spec.sample_rate_hz = sample_rate_hz;
  spec.segment_length = segment_length;
  spec.bands = {
      {"delta", 0.0, 4.0},   {"theta", 4.0, 8.0},   {"alpha", 8.0, 12.0},
      {"beta", 12.0, 30.0},  {"gamma", 30.0, 80.0}, {"epsilon", 80.0, sample_rate_hz / 2.0},
  };
  return spec;
}

void BandSpec::validate() const {
  if (!(sample_rate_hz > 0)) throw ConfigError("band spec: sample rate must be positive");
  if (segment_length < 2) throw ConfigError("band spec: segment length must be at least 2");
  if (bands.empty()) throw ConfigError("band spec: at least one band is required");
  for (std::size_t k = 0; k < bands.size(); ++k) {
    const auto& b = bands[k];
    if (!(b.lo_hz < b.hi_hz)) throw ConfigError("band spec: band '" + b.name + "' has lo >= hi");
    if (k == 0 && b.lo_hz != 0.0) {
      throw ConfigError("band spec: bands do not tile the spectrum, first band starts at " +
                        std::to_string(b.lo_hz) + " Hz");
    }
    if (k > 0 && bands[k - 1].hi_hz != b.lo_hz) {
      throw ConfigError("band spec: bands do not tile the spectrum between '" +
                        bands[k - 1].name + "' and '" + b.name + "'");
    }
  }
  if (bands.back().hi_hz < sample_rate_hz / 2.0) {
    throw ConfigError("band spec: bands do not tile the spectrum, top band ends below Nyquist");
  }
}

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_in_place(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles from the exact angle rather than repeated multiplication.
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      const Complex w(std::cos(angle), std::sin(angle));
      for (std::size_t i = 0; i < n; i += len) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

Spectrum direct_dft(std::span<const Complex> x, bool inverse) {
  const std::size_t n = x.size();
  Spectrum out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t f = 0; f < n; ++f) {
    Complex acc = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>((f * t) % n) / static_cast<double>(n);
      acc += x[t] * Complex(std::cos(angle), std::sin(angle));
    }
    out[f] = acc;
  }
  return out;
}

Spectrum transform(std::span<const Complex> x, bool inverse) {
  if (x.size() < 2) throw ConfigError("dft: signal length must be at least 2");
  for (const auto& v : x) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericFault("dft: non-finite input");
  }
  Spectrum out;
  if (is_power_of_two(x.size())) {
    out.assign(x.begin(), x.end());
    fft_in_place(out, inverse);
  } else {
    out = direct_dft(x, inverse);
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(x.size());
    for (auto& v : out) v *= inv_n;
  }
  return out;
}

}  // namespace

Spectrum dft(std::span<const Complex> x) { return transform(x, false); }

Spectrum dft(std::span<const double> x) {
  std::vector<Complex> c(x.begin(), x.end());
  return transform(c, false);
}

Spectrum inverse_dft(std::span<const Complex> spectrum) { return transform(spectrum, true); }

BandMasks build_masks(const BandSpec& spec) {
  spec.validate();
  const std::size_t n = spec.segment_length;
  const std::size_t k = spec.bands.size();
  BandMasks out;
  out.bins = n;
  out.masks.assign(k, std::vector<std::uint8_t>(n, 0));
  const double resolution = spec.sample_rate_hz / static_cast<double>(n);
  const double nyquist = spec.sample_rate_hz / 2.0;
  for (std::size_t f = 0; f <= n / 2; ++f) {
    const double hz = static_cast<double>(f) * resolution;
    std::size_t band = k - 1;
    if (f == 0) {
      band = 0;
    } else if (hz < nyquist) {
      for (std::size_t b = 0; b < k; ++b) {
        if (hz >= spec.bands[b].lo_hz && hz < spec.bands[b].hi_hz) {
          band = b;
          break;
        }
      }
    }
    out.masks[band][f] = 1;
    if (f != 0 && n - f != f) out.masks[band][n - f] = 1;
  }
  return out;
}

BandDecomposer::BandDecomposer(BandSpec spec) : spec_(std::move(spec)), masks_(build_masks(spec_)) {}

BandSignals BandDecomposer::decompose(std::span<const double> x) const {
  if (x.size() != masks_.bins) {
    throw ShapeError("band_decompose: signal length " + std::to_string(x.size()) +
                     " does not match segment length " + std::to_string(masks_.bins));
  }
  const Spectrum spectrum = dft(x);
  double peak = 1.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  const double tolerance = 1e-9 * peak;

  BandSignals out;
  out.bands = masks_.masks.size();
  out.length = x.size();
  out.values.resize(out.bands * out.length);
  Spectrum masked(x.size());
  for (std::size_t k = 0; k < out.bands; ++k) {
    const auto& m = masks_.masks[k];
    for (std::size_t f = 0; f < x.size(); ++f) masked[f] = m[f] ? spectrum[f] : Complex(0);
    const Spectrum signal = inverse_dft(masked);
    for (std::size_t t = 0; t < x.size(); ++t) {
      out.values[k * out.length + t] = signal[t].real();
      out.max_imag_residue = std::max(out.max_imag_residue, std::abs(signal[t].imag()));
    }
  }
  if (out.max_imag_residue > tolerance) {
    throw NumericFault("band_decompose: mask-symmetry fault, imaginary residue " +
                       std::to_string(out.max_imag_residue));
  }
  return out;
}

BandSignals band_decompose(std::span<const double> x, const BandSpec& spec) {
  return BandDecomposer(spec).decompose(x);
}

PsdEstimate psd(std::span<const double> x, const WelchSettings& settings) {
  const std::size_t seg = settings.segment_length;
  if (seg < 2) throw ConfigError("psd: segment length must be at least 2");
  if (settings.overlap >= seg) throw ConfigError("psd: overlap must be shorter than a segment");
  if (!(settings.sample_rate_hz > 0)) throw ConfigError("psd: sample rate must be positive");
  if (x.size() < seg) {
    throw ConfigError("psd: signal of length " + std::to_string(x.size()) +
                      " is shorter than one segment (" + std::to_string(seg) + ")");
  }
  std::vector<double> window(seg);
  double window_power = 0;
  for (std::size_t i = 0; i < seg; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg));
    window_power += window[i] * window[i];
  }
  const std::size_t step = seg - settings.overlap;
  const std::size_t bins = seg / 2 + 1;
  PsdEstimate out;
  out.settings = settings;
  out.density.assign(bins, 0.0);
  out.frequencies_hz.resize(bins);
  for (std::size_t f = 0; f < bins; ++f) {
    out.frequencies_hz[f] = static_cast<double>(f) * settings.sample_rate_hz / static_cast<double>(seg);
  }
  std::vector<Complex> frame(seg);
  for (std::size_t start = 0; start + seg <= x.size(); start += step) {
    for (std::size_t i = 0; i < seg; ++i) frame[i] = x[start + i] * window[i];
    const Spectrum s = dft(std::span<const Complex>(frame));
    for (std::size_t f = 0; f < bins; ++f) out.density[f] += std::norm(s[f]);
    ++out.segments;
  }
  const double scale = 1.0 / (settings.sample_rate_hz * window_power * static_cast<double>(out.segments));
  for (std::size_t f = 0; f < bins; ++f) {
    const bool edge = f == 0 || (seg % 2 == 0 && f == bins - 1);
    out.density[f] *= scale * (edge ? 1.0 : 2.0);
  }
  return out;
}

}  // namespace brn
