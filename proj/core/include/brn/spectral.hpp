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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace brn {

struct Band {
  std::string name;
  double lo_hz = 0;  // inclusive
  double hi_hz = 0;  // exclusive, except that the Nyquist bin joins the top band
};

/// Frequency bands used to split a length-T segment sampled at fs.
///
/// A valid spec starts at 0 Hz, has contiguous bands (hi of band k equals lo
/// of band k + 1) and reaches at least fs / 2, so every DFT bin lands in
/// exactly one band.
struct BandSpec {
  double sample_rate_hz = 256.0;
  std::size_t segment_length = 512;
  std::vector<Band> bands;

  // delta [0,4) theta [4,8) alpha [8,12) beta [12,30) gamma [30,80) epsilon [80,fs/2].
  static BandSpec standard(double sample_rate_hz = 256.0, std::size_t segment_length = 512);

  std::size_t band_count() const { return bands.size(); }
  // Throws ConfigError.
  void validate() const;
};

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

// X[f] = sum_t x[t] exp(-j 2 pi f t / T). Radix-2 FFT when T is a power of two,
// direct summation otherwise.
Spectrum dft(std::span<const double> x);
Spectrum dft(std::span<const Complex> x);
// x[t] = (1 / T) sum_f X[f] exp(+j 2 pi f t / T).
Spectrum inverse_dft(std::span<const Complex> spectrum);

struct BandMasks {
  std::size_t bins = 0;
  std::vector<std::vector<std::uint8_t>> masks;  // K masks of `bins` entries, 0 or 1
};

BandMasks build_masks(const BandSpec& spec);

// K x T row-major band signals.
struct BandSignals {
  std::size_t bands = 0;
  std::size_t length = 0;
  std::vector<double> values;
  double max_imag_residue = 0;

  std::span<const double> band(std::size_t k) const {
    return std::span<const double>(values).subspan(k * length, length);
  }
};

// Masks are built once; decompose() can then be called concurrently.
class BandDecomposer {
 public:
  explicit BandDecomposer(BandSpec spec);

  const BandSpec& spec() const { return spec_; }
  const BandMasks& masks() const { return masks_; }

  // x_k = IDFT(M_k * DFT(x)). Throws NumericFault if a band keeps an imaginary
  // residue above 1e-9 * max(1, |x|_inf) (an asymmetric mask).
  BandSignals decompose(std::span<const double> x) const;

 private:
  BandSpec spec_;
  BandMasks masks_;
};

BandSignals band_decompose(std::span<const double> x, const BandSpec& spec);

struct WelchSettings {
  double sample_rate_hz = 256.0;
  std::size_t segment_length = 256;
  std::size_t overlap = 128;
};

// One-sided power spectral density (units^2 / Hz).
struct PsdEstimate {
  std::vector<double> frequencies_hz;
  std::vector<double> density;
  WelchSettings settings;
  std::size_t segments = 0;
};

/// Welch estimate: periodic Hann window, no detrending, mean over segments,
/// density scaling 1 / (fs * sum(w^2)), interior bins doubled.
PsdEstimate psd(std::span<const double> x, const WelchSettings& settings = {});

}  // namespace brn
