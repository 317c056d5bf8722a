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

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace brn {

enum class ArtifactKind : std::uint8_t { kEog = 0, kEmg = 1, kMixed = 2 };

const char* artifact_kind_name(ArtifactKind kind);
ArtifactKind parse_artifact_kind(const std::string& name);  // "eog" | "emg" | "mixed"

using Signal = std::vector<double>;

/// One training/evaluation record: a clean segment and its contaminated version.
struct SignalPair {
  Signal clean;
  Signal noisy;
  double snr_db = 0;
  ArtifactKind kind = ArtifactKind::kEog;

  bool operator==(const SignalPair&) const = default;
};

double rms(std::span<const double> g);

/// Noise scale that puts artifact n at `snr_db` against clean x, using the
/// amplitude-ratio definition SNR = 10 log10(RMS(x) / RMS(lambda n)):
/// lambda = RMS(x) / (RMS(n) 10^(snr_db / 10)). snr_db = +inf gives 0.
double solve_lambda(std::span<const double> clean, std::span<const double> artifact, double snr_db);

// 10 log10(RMS(x) / RMS(y - x)), the inverse of solve_lambda for one artifact.
double contamination_snr_db(std::span<const double> clean, std::span<const double> noisy);

/// y = x + lambda N for one artifact. With both artifacts each one gets its
/// own lambda at `snr_db` before summation.
SignalPair contaminate(std::span<const double> clean, std::optional<std::span<const double>> eog,
                       std::optional<std::span<const double>> emg, double snr_db);

// Divides clean and noisy by the population standard deviation of noisy.
SignalPair standardize(const SignalPair& pair);

std::vector<double> default_snr_grid();  // -7, -6, ..., 2 dB

/// Instantiates every clean/artifact pairing once per SNR level.
///
/// EOG: clean i with EOG i (clean reused cyclically if shorter). EMG: clean
/// segments are sampled with replacement to match the EMG count. Mixed: EOG
/// and clean are sampled with replacement up to max(#EOG, #EMG).
std::vector<SignalPair> augment_snr_grid(const std::vector<Signal>& clean,
                                         const std::vector<Signal>& eog,
                                         const std::vector<Signal>& emg,
                                         std::span<const double> grid, ArtifactKind kind,
                                         std::uint64_t seed);

struct SurrogateConfig {
  std::uint64_t seed = 0;
  std::size_t n_clean = 200;
  std::size_t n_eog = 200;
  std::size_t n_emg = 200;
  std::size_t segment_length = 512;
  double sample_rate_hz = 256.0;
  // Clean EEG: 1/f^exponent power spectrum over [clean_lo_hz, clean_hi_hz]
  // plus a Gaussian bump centred in [8, 12] Hz.
  double clean_lo_hz = 0.5;
  double clean_hi_hz = 80.0;
  double clean_exponent = 1.0;
  double alpha_gain = 4.0;
  double alpha_width_hz = 1.0;
  // EOG: blink-like transients and drift, low-passed at eog_cutoff_hz.
  double eog_cutoff_hz = 5.0;
  // EMG: bursts of noise band-passed to [emg_lo_hz, emg_hi_hz].
  double emg_lo_hz = 20.0;
  double emg_hi_hz = 128.0;
};

struct SurrogateSets {
  std::vector<Signal> clean;
  std::vector<Signal> eog;
  std::vector<Signal> emg;
};

// Unit-RMS surrogate segments. Each segment draws from its own RNG stream
// derived from (seed, class, index), so output does not depend on scheduling.
SurrogateSets synth_surrogate(const SurrogateConfig& cfg);

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Seeded shuffle, then val = test = round(n / 10) and train takes the rest.
DatasetSplit split(std::size_t n, std::uint64_t seed);

// "EDS1" file: u32 version, u32 n_pairs, u32 T, u8 kind, then per pair
// f32 snr_db, f32 clean[T], f32 noisy[T]; little-endian. Values are stored
// as f32, so the round trip is exact for f32-representable inputs.
void write_dataset(const std::vector<SignalPair>& pairs, const std::filesystem::path& path);
std::vector<SignalPair> read_dataset(const std::filesystem::path& path);

// Rounds every value to the nearest f32, as write_dataset would.
void quantize_to_f32(std::vector<SignalPair>& pairs);

// Flat little-endian f32 matrix, one segment of `segment_length` per row.
std::vector<Signal> read_f32_matrix(const std::filesystem::path& path, std::size_t segment_length);
void write_f32_matrix(const std::vector<Signal>& rows, const std::filesystem::path& path);

}  // namespace brn
