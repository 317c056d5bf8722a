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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brn/data.hpp"
#include "brn/error.hpp"
#include "brn/spectral.hpp"

namespace brn {

// Raised by snr_imp when the estimate equals the clean reference exactly.
class InfiniteSnrError : public NumericFault {
 public:
  InfiniteSnrError() : NumericFault("snr_imp: denoised signal equals the clean reference (infinite SNR)") {}
};

// Mean power (1/N) sum g^2.
double mean_power(std::span<const double> g);

// RMS(yhat - y) / RMS(y). Throws DataError when RMS(y) = 0.
double rrmse_t(std::span<const double> yhat, std::span<const double> y);

// RMS(S(yhat) - S(y)) / RMS(S(y)) over Welch PSDs.
double rrmse_s(std::span<const double> yhat, std::span<const double> y,
               const WelchSettings& settings = {});

// Pearson correlation. Throws DataError if either signal is constant.
double cc(std::span<const double> yhat, std::span<const double> y);

/// 10 log10(P(x) / P(yhat - x)) - 10 log10(P(x) / P(y - x)) with clean x,
/// noisy y and estimate yhat. Throws InfiniteSnrError when yhat == x and
/// DataError when y == x.
double snr_imp(std::span<const double> x, std::span<const double> y, std::span<const double> yhat);

struct SampleMetrics {
  std::size_t sample_id = 0;
  double snr_db = 0;
  double rrmse_t = 0;
  double rrmse_s = 0;
  double cc = 0;
  std::optional<double> snr_imp;  // empty: infinite SNR (perfect reconstruction)
};

// Metrics of one (clean, noisy, denoised) triple.
SampleMetrics score_sample(std::size_t sample_id, double snr_db, std::span<const double> clean,
                           std::span<const double> noisy, std::span<const double> denoised,
                           const WelchSettings& settings = {});

struct MetricMeans {
  std::size_t count = 0;
  double rrmse_t = 0;
  double rrmse_s = 0;
  double cc = 0;
  // Mean over samples with a finite snr_imp; empty when there are none.
  std::optional<double> snr_imp;
  std::size_t infinite_snr = 0;  // samples flagged by the sentinel
};

struct LevelSummary {
  double snr_db = 0;
  MetricMeans means;
};

struct MetricReport {
  std::vector<SampleMetrics> samples;
  std::vector<LevelSummary> levels;  // ascending snr_db
  MetricMeans overall;
};

// Throws ConfigError on an empty sample list.
MetricReport aggregate(std::vector<SampleMetrics> samples);

/// CSV with header sample_id,snr_db,rrmse_t,rrmse_s,cc,snr_imp: one row per
/// sample, then one "level" row per SNR level and a final "overall" row.
/// Infinite snr_imp is written as "inf".
void write_report_csv(const MetricReport& report, std::ostream& os);
void write_report_csv(const MetricReport& report, const std::filesystem::path& path);

}  // namespace brn
