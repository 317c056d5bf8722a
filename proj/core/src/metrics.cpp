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

#include "brn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "brn/binary_io.hpp"

namespace brn {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw DataError(std::string(what) + ": empty signal");
}

double rms_of_difference(std::span<const double> a, std::span<const double> b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace

double mean_power(std::span<const double> g) {
  if (g.empty()) throw DataError("mean_power: empty signal");
  double acc = 0;
  for (double v : g) acc += v * v;
  return acc / static_cast<double>(g.size());
}

double rrmse_t(std::span<const double> yhat, std::span<const double> y) {
  require_same_length(yhat, y, "rrmse_t");
  const double ref = rms(y);
  if (ref == 0.0) throw DataError("rrmse_t: degenerate reference with zero RMS");
  return rms_of_difference(yhat, y) / ref;
}

double rrmse_s(std::span<const double> yhat, std::span<const double> y, const WelchSettings& settings) {
  require_same_length(yhat, y, "rrmse_s");
  const PsdEstimate s_hat = psd(yhat, settings);
  const PsdEstimate s_ref = psd(y, settings);
  const double ref = rms(s_ref.density);
  if (ref == 0.0) throw DataError("rrmse_s: degenerate reference with zero PSD");
  return rms_of_difference(s_hat.density, s_ref.density) / ref;
}

double cc(std::span<const double> yhat, std::span<const double> y) {
  require_same_length(yhat, y, "cc");
  const double n = static_cast<double>(y.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ma += yhat[i];
    mb += y[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = yhat[i] - ma;
    const double b = y[i] - mb;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  if (saa == 0.0 || sbb == 0.0) throw DataError("cc: constant signal has zero variance");
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

double snr_imp(std::span<const double> x, std::span<const double> y, std::span<const double> yhat) {
  require_same_length(x, y, "snr_imp");
  require_same_length(x, yhat, "snr_imp");
  std::vector<double> out_res(x.size()), in_res(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out_res[i] = yhat[i] - x[i];
    in_res[i] = y[i] - x[i];
  }
  const double p_out = mean_power(out_res);
  const double p_in = mean_power(in_res);
  if (p_in == 0.0) throw DataError("snr_imp: noisy signal equals the clean reference");
  if (p_out == 0.0) throw InfiniteSnrError();
  // the clean power cancels between the two SNRs
  return 10.0 * std::log10(p_in / p_out);
}

SampleMetrics score_sample(std::size_t sample_id, double snr_db, std::span<const double> clean,
                           std::span<const double> noisy, std::span<const double> denoised,
                           const WelchSettings& settings) {
  SampleMetrics m;
  m.sample_id = sample_id;
  m.snr_db = snr_db;
  m.rrmse_t = rrmse_t(denoised, clean);
  m.rrmse_s = rrmse_s(denoised, clean, settings);
  m.cc = cc(denoised, clean);
  try {
    m.snr_imp = snr_imp(clean, noisy, denoised);
  } catch (const InfiniteSnrError&) {
    m.snr_imp.reset();
  }
  return m;
}

namespace {

MetricMeans means_of(const std::vector<const SampleMetrics*>& group) {
  MetricMeans out;
  out.count = group.size();
  double imp = 0;
  std::size_t finite = 0;
  for (const auto* s : group) {
    out.rrmse_t += s->rrmse_t;
    out.rrmse_s += s->rrmse_s;
    out.cc += s->cc;
    if (s->snr_imp) {
      imp += *s->snr_imp;
      ++finite;
    } else {
      ++out.infinite_snr;
    }
  }
  const double n = static_cast<double>(group.size());
  out.rrmse_t /= n;
  out.rrmse_s /= n;
  out.cc /= n;
  if (finite > 0) out.snr_imp = imp / static_cast<double>(finite);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_imp(const std::optional<double>& v) { return v ? fmt(*v) : std::string("inf"); }

}  // namespace

MetricReport aggregate(std::vector<SampleMetrics> samples) {
  if (samples.empty()) throw ConfigError("aggregate: no samples");
  MetricReport report;
  report.samples = std::move(samples);
  std::map<double, std::vector<const SampleMetrics*>> by_level;
  std::vector<const SampleMetrics*> all;
  for (const auto& s : report.samples) {
    by_level[s.snr_db].push_back(&s);
    all.push_back(&s);
  }
  for (const auto& [level, group] : by_level) report.levels.push_back({level, means_of(group)});
  report.overall = means_of(all);
  return report;
}

void write_report_csv(const MetricReport& report, std::ostream& os) {
  os << "sample_id,snr_db,rrmse_t,rrmse_s,cc,snr_imp\n";
  for (const auto& s : report.samples) {
    os << s.sample_id << ',' << fmt(s.snr_db) << ',' << fmt(s.rrmse_t) << ',' << fmt(s.rrmse_s) << ','
       << fmt(s.cc) << ',' << fmt_imp(s.snr_imp) << '\n';
  }
  for (const auto& level : report.levels) {
    const auto& m = level.means;
    os << "level," << fmt(level.snr_db) << ',' << fmt(m.rrmse_t) << ',' << fmt(m.rrmse_s) << ','
       << fmt(m.cc) << ',' << fmt_imp(m.snr_imp) << '\n';
  }
  const auto& m = report.overall;
  os << "overall,all," << fmt(m.rrmse_t) << ',' << fmt(m.rrmse_s) << ',' << fmt(m.cc) << ','
     << fmt_imp(m.snr_imp) << '\n';
}

void write_report_csv(const MetricReport& report, const std::filesystem::path& path) {
  io::atomic_write(path, [&](std::ostream& os) { write_report_csv(report, os); }, false);
}

}  // namespace brn
