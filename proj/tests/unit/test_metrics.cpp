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

#include <cmath>
#include <numbers>
#include <sstream>

#include "brn/metrics.hpp"
#include "test_support.hpp"

using namespace brn;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

std::vector<double> plus(const std::vector<double>& a, const std::vector<double>& b, double scale = 1.0) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + scale * b[i];
  return out;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("mean power example") {
    const std::vector<double> g{1, -1, 2};
    CHECK(mean_power(g) == doctest::Approx(2.0));
    CHECK_THROWS_AS(mean_power(std::vector<double>{}), DataError);
  }

  TEST_CASE("temporal rrmse examples") {
    const auto y = test::random_signal(64, 1);
    std::vector<double> twice(y.size()), zero(y.size(), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) twice[i] = 2 * y[i];
    CHECK(rrmse_t(y, y) == 0.0);
    CHECK(rrmse_t(twice, y) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rrmse_t(zero, y) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(rrmse_t(y, zero), DataError);
    CHECK_THROWS_AS(rrmse_t(y, std::vector<double>(63, 1.0)), ShapeError);
  }

  TEST_CASE("correlation examples") {
    const std::vector<double> a{1, 2, 3}, b{1, 3, 2};
    CHECK(cc(a, b) == doctest::Approx(0.5).epsilon(1e-14));
    const auto y = test::random_signal(50, 2);
    std::vector<double> affine(y.size()), neg(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      affine[i] = 3 * y[i] + 1;
      neg[i] = -y[i];
    }
    CHECK(cc(affine, y) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cc(neg, y) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK_THROWS_AS(cc(std::vector<double>(3, 1.0), a), DataError);
  }

  TEST_CASE("snr improvement examples") {
    const std::vector<double> x{1, -1, 1, -1}, n{1, 1, 1, 1};
    const auto y = plus(x, n);
    const auto yhat = plus(x, n, 0.1);
    CHECK(snr_imp(x, y, yhat) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(snr_imp(x, y, y) == 0.0);
    // worse than the input is negative
    CHECK(snr_imp(x, y, plus(x, n, 10.0)) == doctest::Approx(-20.0).epsilon(1e-12));
    CHECK_THROWS_AS(snr_imp(x, y, x), InfiniteSnrError);
    CHECK_THROWS_AS(snr_imp(x, x, y), DataError);

    // halving the residual power gains 10*log10(2) dB, doubling loses it
    const double gain = 10.0 * std::log10(2.0);
    CHECK(std::abs(snr_imp(x, y, plus(x, n, 1.0 / std::sqrt(2.0))) - gain) < 1e-9);
    CHECK(std::abs(snr_imp(x, y, plus(x, n, std::sqrt(2.0))) + gain) < 1e-9);
  }

  TEST_CASE("score sample flags infinite snr") {
    const auto x = test::sinusoid(256, 10.0, 256.0);
    const auto y = plus(x, test::random_signal(256, 3, 0.5));
    const auto perfect = score_sample(4, -3.0, x, y, x);
    CHECK(perfect.sample_id == 4);
    CHECK(perfect.snr_db == -3.0);
    CHECK(perfect.rrmse_t == 0.0);
    CHECK(perfect.rrmse_s == 0.0);
    CHECK(perfect.cc == doctest::Approx(1.0));
    CHECK_FALSE(perfect.snr_imp.has_value());

    const auto passthrough = score_sample(5, -3.0, x, y, y);
    REQUIRE(passthrough.snr_imp.has_value());
    CHECK(*passthrough.snr_imp == 0.0);
  }

  TEST_CASE("spectral rrmse matches a frozen scipy reference") {
    // Welch settings as in the psd reference test; the value is
    // sqrt(mean((S(yhat) - S(y))^2)) / sqrt(mean(S(y)^2)) from scipy 1.15.3.
    std::vector<double> y(512), yhat(512);
    for (std::size_t t = 0; t < 512; ++t) {
      const double tt = static_cast<double>(t);
      y[t] = std::sin(2 * std::numbers::pi * 5 * tt / 256) + 0.5 * std::cos(2 * std::numbers::pi * 31 * tt / 256 + 0.3);
      yhat[t] = y[t] + 0.3 * std::cos(2 * std::numbers::pi * 40 * tt / 256) + 0.1 * std::sin(2 * std::numbers::pi * 3 * tt / 256);
    }
    CHECK(rrmse_s(yhat, y) == doctest::Approx(0.10009146144199702).epsilon(1e-10));
    CHECK(rrmse_t(yhat, y) == doctest::Approx(0.282842712474619).epsilon(1e-12));
    CHECK(cc(yhat, y) == doctest::Approx(0.9622504486493756).epsilon(1e-12));
  }

  TEST_CASE("property: metrics are invariant to a common scale") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto x = test::random_signal(256, seed);
      const auto y = plus(x, test::random_signal(256, seed + 50));
      const auto yhat = plus(x, test::random_signal(256, seed + 90), 0.3);
      const double a = 0.1 * static_cast<double>(seed) + 0.05;
      auto scaled = [a](std::vector<double> v) {
        for (auto& e : v) e *= a;
        return v;
      };
      CHECK(rrmse_t(scaled(yhat), scaled(x)) == doctest::Approx(rrmse_t(yhat, x)).epsilon(1e-12));
      CHECK(rrmse_s(scaled(yhat), scaled(x)) == doctest::Approx(rrmse_s(yhat, x)).epsilon(1e-12));
      CHECK(cc(scaled(yhat), scaled(x)) == doctest::Approx(cc(yhat, x)).epsilon(1e-12));
      CHECK(snr_imp(scaled(x), scaled(y), scaled(yhat)) == doctest::Approx(snr_imp(x, y, yhat)).epsilon(1e-10));
      CHECK(rrmse_t(yhat, x) >= 0);
      CHECK(std::abs(cc(yhat, x)) <= 1.0 + 1e-15);
    }
  }

  TEST_CASE("aggregate groups by level") {
    std::vector<SampleMetrics> s;
    s.push_back({0, 2.0, 0.1, 0.2, 0.9, 5.0});
    s.push_back({1, -7.0, 0.3, 0.4, 0.7, 3.0});
    s.push_back({2, 2.0, 0.5, 0.6, 0.5, std::nullopt});
    s.push_back({3, -7.0, 0.5, 0.2, 0.3, 1.0});
    const auto r = aggregate(s);
    REQUIRE(r.levels.size() == 2);
    CHECK(r.levels[0].snr_db == -7.0);
    CHECK(r.levels[1].snr_db == 2.0);
    CHECK(r.levels[0].means.count == 2);
    CHECK(r.levels[0].means.rrmse_t == doctest::Approx(0.4));
    CHECK(*r.levels[0].means.snr_imp == doctest::Approx(2.0));
    CHECK(*r.levels[1].means.snr_imp == doctest::Approx(5.0));
    CHECK(r.levels[1].means.infinite_snr == 1);
    CHECK(r.overall.count == 4);
    CHECK(r.overall.cc == doctest::Approx(0.6));
    CHECK(*r.overall.snr_imp == doctest::Approx(3.0));
    CHECK(r.overall.infinite_snr == 1);
    CHECK_THROWS_AS(aggregate({}), ConfigError);

    const auto all_inf = aggregate({{0, 1.0, 0, 0, 1, std::nullopt}});
    CHECK_FALSE(all_inf.overall.snr_imp.has_value());
  }

  TEST_CASE("aggregate of one sample is that sample") {
    const auto r = aggregate({{7, -2.0, 0.25, 0.5, 0.75, 4.0}});
    REQUIRE(r.levels.size() == 1);
    CHECK(r.overall.count == 1);
    CHECK(r.overall.rrmse_t == 0.25);
    CHECK(r.overall.rrmse_s == 0.5);
    CHECK(r.overall.cc == 0.75);
    CHECK(*r.overall.snr_imp == 4.0);
    CHECK(r.levels[0].means.rrmse_t == 0.25);
  }

  TEST_CASE("balanced levels: overall mean is the mean of level means") {
    const auto r = aggregate({{0, -1.0, 0.2, 0.1, 0.9, 1.0},
                              {1, -1.0, 0.4, 0.3, 0.7, 3.0},
                              {2, 1.0, 0.6, 0.5, 0.5, 5.0},
                              {3, 1.0, 0.8, 0.7, 0.3, 7.0}});
    REQUIRE(r.levels.size() == 2);
    CHECK(r.levels[0].means.rrmse_t == doctest::Approx(0.3));
    CHECK(r.levels[1].means.rrmse_t == doctest::Approx(0.7));
    CHECK(r.overall.rrmse_t == doctest::Approx((0.3 + 0.7) / 2));
    CHECK(*r.overall.snr_imp == doctest::Approx((2.0 + 6.0) / 2));
  }

  TEST_CASE("report csv layout") {
    std::vector<SampleMetrics> s;
    s.push_back({0, 2.0, 0.1, 0.2, 0.9, 5.0});
    s.push_back({1, -7.0, 0.3, 0.4, 0.7, std::nullopt});
    s.push_back({2, 2.0, 0.5, 0.6, 0.5, 1.0});
    std::ostringstream os;
    write_report_csv(aggregate(s), os);
    const auto lines = lines_of(os.str());
    REQUIRE(lines.size() == 1 + 3 + 2 + 1);
    CHECK(lines[0] == "sample_id,snr_db,rrmse_t,rrmse_s,cc,snr_imp");
    CHECK(lines[2].substr(0, 5) == "1,-7,");
    CHECK(lines[2].substr(lines[2].size() - 4) == ",inf");
    CHECK(lines[4].rfind("level,-7,", 0) == 0);
    CHECK(lines[5].rfind("level,2,", 0) == 0);
    CHECK(lines[6].rfind("overall,all,", 0) == 0);
    CHECK(lines[5].substr(lines[5].size() - 2) == ",3");
  }

  TEST_CASE("report csv file write") {
    test::TempDir dir("metrics");
    write_report_csv(aggregate({{0, 1.0, 0.5, 0.5, 0.5, 1.0}}), dir / "r.csv");
    CHECK(std::filesystem::exists(dir / "r.csv"));
    CHECK(test::list_dir(dir.path()).size() == 1);
  }
}
