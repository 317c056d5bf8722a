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

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "brn/data.hpp"
#include "commands.hpp"
#include "test_support.hpp"

using namespace brn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out, err;
};

Outcome brn_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

std::vector<std::string> file_lines(const fs::path& path) {
  std::ifstream is(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

// Small dataset (T = 64, 10 pairs) and checkpoints shared by the tests below.
struct Fixture {
  test::TempDir dir{"cli"};
  fs::path data = dir / "d.eds";

  Fixture() {
    const auto r = brn_cli({"synth", "--out", data.string(), "--segment-length", "64", "--n-clean", "1", "--n-eog",
                            "1", "--seed", "3"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }

  // One-epoch checkpoint, trained once per distinct argument list.
  fs::path checkpoint(const std::vector<std::string>& extra = {}) {
    std::string key;
    for (const auto& e : extra) key += e + " ";
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const fs::path out = dir / ("m" + std::to_string(cache.size()) + ".brn");
    std::vector<std::string> args{"train", "--data", data.string(), "--out", out.string(), "--channels", "8",
                                  "--segment-length", "64", "--epochs", "1", "--batch-size", "8", "--seed", "1"};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = brn_cli(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    cache[key] = out;
    return out;
  }

  std::map<std::string, fs::path> cache;
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    CHECK(brn_cli({"--help"}).code == 0);
    CHECK(brn_cli({"train", "--help"}).code == 0);
    CHECK(brn_cli({}).code == 2);
    CHECK(brn_cli({"frobnicate"}).code == 2);
    CHECK(brn_cli({"synth", "--out", "x.eds", "--no-such-flag"}).code == 2);
    CHECK(brn_cli({"synth"}).code == 2);
    const auto bad = brn_cli({"synth", "--out", "x.eds", "--channels", "10"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("channels") != std::string::npos);
    CHECK(brn_cli({"synth", "--out", "x.eds", "--kind", "ecg"}).code == 2);
    CHECK(brn_cli({"eval", "--data", "x.eds", "--out", "r.csv", "--split", "dev"}).code == 2);
    CHECK_FALSE(fs::exists("x.eds"));
  }

  TEST_CASE("synth writes every pairing at every level") {
    test::TempDir dir("synth");
    const auto r = brn_cli({"synth", "--out", (dir / "d.eds").string(), "--segment-length", "64", "--n-clean", "3",
                            "--n-eog", "4", "--seed", "2"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto pairs = read_dataset(dir / "d.eds");
    REQUIRE(pairs.size() == 40);
    std::map<double, int> levels;
    for (const auto& p : pairs) {
      ++levels[p.snr_db];
      CHECK(p.kind == ArtifactKind::kEog);
      CHECK(p.noisy.size() == 64);
      double mean = 0, var = 0;
      for (double v : p.noisy) mean += v / 64;
      for (double v : p.noisy) var += (v - mean) * (v - mean) / 64;
      CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-5));
    }
    CHECK(levels.size() == 10);
    for (const auto& [level, n] : levels) CHECK(n == 4);
    CHECK(r.out.find("split train=32 val=4 test=4") != std::string::npos);
  }

  TEST_CASE("synth mixed tags every pair") {
    test::TempDir dir("synth");
    const auto r = brn_cli({"synth", "--out", (dir / "m.eds").string(), "--segment-length", "64", "--kind", "mixed",
                            "--n-clean", "2", "--n-eog", "2", "--n-emg", "3", "--snr-grid", "-1,0"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto pairs = read_dataset(dir / "m.eds");
    CHECK(pairs.size() == 6);
    for (const auto& p : pairs) CHECK(p.kind == ArtifactKind::kMixed);
  }

  TEST_CASE("the seed makes output byte-identical") {
    test::TempDir dir("seed");
    auto synth = [&](const std::string& name, const std::string& seed) {
      return brn_cli({"synth", "--out", (dir / name).string(), "--segment-length", "64", "--n-clean", "2", "--n-eog",
                      "2", "--seed", seed})
          .code;
    };
    REQUIRE(synth("a.eds", "5") == 0);
    REQUIRE(synth("b.eds", "5") == 0);
    REQUIRE(synth("c.eds", "6") == 0);
    CHECK(read_bytes(dir / "a.eds") == read_bytes(dir / "b.eds"));
    CHECK(read_bytes(dir / "a.eds") != read_bytes(dir / "c.eds"));

    auto& f = fixture();
    auto train = [&](const std::string& name) {
      return brn_cli({"train", "--data", f.data.string(), "--out", (dir / name).string(), "--channels", "8",
                      "--segment-length", "64", "--band-count", "3", "--epochs", "2", "--batch-size", "4", "--seed",
                      "7"})
          .code;
    };
    REQUIRE(train("a.brn") == 0);
    REQUIRE(train("b.brn") == 0);
    CHECK(read_bytes(dir / "a.brn") == read_bytes(dir / "b.brn"));
    CHECK(read_bytes(dir / "a.brn.history.csv") == read_bytes(dir / "b.brn.history.csv"));
  }

  TEST_CASE("toy training reduces the loss within a minute") {
    auto& f = fixture();
    const fs::path ckpt = f.dir / "toy.brn";
    const fs::path hist = f.dir / "toy.csv";
    const auto start = std::chrono::steady_clock::now();
    const auto r = brn_cli({"train", "--data", f.data.string(), "--out", ckpt.string(), "--history", hist.string(),
                            "--channels", "8", "--segment-length", "64", "--band-count", "3", "--epochs", "50",
                            "--batch-size", "8", "--lr", "3e-3", "--seed", "1"});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(seconds < 60.0);
    CHECK(r.out.find("train=8 val=1 test=1") != std::string::npos);
    const auto lines = file_lines(hist);
    REQUIRE(lines.size() == 51);
    CHECK(lines[0] == "epoch,train_mse,val_rrmse_t,val_rrmse_s,val_cc,val_snr_imp");
    const double first = std::stod(fields(lines[1])[1]);
    const double last = std::stod(fields(lines[50])[1]);
    CHECK(last < first);
    CHECK(fs::exists(ckpt));
  }

  TEST_CASE("denoise is deterministic and keeps the segment length") {
    auto& f = fixture();
    const auto ckpt = f.checkpoint();
    const fs::path a = f.dir / "a.f32", b = f.dir / "b.f32";
    REQUIRE(brn_cli({"denoise", "--checkpoint", ckpt.string(), "--in", f.data.string(), "--out", a.string()}).code == 0);
    REQUIRE(brn_cli({"denoise", "--checkpoint", ckpt.string(), "--in", f.data.string(), "--out", b.string(), "--threads",
                     "2"})
                .code == 0);
    const auto rows = read_f32_matrix(a, 64);
    CHECK(rows.size() == 10);
    CHECK(fs::file_size(a) == 10 * 64 * 4);
    CHECK(read_bytes(a) == read_bytes(b));

    // a flat f32 matrix is accepted as input too
    const fs::path c = f.dir / "c.f32";
    REQUIRE(brn_cli({"denoise", "--checkpoint", ckpt.string(), "--in", a.string(), "--out", c.string()}).code == 0);
    CHECK(read_f32_matrix(c, 64).size() == 10);
  }

  TEST_CASE("emitted band outputs sum to the denoised signal") {
    auto& f = fixture();
    const auto ckpt = f.checkpoint();
    const fs::path y = f.dir / "y.f32", bands = f.dir / "bands.f32";
    const auto r = brn_cli({"denoise", "--checkpoint", ckpt.string(), "--in", f.data.string(), "--out", y.string(),
                            "--emit-bands", bands.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto out = read_f32_matrix(y, 64);
    const auto parts = read_f32_matrix(bands, 64);
    REQUIRE(parts.size() == 10 * 7);  // six bands plus refinement
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t t = 0; t < 64; ++t) {
        double s = 0;
        for (std::size_t k = 0; k < 7; ++k) s += parts[i * 7 + k][t];
        CHECK(std::abs(s - out[i][t]) <= 1e-6 * std::max(1.0, std::abs(out[i][t])));
      }
  }

  TEST_CASE("no_fullband checkpoints emit a zero refinement") {
    auto& f = fixture();
    const auto ckpt = f.checkpoint({"--ablate", "no_fullband"});
    const fs::path y = f.dir / "nf.f32", bands = f.dir / "nf_bands.f32";
    REQUIRE(brn_cli({"denoise", "--checkpoint", ckpt.string(), "--in", f.data.string(), "--out", y.string(),
                     "--emit-bands", bands.string()})
                .code == 0);
    const auto parts = read_f32_matrix(bands, 64);
    for (std::size_t i = 0; i < 10; ++i)
      for (double v : parts[i * 7 + 6]) CHECK(v == 0.0);
  }

  TEST_CASE("eval report schema") {
    auto& f = fixture();
    const auto ckpt = f.checkpoint();
    const fs::path rep = f.dir / "r.csv";
    const auto r = brn_cli({"eval", "--checkpoint", ckpt.string(), "--data", f.data.string(), "--split", "all", "--out",
                            rep.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto lines = file_lines(rep);
    REQUIRE(lines.size() == 1 + 10 + 10 + 1);
    CHECK(lines[0] == "sample_id,snr_db,rrmse_t,rrmse_s,cc,snr_imp");
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(fields(lines[i]).size() == 6);
    CHECK(fields(lines[11])[0] == "level");
    CHECK(fields(lines[11])[1] == "-7");
    CHECK(fields(lines[20])[1] == "2");
    CHECK(fields(lines[21])[0] == "overall");

    REQUIRE(brn_cli({"eval", "--checkpoint", ckpt.string(), "--data", f.data.string(), "--out", rep.string()}).code == 0);
    CHECK(file_lines(rep).size() == 1 + 1 + 1 + 1);  // one test sample, one level
  }

  TEST_CASE("identity eval scores zero improvement") {
    auto& f = fixture();
    const fs::path rep = f.dir / "id.csv";
    const auto r = brn_cli({"eval", "--identity", "--data", f.data.string(), "--split", "all", "--out", rep.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto lines = file_lines(rep);
    REQUIRE(lines.size() == 22);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      CHECK(std::abs(std::stod(fields(lines[i])[5])) < 1e-12);
    }
    CHECK(brn_cli({"eval", "--data", f.data.string(), "--out", rep.string()}).code == 2);
  }

  TEST_CASE("viz-route names the standard bands") {
    auto& f = fixture();
    const auto ckpt = f.checkpoint();
    const fs::path csv = f.dir / "route.csv", img = f.dir / "route.pgm";
    const auto r = brn_cli({"viz-route", "--checkpoint", ckpt.string(), "--in", f.data.string(), "--sample", "3",
                            "--out", csv.string(), "--image", img.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto lines = file_lines(csv);
    REQUIRE(lines.size() == 7);
    CHECK(fields(lines[0]).size() == 65);
    CHECK(fields(lines[0])[0] == "band");
    const char* names[] = {"delta", "theta", "alpha", "beta", "gamma", "epsilon"};
    for (std::size_t k = 0; k < 6; ++k) {
      const auto row = fields(lines[k + 1]);
      CHECK(row[0] == names[k]);
      for (std::size_t t = 1; t < row.size(); ++t) {
        const double v = std::stod(row[t]);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
    const std::string pgm = read_bytes(img);
    CHECK(pgm.rfind("P5\n64 96\n255\n", 0) == 0);
    CHECK(pgm.size() == std::string("P5\n64 96\n255\n").size() + 64 * 96);

    CHECK(brn_cli({"viz-route", "--checkpoint", ckpt.string(), "--in", f.data.string(), "--sample", "10", "--out",
                   (f.dir / "bad.csv").string()})
              .code == 2);
    CHECK_FALSE(fs::exists(f.dir / "bad.csv"));
  }

  TEST_CASE("route_all_one gives an all-ones heatmap") {
    auto& f = fixture();
    const auto ckpt = f.checkpoint({"--ablate", "route_all_one"});
    const fs::path csv = f.dir / "ones.csv";
    REQUIRE(brn_cli({"viz-route", "--checkpoint", ckpt.string(), "--in", f.data.string(), "--out", csv.string()}).code ==
            0);
    const auto lines = file_lines(csv);
    for (std::size_t k = 1; k < lines.size(); ++k) {
      const auto row = fields(lines[k]);
      for (std::size_t t = 1; t < row.size(); ++t) CHECK(row[t] == "1");
    }
  }

  TEST_CASE("failures map to exit codes and leave no output") {
    auto& f = fixture();
    const auto ckpt = f.checkpoint();
    test::TempDir dir("fail");
    const fs::path out = dir / "y.f32";

    // missing files
    CHECK(brn_cli({"denoise", "--checkpoint", (dir / "none.brn").string(), "--in", f.data.string(), "--out",
                   out.string()})
              .code == 3);
    CHECK(brn_cli({"denoise", "--checkpoint", ckpt.string(), "--in", (dir / "none.eds").string(), "--out",
                   out.string()})
              .code == 3);
    CHECK(brn_cli({"train", "--data", (dir / "none.eds").string(), "--out", (dir / "m.brn").string()}).code == 3);

    // corrupt checkpoint
    std::string bytes = read_bytes(ckpt);
    {
      std::ofstream os(dir / "cut.brn", std::ios::binary);
      os << bytes.substr(0, bytes.size() / 2);
    }
    CHECK(brn_cli({"denoise", "--checkpoint", (dir / "cut.brn").string(), "--in", f.data.string(), "--out",
                   out.string()})
              .code == 3);

    // a non-finite weight is a numeric fault
    const char nan_bits[4] = {0, 0, static_cast<char>(0xc0), 0x7f};
    bytes.replace(bytes.size() - 4, 4, nan_bits, 4);
    {
      std::ofstream os(dir / "nan.brn", std::ios::binary);
      os << bytes;
    }
    const auto r = brn_cli({"denoise", "--checkpoint", (dir / "nan.brn").string(), "--in", f.data.string(), "--out",
                            out.string()});
    CHECK(r.code == 4);
    CHECK(r.err.find("non-finite") != std::string::npos);

    // a dataset of the wrong length
    CHECK(brn_cli({"train", "--data", f.data.string(), "--out", (dir / "m.brn").string(), "--segment-length", "128",
                   "--channels", "8", "--epochs", "1"})
              .code == 3);

    // a bad config file
    {
      std::ofstream os(dir / "bad.json");
      os << R"({"model": {"chanels": 8}})";
    }
    CHECK(brn_cli({"synth", "--out", out.string(), "--config", (dir / "bad.json").string()}).code == 2);

    CHECK_FALSE(fs::exists(out));
    CHECK_FALSE(fs::exists(dir / "m.brn"));
    CHECK(test::list_dir(dir.path()).size() == 3);  // cut.brn, nan.brn, bad.json
  }

  TEST_CASE("config file and print-config") {
    test::TempDir dir("cfg");
    {
      std::ofstream os(dir / "c.json");
      os << R"({"model": {"segment_length": 64}, "data": {"n_clean": 1, "n_eog": 1}, "seed": 4})";
    }
    const auto r = brn_cli({"synth", "--config", (dir / "c.json").string(), "--out", (dir / "d.eds").string(),
                            "--print-config", "--snr-grid", "0..1"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("\"seed\": 4") != std::string::npos);
    CHECK(read_dataset(dir / "d.eds").size() == 2);
  }
}
