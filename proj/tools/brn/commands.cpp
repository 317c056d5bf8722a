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

#include "commands.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "brn/binary_io.hpp"
#include "brn/checkpoint.hpp"
#include "brn/data.hpp"
#include "brn/error.hpp"
#include "brn/metrics.hpp"
#include "brn/model.hpp"
#include "brn/train.hpp"
#include "run_config.hpp"

namespace brn::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// Flags shared by every command.
struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

// Flags overriding run-config keys (synth and train).
struct ConfigFlags {
  std::optional<std::size_t> channels, heads, encoder_stages, blocks_per_stage, segment_length, band_count;
  std::optional<double> sample_rate;
  std::optional<double> lr, weight_decay, beta1, beta2, adam_eps, grad_clip;
  std::optional<std::size_t> epochs, batch_size, micro_batch;
  std::optional<std::string> kind, snr_grid;
  std::optional<std::size_t> n_clean, n_eog, n_emg;
  std::optional<std::string> clean_f32, eog_f32, emg_f32;
  std::vector<std::string> ablate;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON run config; flags override its keys");
  app->add_option("--seed", f.seed, "Seed for data synthesis, splits, initialisation and shuffling");
  app->add_option("--threads", f.threads, "Worker threads for evaluation passes")->check(CLI::PositiveNumber);
}

void add_model_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--channels", f.channels, "Hidden channels C");
  app->add_option("--heads", f.heads, "Attention heads across bands");
  app->add_option("--encoder-stages", f.encoder_stages, "Encoder/decoder stages");
  app->add_option("--blocks-per-stage", f.blocks_per_stage, "Inception blocks per stage");
  app->add_option("--segment-length", f.segment_length, "Segment length T in samples");
  app->add_option("--sample-rate", f.sample_rate, "Sampling rate in Hz");
  app->add_option("--band-count", f.band_count, "Use K equal-width bands instead of the EEG bands");
}

void add_data_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--kind", f.kind, "Artifact kind: eog, emg or mixed");
  app->add_option("--snr-grid", f.snr_grid, "SNR levels in dB: LO..HI or a comma list");
  app->add_option("--n-clean", f.n_clean, "Surrogate clean segments");
  app->add_option("--n-eog", f.n_eog, "Surrogate EOG segments");
  app->add_option("--n-emg", f.n_emg, "Surrogate EMG segments");
  app->add_option("--clean-f32", f.clean_f32, "Flat f32 matrix of clean segments (replaces the surrogate)");
  app->add_option("--eog-f32", f.eog_f32, "Flat f32 matrix of EOG segments");
  app->add_option("--emg-f32", f.emg_f32, "Flat f32 matrix of EMG segments");
}

void add_train_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--lr", f.lr, "Learning rate");
  app->add_option("--weight-decay", f.weight_decay, "Decoupled weight decay");
  app->add_option("--epochs", f.epochs, "Training epochs");
  app->add_option("--batch-size", f.batch_size, "Mini-batch size");
  app->add_option("--beta1", f.beta1, "Adam beta1");
  app->add_option("--beta2", f.beta2, "Adam beta2");
  app->add_option("--adam-eps", f.adam_eps, "Adam epsilon");
  app->add_option("--micro-batch", f.micro_batch, "Samples per gradient-accumulation chunk");
  app->add_option("--grad-clip", f.grad_clip, "Global gradient-norm clip (off by default)");
  app->add_option("--ablate", f.ablate,
                  "Ablation toggle, repeatable: no_fullband, route_all_one, no_cross_band, no_band_embedding");
}

RunConfig resolve(const CommonFlags& c, const ConfigFlags* f) {
  RunConfig cfg;
  if (c.config) merge_json_file(cfg, *c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  if (f) {
    auto& m = cfg.model;
    if (f->channels) m.channels = *f->channels;
    if (f->heads) m.heads = *f->heads;
    if (f->encoder_stages) m.encoder_stages = *f->encoder_stages;
    if (f->blocks_per_stage) m.blocks_per_stage = *f->blocks_per_stage;
    if (f->segment_length) m.segment_length = *f->segment_length;
    if (f->sample_rate) m.sample_rate_hz = *f->sample_rate;
    if (f->band_count) {
      m.band_count = *f->band_count;
      m.bands.reset();
    }
    auto& t = cfg.train;
    if (f->lr) t.lr = *f->lr;
    if (f->weight_decay) t.weight_decay = *f->weight_decay;
    if (f->epochs) t.epochs = *f->epochs;
    if (f->batch_size) t.batch_size = *f->batch_size;
    if (f->beta1) t.beta1 = *f->beta1;
    if (f->beta2) t.beta2 = *f->beta2;
    if (f->adam_eps) t.eps = *f->adam_eps;
    if (f->micro_batch) t.micro_batch = *f->micro_batch;
    if (f->grad_clip) t.grad_clip = *f->grad_clip;
    auto& d = cfg.data;
    if (f->kind) d.kind = parse_artifact_kind(*f->kind);
    if (f->snr_grid) d.snr_grid = parse_snr_grid(*f->snr_grid);
    if (f->n_clean) d.surrogate.n_clean = *f->n_clean;
    if (f->n_eog) d.surrogate.n_eog = *f->n_eog;
    if (f->n_emg) d.surrogate.n_emg = *f->n_emg;
    if (f->clean_f32) d.clean_path = *f->clean_f32;
    if (f->eog_f32) d.eog_path = *f->eog_f32;
    if (f->emg_f32) d.emg_path = *f->emg_f32;
    for (const auto& a : f->ablate) apply_ablation(cfg.ablation, a);
  }
  cfg.validate();
  return cfg;
}

void require_length(const std::vector<SignalPair>& pairs, std::size_t t, const fs::path& path) {
  if (pairs.empty()) throw DataError(path.string() + ": dataset is empty");
  if (pairs.front().clean.size() != t) {
    throw DataError(fmt("%s: segment length %zu does not match the model (T=%zu)", path.string().c_str(),
                        pairs.front().clean.size(), t));
  }
}

std::vector<SignalPair> select(const std::vector<SignalPair>& pairs, const std::vector<std::size_t>& idx) {
  std::vector<SignalPair> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(pairs[i]);
  return out;
}

std::string means_line(const MetricMeans& m) {
  std::string s = fmt("rrmse_t=%.6f rrmse_s=%.6f cc=%.6f", m.rrmse_t, m.rrmse_s, m.cc);
  s += m.snr_imp ? fmt(" snr_imp=%.4f dB", *m.snr_imp) : std::string(" snr_imp=inf");
  if (m.infinite_snr) s += fmt(" (infinite: %zu)", m.infinite_snr);
  return s;
}

bool has_magic(const fs::path& path, const char* magic) {
  std::ifstream is(path, std::ios::binary);
  char buf[4] = {};
  is.read(buf, 4);
  return is.gcount() == 4 && std::equal(buf, buf + 4, magic);
}

// Noisy inputs from an EDS1 dataset or a flat f32 matrix.
std::vector<Signal> read_inputs(const fs::path& path, std::size_t t) {
  if (!fs::exists(path)) throw DataError(path.string() + ": no such file");
  if (has_magic(path, "EDS1")) {
    auto pairs = read_dataset(path);
    require_length(pairs, t, path);
    std::vector<Signal> out;
    out.reserve(pairs.size());
    for (auto& p : pairs) out.push_back(std::move(p.noisy));
    return out;
  }
  auto rows = read_f32_matrix(path, t);
  if (rows.empty()) throw DataError(path.string() + ": no segments");
  return rows;
}

std::unique_ptr<BandRouteNet> open_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw DataError(path.string() + ": no such checkpoint");
  return load_checkpoint(path);
}

Tensor stack_inputs(std::span<const Signal> rows, std::size_t t) {
  Tensor x({rows.size(), 1, t});
  auto d = x.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < t; ++j) d[i * t + j] = static_cast<Real>(rows[i][j]);
  }
  return x;
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, const fs::path& out_path, std::ostream& out) {
  const std::size_t t = cfg.model.segment_length;
  SurrogateSets sets;
  const bool external = cfg.data.clean_path || cfg.data.eog_path || cfg.data.emg_path;
  if (external) {
    if (!cfg.data.clean_path) throw ConfigError("synth: --clean-f32 is required with external artifact sets");
    sets.clean = read_f32_matrix(*cfg.data.clean_path, t);
    if (cfg.data.eog_path) sets.eog = read_f32_matrix(*cfg.data.eog_path, t);
    if (cfg.data.emg_path) sets.emg = read_f32_matrix(*cfg.data.emg_path, t);
  } else {
    sets = synth_surrogate(cfg.surrogate_config());
  }
  auto pairs = augment_snr_grid(sets.clean, sets.eog, sets.emg, cfg.data.snr_grid, cfg.data.kind, cfg.seed);
  for (auto& p : pairs) p = standardize(p);
  write_dataset(pairs, out_path);

  std::map<double, std::size_t> per_level;
  for (const auto& p : pairs) ++per_level[p.snr_db];
  out << fmt("wrote %zu %s pairs (T=%zu) to %s\n", pairs.size(), artifact_kind_name(cfg.data.kind), t,
             out_path.string().c_str());
  if (pairs.size() >= 10) {
    const auto parts = split(pairs.size(), cfg.seed);
    out << fmt("split train=%zu val=%zu test=%zu\n", parts.train.size(), parts.val.size(), parts.test.size());
  } else {
    out << "too few pairs to split (train and eval need at least 10)\n";
  }
  for (const auto& [level, n] : per_level) out << fmt("level %g dB: %zu\n", level, n);
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, const fs::path& data_path, const fs::path& ckpt_path,
              std::optional<fs::path> history_path, std::ostream& out) {
  const auto model_cfg = cfg.model_config();
  const auto train_cfg = cfg.train_config();
  if (!fs::exists(data_path)) throw DataError(data_path.string() + ": no such file");
  const auto pairs = read_dataset(data_path);
  require_length(pairs, model_cfg.segment_length(), data_path);
  const auto parts = split(pairs.size(), cfg.seed);
  const auto train = select(pairs, parts.train);
  const auto val = select(pairs, parts.val);
  const auto test = select(pairs, parts.test);

  BandRouteNet model(model_cfg, cfg.ablation, cfg.seed);
  out << fmt("parameters: %zu\n", model.count_params());
  out << fmt("train=%zu val=%zu test=%zu epochs=%zu batch=%zu\n", train.size(), val.size(), test.size(),
             train_cfg.epochs, train_cfg.batch_size);
  out.flush();

  const auto result = fit(model, train, val, train_cfg, [&](const EpochRecord& r) {
    out << fmt("epoch %zu train_mse=%.6g", r.epoch, r.train_mse);
    if (r.val) out << " val " << means_line(*r.val);
    out << '\n';
    out.flush();
  });
  out << fmt("initial train_mse=%.6g best epoch %zu\n", result.initial_train_mse, result.best_epoch);

  EvalOptions eo;
  eo.threads = cfg.threads;
  const auto report = evaluate(model, test, eo);
  out << "test " << means_line(report.overall) << '\n';

  if (!history_path) history_path = fs::path(ckpt_path.string() + ".history.csv");
  write_history_csv(result.history, *history_path);
  save_checkpoint(model, ckpt_path);
  out << "checkpoint: " << ckpt_path.string() << '\n';
  return kExitOk;
}

int cmd_denoise(const RunConfig& cfg, const fs::path& ckpt_path, const fs::path& in_path, const fs::path& out_path,
                const std::optional<fs::path>& bands_path, std::ostream& out) {
  const auto model = open_checkpoint(ckpt_path);
  const std::size_t t = model->config().segment_length();
  const std::size_t k = model->config().band_count();
  const auto inputs = read_inputs(in_path, t);

  std::vector<Signal> denoised;
  std::vector<Signal> band_rows;
  if (!bands_path) {
    EvalOptions eo;
    eo.threads = cfg.threads;
    denoised = denoise_all(*model, inputs, eo);
  } else {
    constexpr std::size_t kChunk = 16;
    for (std::size_t begin = 0; begin < inputs.size(); begin += kChunk) {
      const std::size_t n = std::min(kChunk, inputs.size() - begin);
      Tape tape = Tape::no_grad();
      const auto res = model->forward(tape, stack_inputs(std::span(inputs).subspan(begin, n), t));
      const auto y = res.y.data();
      const auto yb = res.diag.band_outputs.data();
      const auto r = res.diag.refinement.data();
      for (std::size_t i = 0; i < n; ++i) {
        denoised.emplace_back(y.begin() + i * t, y.begin() + (i + 1) * t);
        for (std::size_t b = 0; b < k; ++b) {
          const std::size_t off = (i * k + b) * t;
          band_rows.emplace_back(yb.begin() + off, yb.begin() + off + t);
        }
        band_rows.emplace_back(r.begin() + i * t, r.begin() + (i + 1) * t);
      }
    }
  }
  write_f32_matrix(denoised, out_path);
  if (bands_path) write_f32_matrix(band_rows, *bands_path);
  out << fmt("denoised %zu segments (T=%zu) to %s\n", denoised.size(), t, out_path.string().c_str());
  if (bands_path) {
    out << fmt("band outputs: %zu rows per segment (%zu bands + refinement) to %s\n", k + 1, k,
               bands_path->string().c_str());
  }
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::optional<fs::path>& ckpt_path, bool identity, const fs::path& data_path,
             const std::string& which, const fs::path& report_path, std::ostream& out) {
  if (!identity && !ckpt_path) throw ConfigError("eval: --checkpoint is required unless --identity is given");
  std::unique_ptr<BandRouteNet> model;
  if (ckpt_path) model = open_checkpoint(*ckpt_path);
  if (!fs::exists(data_path)) throw DataError(data_path.string() + ": no such file");
  const auto pairs = read_dataset(data_path);
  const std::size_t t = model ? model->config().segment_length() : pairs.empty() ? 0 : pairs.front().clean.size();
  require_length(pairs, t, data_path);

  std::vector<SignalPair> chosen;
  if (which == "all") {
    chosen = pairs;
  } else {
    const auto parts = split(pairs.size(), cfg.seed);
    chosen = select(pairs, which == "train" ? parts.train : which == "val" ? parts.val : parts.test);
  }

  MetricReport report;
  if (model) {
    EvalOptions eo;
    eo.threads = cfg.threads;
    eo.passthrough = identity;
    report = evaluate(*model, chosen, eo);
  } else {
    WelchSettings welch;
    welch.sample_rate_hz = cfg.model.sample_rate_hz;
    welch.segment_length = std::min<std::size_t>(256, t);
    welch.overlap = welch.segment_length / 2;
    std::vector<SampleMetrics> samples;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      samples.push_back(score_sample(i, chosen[i].snr_db, chosen[i].clean, chosen[i].noisy, chosen[i].noisy, welch));
    }
    report = aggregate(std::move(samples));
  }
  write_report_csv(report, report_path);
  out << fmt("evaluated %zu samples (%s split, %zu levels)\n", report.samples.size(), which.c_str(),
             report.levels.size());
  for (const auto& level : report.levels) out << fmt("level %g dB: ", level.snr_db) << means_line(level.means) << '\n';
  out << "overall " << means_line(report.overall) << '\n';
  return kExitOk;
}

void write_pgm(const std::vector<double>& heat, std::size_t rows, std::size_t cols, const fs::path& path) {
  constexpr std::size_t kRowPixels = 16;
  io::atomic_write(path, [&](std::ostream& os) {
    os << "P5\n" << cols << ' ' << rows * kRowPixels << "\n255\n";
    std::string line(cols, '\0');
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double v = std::clamp(heat[r * cols + c], 0.0, 1.0);
        line[c] = static_cast<char>(static_cast<unsigned char>(v * 255.0 + 0.5));
      }
      for (std::size_t p = 0; p < kRowPixels; ++p) os.write(line.data(), static_cast<std::streamsize>(cols));
    }
  });
}

int cmd_viz_route(const fs::path& ckpt_path, const fs::path& in_path, std::size_t sample, const fs::path& out_path,
                  const std::optional<fs::path>& image_path, std::ostream& out) {
  const auto model = open_checkpoint(ckpt_path);
  const auto& mc = model->config();
  const std::size_t t = mc.segment_length();
  const std::size_t k = mc.band_count();
  const auto inputs = read_inputs(in_path, t);
  if (sample >= inputs.size()) {
    throw ConfigError(fmt("viz-route: --sample %zu out of range (%zu segments)", sample, inputs.size()));
  }
  Tape tape = Tape::no_grad();
  const auto res = model->forward(tape, stack_inputs(std::span(inputs).subspan(sample, 1), t));
  const auto heat = routing_heatmap(res.diag, k, 0);

  io::atomic_write(
      out_path,
      [&](std::ostream& os) {
        os << "band";
        for (std::size_t j = 0; j < t; ++j) os << ',' << j;
        os << '\n';
        for (std::size_t b = 0; b < k; ++b) {
          os << mc.band_spec.bands[b].name;
          for (std::size_t j = 0; j < t; ++j) os << fmt(",%.9g", heat[b * t + j]);
          os << '\n';
        }
      },
      false);
  if (image_path) write_pgm(heat, k, t, *image_path);
  out << fmt("routing heatmap %zux%zu for segment %zu to %s\n", k, t, sample, out_path.string().c_str());
  return kExitOk;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* be = dynamic_cast<const Error*>(&e)) {
    switch (be->kind()) {
      case ErrorKind::kUsage:
      case ErrorKind::kConfig:
        return kExitUsage;
      case ErrorKind::kNumeric:
        return kExitNumeric;
      case ErrorKind::kShape:
      case ErrorKind::kData:
        return kExitData;
    }
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitData;
  if (dynamic_cast<const std::bad_alloc*>(&e)) return kExitData;
  return kExitData;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Band-routed EEG artifact removal: synthesis, training, denoising and evaluation", "brn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "brn 0.1.0");

  CommonFlags common;
  ConfigFlags flags;
  std::string out_path, data_path, ckpt_path, in_path, which = "test";
  std::optional<std::string> history_path, bands_path, image_path, eval_ckpt;
  bool identity = false;
  bool print_config = false;
  std::size_t sample = 0;

  auto* synth = app.add_subcommand("synth", "Generate a contaminated surrogate dataset (EDS1)");
  add_common(synth, common);
  add_model_flags(synth, flags);
  add_data_flags(synth, flags);
  synth->add_option("--out", out_path, "Output dataset path")->required();
  synth->add_flag("--print-config", print_config, "Print the resolved run config as JSON");

  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint plus history CSV");
  add_common(train, common);
  add_model_flags(train, flags);
  add_train_flags(train, flags);
  train->add_option("--data", data_path, "EDS1 dataset")->required();
  train->add_option("--out", out_path, "Output checkpoint path")->required();
  train->add_option("--history", history_path, "History CSV (default: <out>.history.csv)");
  train->add_flag("--print-config", print_config, "Print the resolved run config as JSON");

  auto* denoise = app.add_subcommand("denoise", "Denoise segments with a trained checkpoint");
  add_common(denoise, common);
  denoise->add_option("--checkpoint", ckpt_path, "BRN1 checkpoint")->required();
  denoise->add_option("--in", in_path, "EDS1 dataset (noisy signals) or flat f32 matrix")->required();
  denoise->add_option("--out", out_path, "Output f32 matrix of denoised segments")->required();
  denoise->add_option("--emit-bands", bands_path,
                      "Also write K band outputs plus the refinement term per segment (f32 matrix)");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset split and write a metric CSV");
  add_common(eval, common);
  eval->add_option("--checkpoint", eval_ckpt, "BRN1 checkpoint");
  eval->add_flag("--identity", identity, "Score the noisy input itself (identity denoiser)");
  eval->add_option("--data", data_path, "EDS1 dataset")->required();
  eval->add_option("--split", which, "Which split to score")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  eval->add_option("--out", out_path, "Output report CSV")->required();

  auto* viz = app.add_subcommand("viz-route", "Export the routing heatmap (bands x time) for one segment");
  add_common(viz, common);
  viz->add_option("--checkpoint", ckpt_path, "BRN1 checkpoint")->required();
  viz->add_option("--in", in_path, "EDS1 dataset (noisy signals) or flat f32 matrix")->required();
  viz->add_option("--sample", sample, "Segment index");
  viz->add_option("--out", out_path, "Output heatmap CSV")->required();
  viz->add_option("--image", image_path, "Optional PGM raster of the heatmap");

  std::vector<const char*> argv{"brn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      const auto cfg = resolve(common, &flags);
      if (print_config) out << to_json(cfg) << '\n';
      return cmd_synth(cfg, out_path, out);
    }
    if (train->parsed()) {
      const auto cfg = resolve(common, &flags);
      if (print_config) out << to_json(cfg) << '\n';
      return cmd_train(cfg, data_path, out_path, history_path ? std::optional<fs::path>(*history_path) : std::nullopt,
                       out);
    }
    const auto cfg = resolve(common, nullptr);
    if (denoise->parsed()) {
      return cmd_denoise(cfg, ckpt_path, in_path, out_path,
                         bands_path ? std::optional<fs::path>(*bands_path) : std::nullopt, out);
    }
    if (eval->parsed()) {
      return cmd_eval(cfg, eval_ckpt ? std::optional<fs::path>(*eval_ckpt) : std::nullopt, identity, data_path, which,
                      out_path, out);
    }
    return cmd_viz_route(ckpt_path, in_path, sample, out_path,
                         image_path ? std::optional<fs::path>(*image_path) : std::nullopt, out);
  } catch (const std::exception& e) {
    err << "brn: error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace brn::cli
