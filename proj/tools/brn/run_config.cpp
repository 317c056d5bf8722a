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

#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "brn/error.hpp"

namespace brn::cli {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& section) {
  if (!obj.is_object()) throw ConfigError("config: '" + section + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("config: unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void take(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

template <typename T>
void take(const json& obj, const char* key, std::optional<T>& dst) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    dst.reset();
  } else {
    dst = obj.at(key).get<T>();
  }
}

void take_path(const json& obj, const char* key, std::optional<std::filesystem::path>& dst) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    dst.reset();
  } else {
    dst = obj.at(key).get<std::string>();
  }
}

void merge_model(ModelSection& m, const json& j) {
  check_keys(j,
             {"channels", "heads", "encoder_stages", "blocks_per_stage", "segment_length", "sample_rate_hz",
              "bands", "band_count"},
             "model");
  take(j, "channels", m.channels);
  take(j, "heads", m.heads);
  take(j, "encoder_stages", m.encoder_stages);
  take(j, "blocks_per_stage", m.blocks_per_stage);
  take(j, "segment_length", m.segment_length);
  take(j, "sample_rate_hz", m.sample_rate_hz);
  take(j, "band_count", m.band_count);
  if (j.contains("bands")) {
    if (j.at("bands").is_null()) {
      m.bands.reset();
    } else {
      std::vector<Band> bands;
      for (const auto& b : j.at("bands")) {
        check_keys(b, {"name", "lo_hz", "hi_hz"}, "model.bands[]");
        bands.push_back({b.at("name").get<std::string>(), b.at("lo_hz").get<double>(), b.at("hi_hz").get<double>()});
      }
      m.bands = std::move(bands);
    }
  }
}

void merge_train(TrainConfig& t, const json& j) {
  check_keys(j, {"lr", "weight_decay", "epochs", "batch_size", "beta1", "beta2", "eps", "micro_batch", "grad_clip"},
             "train");
  take(j, "lr", t.lr);
  take(j, "weight_decay", t.weight_decay);
  take(j, "epochs", t.epochs);
  take(j, "batch_size", t.batch_size);
  take(j, "beta1", t.beta1);
  take(j, "beta2", t.beta2);
  take(j, "eps", t.eps);
  take(j, "micro_batch", t.micro_batch);
  take(j, "grad_clip", t.grad_clip);
}

void merge_data(DataConfig& d, const json& j) {
  check_keys(j,
             {"kind", "snr_grid", "n_clean", "n_eog", "n_emg", "clean_exponent", "alpha_gain", "alpha_width_hz",
              "eog_cutoff_hz", "emg_lo_hz", "emg_hi_hz", "clean_lo_hz", "clean_hi_hz", "clean_path", "eog_path",
              "emg_path"},
             "data");
  if (j.contains("kind")) d.kind = parse_artifact_kind(j.at("kind").get<std::string>());
  if (j.contains("snr_grid")) {
    const auto& g = j.at("snr_grid");
    d.snr_grid = g.is_string() ? parse_snr_grid(g.get<std::string>()) : g.get<std::vector<double>>();
  }
  auto& s = d.surrogate;
  take(j, "n_clean", s.n_clean);
  take(j, "n_eog", s.n_eog);
  take(j, "n_emg", s.n_emg);
  take(j, "clean_lo_hz", s.clean_lo_hz);
  take(j, "clean_hi_hz", s.clean_hi_hz);
  take(j, "clean_exponent", s.clean_exponent);
  take(j, "alpha_gain", s.alpha_gain);
  take(j, "alpha_width_hz", s.alpha_width_hz);
  take(j, "eog_cutoff_hz", s.eog_cutoff_hz);
  take(j, "emg_lo_hz", s.emg_lo_hz);
  take(j, "emg_hi_hz", s.emg_hi_hz);
  take_path(j, "clean_path", d.clean_path);
  take_path(j, "eog_path", d.eog_path);
  take_path(j, "emg_path", d.emg_path);
}

void merge_ablation(Ablation& a, const json& j) {
  check_keys(j, {"no_fullband", "route_all_one", "no_cross_band", "no_band_embedding"}, "ablation");
  take(j, "no_fullband", a.no_fullband);
  take(j, "route_all_one", a.route_all_one);
  take(j, "no_cross_band", a.no_cross_band);
  take(j, "no_band_embedding", a.no_band_embedding);
}

}  // namespace

ModelConfig RunConfig::model_config() const {
  ModelConfig c;
  if (model.bands) {
    c.band_spec.sample_rate_hz = model.sample_rate_hz;
    c.band_spec.segment_length = model.segment_length;
    c.band_spec.bands = *model.bands;
  } else if (model.band_count) {
    c = ModelConfig::toy(model.channels, model.segment_length, *model.band_count, model.sample_rate_hz);
  } else {
    c.band_spec = BandSpec::standard(model.sample_rate_hz, model.segment_length);
  }
  c.channels = model.channels;
  c.heads = model.heads;
  c.encoder_stages = model.encoder_stages;
  c.blocks_per_stage = model.blocks_per_stage;
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  t.threads = threads;
  return t;
}

SurrogateConfig RunConfig::surrogate_config() const {
  SurrogateConfig s = data.surrogate;
  s.seed = seed;
  s.segment_length = model.segment_length;
  s.sample_rate_hz = model.sample_rate_hz;
  return s;
}

void RunConfig::validate() const {
  model_config().validate();
  train_config().validate();
  if (threads == 0) throw ConfigError("config: threads must be >= 1");
  if (data.snr_grid.empty()) throw ConfigError("config: snr_grid is empty");
  for (double v : data.snr_grid) {
    if (!std::isfinite(v)) throw ConfigError("config: snr_grid values must be finite");
  }
  const auto& s = data.surrogate;
  if (s.n_clean == 0) throw ConfigError("config: n_clean must be >= 1");
  if (data.kind != ArtifactKind::kEmg && s.n_eog == 0) throw ConfigError("config: n_eog must be >= 1");
  if (data.kind != ArtifactKind::kEog && s.n_emg == 0) throw ConfigError("config: n_emg must be >= 1");
}

void merge_json(RunConfig& cfg, const std::string& text) {
  try {
    const json j = json::parse(text);
    check_keys(j, {"model", "train", "data", "ablation", "seed", "threads"}, "<root>");
    RunConfig out = cfg;
    if (j.contains("model")) merge_model(out.model, j.at("model"));
    if (j.contains("train")) merge_train(out.train, j.at("train"));
    if (j.contains("data")) merge_data(out.data, j.at("data"));
    if (j.contains("ablation")) merge_ablation(out.ablation, j.at("ablation"));
    take(j, "seed", out.seed);
    take(j, "threads", out.threads);
    cfg = std::move(out);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void merge_json_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  merge_json(cfg, ss.str());
}

std::string to_json(const RunConfig& cfg) {
  json model = {{"channels", cfg.model.channels},
                {"heads", cfg.model.heads},
                {"encoder_stages", cfg.model.encoder_stages},
                {"blocks_per_stage", cfg.model.blocks_per_stage},
                {"segment_length", cfg.model.segment_length},
                {"sample_rate_hz", cfg.model.sample_rate_hz}};
  if (cfg.model.bands) {
    json bands = json::array();
    for (const auto& b : *cfg.model.bands) bands.push_back({{"name", b.name}, {"lo_hz", b.lo_hz}, {"hi_hz", b.hi_hz}});
    model["bands"] = bands;
  }
  if (cfg.model.band_count) model["band_count"] = *cfg.model.band_count;
  const auto& t = cfg.train;
  json train = {{"lr", t.lr},       {"weight_decay", t.weight_decay}, {"epochs", t.epochs},
                {"batch_size", t.batch_size}, {"beta1", t.beta1}, {"beta2", t.beta2},
                {"eps", t.eps},     {"micro_batch", t.micro_batch}};
  train["grad_clip"] = t.grad_clip ? json(*t.grad_clip) : json(nullptr);
  const auto& s = cfg.data.surrogate;
  json data = {{"kind", artifact_kind_name(cfg.data.kind)},
               {"snr_grid", cfg.data.snr_grid},
               {"n_clean", s.n_clean},
               {"n_eog", s.n_eog},
               {"n_emg", s.n_emg},
               {"clean_lo_hz", s.clean_lo_hz},
               {"clean_hi_hz", s.clean_hi_hz},
               {"clean_exponent", s.clean_exponent},
               {"alpha_gain", s.alpha_gain},
               {"alpha_width_hz", s.alpha_width_hz},
               {"eog_cutoff_hz", s.eog_cutoff_hz},
               {"emg_lo_hz", s.emg_lo_hz},
               {"emg_hi_hz", s.emg_hi_hz}};
  auto path_json = [](const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); };
  data["clean_path"] = path_json(cfg.data.clean_path);
  data["eog_path"] = path_json(cfg.data.eog_path);
  data["emg_path"] = path_json(cfg.data.emg_path);
  const auto& a = cfg.ablation;
  json ablation = {{"no_fullband", a.no_fullband},
                   {"route_all_one", a.route_all_one},
                   {"no_cross_band", a.no_cross_band},
                   {"no_band_embedding", a.no_band_embedding}};
  json j = {{"model", model}, {"train", train}, {"data", data}, {"ablation", ablation},
            {"seed", cfg.seed}, {"threads", cfg.threads}};
  return j.dump(2);
}

std::vector<double> parse_snr_grid(const std::string& text) {
  std::vector<double> grid;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      std::size_t used = 0;
      const long lo = std::stol(text.substr(0, dots), &used);
      if (used != dots) throw ConfigError("");
      const std::string rest = text.substr(dots + 2);
      const long hi = std::stol(rest, &used);
      if (used != rest.size() || hi < lo) throw ConfigError("");
      for (long v = lo; v <= hi; ++v) grid.push_back(static_cast<double>(v));
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        grid.push_back(std::stod(item, &used));
        if (used != item.size()) throw ConfigError("");
      }
    }
  } catch (const std::exception&) {
    throw ConfigError("snr grid: cannot parse '" + text + "' (expected LO..HI or a comma list)");
  }
  if (grid.empty()) throw ConfigError("snr grid: empty");
  return grid;
}

void apply_ablation(Ablation& ablation, const std::string& name) {
  if (name == "no_fullband") {
    ablation.no_fullband = true;
  } else if (name == "route_all_one") {
    ablation.route_all_one = true;
  } else if (name == "no_cross_band") {
    ablation.no_cross_band = true;
  } else if (name == "no_band_embedding") {
    ablation.no_band_embedding = true;
  } else {
    throw ConfigError("unknown ablation '" + name +
                      "' (expected no_fullband, route_all_one, no_cross_band or no_band_embedding)");
  }
}

}  // namespace brn::cli
