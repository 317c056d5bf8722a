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
#include <optional>
#include <string>
#include <vector>

#include "brn/data.hpp"
#include "brn/model.hpp"
#include "brn/train.hpp"

namespace brn::cli {

struct DataConfig {
  ArtifactKind kind = ArtifactKind::kEog;
  std::vector<double> snr_grid = default_snr_grid();
  SurrogateConfig surrogate;
  // Optional flat f32 matrices (rows = segments) replacing the surrogate sets.
  std::optional<std::filesystem::path> clean_path, eog_path, emg_path;
};

struct ModelSection {
  std::size_t channels = 64;
  std::size_t heads = 4;
  std::size_t encoder_stages = 2;
  std::size_t blocks_per_stage = 2;
  std::size_t segment_length = 512;
  double sample_rate_hz = 256.0;
  // Explicit bands win; otherwise band_count equal-width bands; otherwise the
  // six standard EEG bands.
  std::optional<std::vector<Band>> bands;
  std::optional<std::size_t> band_count;
};

struct RunConfig {
  ModelSection model;
  TrainConfig train;
  DataConfig data;
  Ablation ablation;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  ModelConfig model_config() const;
  TrainConfig train_config() const;
  SurrogateConfig surrogate_config() const;

  // Throws ConfigError.
  void validate() const;
};

// Merges a JSON document into cfg. Keys absent from the document keep their
// current value; unknown keys are errors. Throws ConfigError.
void merge_json(RunConfig& cfg, const std::string& text);
void merge_json_file(RunConfig& cfg, const std::filesystem::path& path);

std::string to_json(const RunConfig& cfg);

// "-7..2" (integer range) or a comma list "0,1.5,3".
std::vector<double> parse_snr_grid(const std::string& text);

void apply_ablation(Ablation& ablation, const std::string& name);

}  // namespace brn::cli
