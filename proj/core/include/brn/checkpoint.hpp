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
#include <memory>
#include <string>
#include <vector>

#include "brn/model.hpp"

BRN_NN_BEGIN

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "BRN1" file: u32 version, u32 config length + JSON config, u32 tensor
/// count, then per tensor u16 name length + name, u8 ndim, u32 dims[], and
/// little-endian f32 values, in registration order.
///
/// Values are stored as f32. In the double-precision build, a round trip is
/// exact for parameters that are already f32-representable (see
/// quantize_params_to_f32).
void save_checkpoint(const BandRouteNet& model, const std::filesystem::path& path);

struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct CheckpointContents {
  std::uint32_t version = 0;
  std::string config_json;
  std::vector<CheckpointTensor> tensors;
};

// Parses and validates the container; throws DataError on a bad magic,
// unknown version, truncation or trailing bytes.
CheckpointContents read_checkpoint(const std::filesystem::path& path);

// Builds a model from the stored config and loads its tensors.
std::unique_ptr<BandRouteNet> load_checkpoint(const std::filesystem::path& path);

// Loads tensors into an existing model. Every name and shape is checked before
// any value is written; a mismatch throws ShapeError naming the parameter.
void load_into(BandRouteNet& model, const CheckpointContents& contents);

// Rounds every parameter to the nearest f32.
void quantize_params_to_f32(const ParamStore& params);

BRN_NN_END
