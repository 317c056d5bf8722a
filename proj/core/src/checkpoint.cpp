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

#include "brn/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include "brn/binary_io.hpp"
#include "brn/error.hpp"

BRN_NN_BEGIN

namespace {
constexpr char kMagic[] = "BRN1";
}  // namespace

void save_checkpoint(const BandRouteNet& model, const std::filesystem::path& path) {
  const std::string config = config_to_json(model.config(), model.ablation());
  const auto& params = model.params().params();
  io::atomic_write(path, [&](std::ostream& os) {
    io::BinaryWriter w(os);
    w.bytes(std::string(kMagic, 4));
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(config.size()));
    w.bytes(config);
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
      w.u16(static_cast<std::uint16_t>(p.name.size()));
      w.bytes(p.name);
      const Shape& shape = p.value.shape();
      w.u8(static_cast<std::uint8_t>(shape.size()));
      for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
      for (Real v : p.value.data()) w.f32(static_cast<float>(v));
    }
  });
}

CheckpointContents read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  io::BinaryReader r(is, path.string());
  if (r.bytes(4) != std::string(kMagic, 4)) throw DataError(path.string() + ": not a BRN1 checkpoint (bad magic)");
  CheckpointContents c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(c.version));
  }
  const auto config_len = r.u32();
  if (config_len > (1u << 24)) throw DataError(path.string() + ": implausible config length");
  c.config_json = r.bytes(config_len);
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    t.name = r.bytes(r.u16());
    const auto ndim = r.u8();
    if (ndim == 0) throw DataError(path.string() + ": tensor '" + t.name + "' has no dimensions");
    std::size_t numel = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      const auto dim = r.u32();
      if (dim == 0) throw DataError(path.string() + ": tensor '" + t.name + "' has a zero dimension");
      t.shape.push_back(dim);
      numel *= dim;
      if (numel > (std::size_t{1} << 32)) throw DataError(path.string() + ": tensor '" + t.name + "' too large");
    }
    t.values.resize(numel);
    for (auto& v : t.values) v = r.f32();
    c.tensors.push_back(std::move(t));
  }
  if (!r.at_end()) throw DataError(path.string() + ": trailing bytes after the last tensor");
  return c;
}

void load_into(BandRouteNet& model, const CheckpointContents& contents) {
  const auto& params = model.params().params();
  if (contents.tensors.size() != params.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(contents.tensors.size()) + " tensors, model has " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = contents.tensors[i];
    const auto& p = params[i];
    if (t.name != p.name) {
      throw ShapeError("checkpoint tensor " + std::to_string(i) + " is '" + t.name + "', model expects '" +
                       p.name + "'");
    }
    if (t.shape != p.value.shape()) {
      throw ShapeError("parameter '" + p.name + "': checkpoint shape " + shape_str(t.shape) +
                       " does not match model shape " + shape_str(p.value.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (float v : contents.tensors[i].values) {
      if (!std::isfinite(v)) throw NumericFault("parameter '" + params[i].name + "' holds a non-finite value");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor dst = params[i].value;
    auto d = dst.data();
    const auto& src = contents.tensors[i].values;
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = static_cast<Real>(src[j]);
  }
}

std::unique_ptr<BandRouteNet> load_checkpoint(const std::filesystem::path& path) {
  const CheckpointContents contents = read_checkpoint(path);
  ModelConfig config;
  Ablation ablation;
  try {
    config_from_json(contents.config_json, config, ablation);
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": invalid embedded config: " + e.what());
  }
  auto model = std::make_unique<BandRouteNet>(config, ablation);
  load_into(*model, contents);
  return model;
}

void quantize_params_to_f32(const ParamStore& params) {
  for (const auto& p : params.params()) {
    Tensor t = p.value;
    for (auto& v : t.data()) v = static_cast<Real>(static_cast<float>(v));
  }
}

BRN_NN_END
