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
#include <functional>
#include <istream>
#include <ostream>
#include <string>

namespace brn::io {

// Little-endian primitive writer.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}

  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f32(float v);
  void bytes(const std::string& s);

 private:
  std::ostream& os_;
};

// Little-endian primitive reader; throws DataError on a short read.
class BinaryReader {
 public:
  BinaryReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();
  std::string bytes(std::size_t n);
  // True when no bytes remain.
  bool at_end();

  const std::string& source() const { return source_; }

 private:
  void read(char* dst, std::size_t n);

  std::istream& is_;
  std::string source_;
};

/// Writes through a temporary file in the target directory and renames it over
/// `path` on success. On any exception the temporary file is removed and
/// `path` is left untouched.
void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body,
                  bool binary = true);

}  // namespace brn::io
