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

#include "brn/binary_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <random>

#include "brn/error.hpp"

namespace brn::io {

namespace {

template <class T>
void write_le(std::ostream& os, T v) {
  std::array<char, sizeof(T)> buf{};
  std::memcpy(buf.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  os.write(buf.data(), sizeof(T));
}

}  // namespace

void BinaryWriter::u8(std::uint8_t v) { write_le(os_, v); }
void BinaryWriter::u16(std::uint16_t v) { write_le(os_, v); }
void BinaryWriter::u32(std::uint32_t v) { write_le(os_, v); }
void BinaryWriter::f32(float v) { write_le(os_, std::bit_cast<std::uint32_t>(v)); }
void BinaryWriter::bytes(const std::string& s) { os_.write(s.data(), static_cast<std::streamsize>(s.size())); }

void BinaryReader::read(char* dst, std::size_t n) {
  is_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is_.gcount()) != n) {
    throw DataError(source_ + ": unexpected end of file (truncated?)");
  }
}

namespace {

template <class T>
T read_le(char* buf) {
  T v;
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

std::uint8_t BinaryReader::u8() {
  char b[1];
  read(b, 1);
  return read_le<std::uint8_t>(b);
}

std::uint16_t BinaryReader::u16() {
  char b[2];
  read(b, 2);
  return read_le<std::uint16_t>(b);
}

std::uint32_t BinaryReader::u32() {
  char b[4];
  read(b, 4);
  return read_le<std::uint32_t>(b);
}

float BinaryReader::f32() {
  char b[4];
  read(b, 4);
  return std::bit_cast<float>(read_le<std::uint32_t>(b));
}

std::string BinaryReader::bytes(std::size_t n) {
  std::string s(n, '\0');
  if (n) read(s.data(), n);
  return s;
}

bool BinaryReader::at_end() { return is_.peek() == std::char_traits<char>::eof(); }

void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body,
                  bool binary) {
  namespace fs = std::filesystem;
  std::random_device rd;
  const fs::path tmp = path.string() + ".tmp-" + std::to_string(rd());
  try {
    {
      std::ofstream os(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
      if (!os) throw DataError("cannot open " + tmp.string() + " for writing");
      body(os);
      os.flush();
      if (!os) throw DataError("write failed for " + path.string());
    }
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

}  // namespace brn::io
