// Copyright 2026 The AnonCodec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ANONCODEC_CORE_BINARY_IO_HPP_
#define ANONCODEC_CORE_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "anoncodec/core/error.hpp"

namespace anoncodec {

/// Little-endian byte sink.
class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }

  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }

  const std::vector<char>& buffer() const noexcept { return buf_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("short write to " + path.string());
  }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  std::vector<char> buf_;
};

/// Little-endian byte source with offset tracking; every failure is a
/// ParseError naming the offset where the read started.
class ByteReader {
 public:
  explicit ByteReader(std::vector<char> data) : data_(std::move(data)) {}

  static ByteReader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(data));
  }

  std::uint64_t offset() const noexcept { return pos_; }
  std::uint64_t remaining() const noexcept { return data_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == data_.size(); }

  std::string bytes(std::size_t n, std::string_view what) {
    need(n, what);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  /// Bytes up to and including the next '\n' (the newline is dropped).
  std::string line(std::string_view what) {
    const auto start = pos_;
    for (std::size_t i = pos_; i < data_.size(); ++i)
      if (data_[i] == '\n') {
        std::string s(data_.data() + pos_, i - pos_);
        pos_ = i + 1;
        return s;
      }
    throw ParseError("unterminated " + std::string(what), start);
  }

  std::uint16_t u16(std::string_view what) { return get_le<std::uint16_t>(what); }
  std::uint32_t u32(std::string_view what) { return get_le<std::uint32_t>(what); }
  float f32(std::string_view what) { return std::bit_cast<float>(get_le<std::uint32_t>(what)); }

 private:
  void need(std::size_t n, std::string_view what) const {
    if (remaining() < n)
      throw ParseError("truncated input while reading " + std::string(what) + " (need " +
                           std::to_string(n) + " bytes, " + std::to_string(remaining()) +
                           " left)",
                       pos_);
  }

  template <typename U>
  U get_le(std::string_view what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::vector<char> data_;
  std::uint64_t pos_ = 0;
};

}  // namespace anoncodec

#endif  // ANONCODEC_CORE_BINARY_IO_HPP_
