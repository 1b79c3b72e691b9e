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

// Minimal RIFF/WAVE reader and writer for mono 16-bit PCM.

#ifndef ANONCODEC_LOSSES_WAV_HPP_
#define ANONCODEC_LOSSES_WAV_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "anoncodec/core/binary_io.hpp"
#include "anoncodec/core/error.hpp"

namespace anoncodec::losses {

struct WavData {
  std::uint32_t sample_rate = 16000;
  std::vector<double> samples;  // in [-1, 1)
};

inline WavData decode_wav(ByteReader& r) {
  if (r.bytes(4, "RIFF tag") != "RIFF") throw ParseError("not a RIFF file", 0);
  r.u32("RIFF size");
  if (r.bytes(4, "WAVE tag") != "WAVE") throw ParseError("not a WAVE file", 8);
  WavData out;
  bool have_fmt = false;
  while (!r.at_end()) {
    const auto chunk_at = r.offset();
    const std::string id = r.bytes(4, "chunk id");
    const std::uint32_t size = r.u32("chunk size");
    if (id == "fmt ") {
      const auto fmt_at = r.offset();
      const std::uint16_t format = r.u16("audio format");
      const std::uint16_t channels = r.u16("channel count");
      out.sample_rate = r.u32("sample rate");
      r.u32("byte rate");
      r.u16("block align");
      const std::uint16_t bits = r.u16("bits per sample");
      if (format != 1) throw ParseError("only PCM WAV is supported", fmt_at);
      if (channels != 1) throw ParseError("only mono WAV is supported", fmt_at + 2);
      if (bits != 16) throw ParseError("only 16-bit WAV is supported", fmt_at + 14);
      if (size < 16) throw ParseError("fmt chunk too short", chunk_at);
      r.bytes(size - 16 + (size & 1), "fmt extension");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ParseError("data chunk before fmt chunk", chunk_at);
      if (size % 2 != 0) throw ParseError("odd data chunk size for 16-bit samples", chunk_at);
      out.samples.resize(size / 2);
      for (double& s : out.samples)
        s = static_cast<double>(static_cast<std::int16_t>(r.u16("sample"))) / 32768.0;
      return out;
    } else {
      r.bytes(size + (size & 1), "chunk body");
    }
  }
  throw ParseError("no data chunk", r.offset());
}

inline WavData read_wav(const std::filesystem::path& path) {
  ByteReader r = ByteReader::from_file(path);
  return decode_wav(r);
}

inline void write_wav(const std::filesystem::path& path, const WavData& wav) {
  ByteWriter w;
  const auto data_bytes = static_cast<std::uint32_t>(wav.samples.size() * 2);
  w.bytes("RIFF");
  w.u32(36 + data_bytes);
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.u32(16);
  w.u16(1);
  w.u16(1);
  w.u32(wav.sample_rate);
  w.u32(wav.sample_rate * 2);
  w.u16(2);
  w.u16(16);
  w.bytes("data");
  w.u32(data_bytes);
  for (double s : wav.samples) {
    const double c = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(c)));
  }
  w.save(path);
}

}  // namespace anoncodec::losses

#endif  // ANONCODEC_LOSSES_WAV_HPP_
