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

#ifndef ANONCODEC_QUANTIZER_BITRATE_HPP_
#define ANONCODEC_QUANTIZER_BITRATE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anoncodec/core/error.hpp"

namespace anoncodec::quantizer {

/// One token position of a codec frame. Most tiers hold a single codebook;
/// a tier made of parallel codebooks (for example two 1024-entry content
/// codebooks read out together) lists its size with a count.
struct TierCodebooks {
  std::uint64_t size = 1024;
  std::uint32_t count = 1;
};

struct BitrateSpec {
  std::string name;
  double sample_rate_khz = 16.0;
  std::vector<std::uint32_t> strides;
  std::vector<TierCodebooks> tiers;

  std::uint64_t downsampling_factor() const {
    std::uint64_t f = 1;
    for (auto s : strides) f *= s;
    return f;
  }

  void validate() const {
    if (!(sample_rate_khz > 0.0)) throw ConfigError("bitrate: sample rate must be positive");
    if (strides.empty()) throw ConfigError("bitrate: at least one stride is required");
    for (auto s : strides)
      if (s == 0) throw ConfigError("bitrate: strides must be positive");
    if (tiers.empty()) throw ConfigError("bitrate: at least one codebook is required");
    for (const auto& t : tiers)
      if (t.size < 2 || t.count < 1) throw ConfigError("bitrate: codebook sizes must be >= 2");
  }
};

/// ceil(log2(k)) for k >= 1, computed exactly on integers.
constexpr std::uint32_t bits_for(std::uint64_t k) {
  std::uint32_t b = 0;
  while ((std::uint64_t{1} << b) < k) ++b;
  return b;
}

/// kbps when tiers 0..n are transmitted:
///   (sample rate in kHz / product of strides) * sum_i ceil(log2 #C_i)
inline double bitrate_kbps(const BitrateSpec& spec, std::size_t n) {
  spec.validate();
  if (n >= spec.tiers.size())
    throw RangeError("bitrate: n=" + std::to_string(n) + " but the codec has " +
                     std::to_string(spec.tiers.size()) + " tiers");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i <= n; ++i) bits += std::uint64_t{spec.tiers[i].count} * bits_for(spec.tiers[i].size);
  return spec.sample_rate_khz / static_cast<double>(spec.downsampling_factor()) *
         static_cast<double>(bits);
}

/// Architecture rows of common neural codecs.
inline std::vector<BitrateSpec> bitrate_presets() {
  auto uniform = [](std::size_t k, std::uint64_t size) {
    return std::vector<TierCodebooks>(k, TierCodebooks{size, 1});
  };
  std::vector<BitrateSpec> out;
  {
    BitrateSpec usc{"usc", 16.0, {2, 2, 4, 5, 8}, uniform(6, 1024)};
    usc.tiers[0].size = 16384;
    out.push_back(usc);
    BitrateSpec dec = usc;
    dec.name = "usc-decoder";
    dec.sample_rate_khz = 24.0;
    dec.strides = {8, 5, 4, 3, 2};
    out.push_back(dec);
  }
  out.push_back({"encodec", 24.0, {2, 4, 5, 8}, uniform(8, 1024)});
  out.push_back({"dac", 44.1, {2, 4, 8, 8}, uniform(9, 1024)});
  out.push_back({"speechtokenizer", 16.0, {2, 4, 5, 8}, uniform(8, 1024)});
  {
    BitrateSpec fa{"facodec", 16.0, {2, 4, 5, 5}, uniform(5, 1024)};
    fa.tiers[0].count = 2;
    out.push_back(fa);
  }
  return out;
}

inline std::optional<BitrateSpec> find_bitrate_preset(std::string_view name) {
  for (auto& p : bitrate_presets())
    if (p.name == name) return p;
  return std::nullopt;
}

}  // namespace anoncodec::quantizer

#endif  // ANONCODEC_QUANTIZER_BITRATE_HPP_
