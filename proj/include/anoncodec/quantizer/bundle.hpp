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

// Codebook bundle file:
//
//   "USCCB01\n"
//   canonical JSON header (sorted keys, no whitespace) followed by '\n'
//   per tier, in order: w_in (D x M), codewords (K x M), w_out (M x D),
//   each row-major little-endian float32.

#ifndef ANONCODEC_QUANTIZER_BUNDLE_HPP_
#define ANONCODEC_QUANTIZER_BUNDLE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anoncodec/core/binary_io.hpp"
#include "anoncodec/core/error.hpp"
#include "anoncodec/quantizer/types.hpp"

namespace anoncodec::quantizer {

inline constexpr std::string_view kBundleMagic = "USCCB01\n";

struct CodebookBundle {
  RVQConfig config;
  std::vector<CodebookTier> tiers;
  std::uint64_t seed = 0;
};

inline nlohmann::json bundle_header(const CodebookBundle& b) {
  nlohmann::json sizes = nlohmann::json::array();
  for (auto k : b.config.codebook_sizes) sizes.push_back(k);
  return {
      {"code_dim", b.config.code_dim},
      {"codebook_sizes", sizes},
      {"dropout_prob", b.config.dropout_prob},
      {"latent_dim", b.config.latent_dim},
      {"seed", b.seed},
      {"tier_count", b.tiers.size()},
  };
}

inline ByteWriter encode_bundle(const CodebookBundle& b) {
  validate_tiers(b.config, b.tiers);
  ByteWriter w;
  w.bytes(kBundleMagic);
  w.bytes(bundle_header(b).dump());
  w.bytes("\n");
  for (const auto& t : b.tiers)
    for (const Matrix* m : {&t.w_in, &t.codewords, &t.w_out})
      for (double x : m->data()) w.f32(static_cast<float>(x));
  return w;
}

inline void write_bundle(const std::filesystem::path& path, const CodebookBundle& b) {
  encode_bundle(b).save(path);
}

inline CodebookBundle decode_bundle(ByteReader& r) {
  if (r.bytes(kBundleMagic.size(), "magic") != kBundleMagic)
    throw ParseError("bad codebook bundle magic", 0);
  const auto header_offset = r.offset();
  const std::string line = r.line("bundle header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bundle header is not JSON: ") + e.what(), header_offset);
  }
  CodebookBundle b;
  try {
    b.config.code_dim = h.at("code_dim").get<std::size_t>();
    b.config.latent_dim = h.at("latent_dim").get<std::size_t>();
    b.config.codebook_sizes = h.at("codebook_sizes").get<std::vector<std::size_t>>();
    b.config.dropout_prob = h.at("dropout_prob").get<double>();
    b.seed = h.at("seed").get<std::uint64_t>();
    if (h.at("tier_count").get<std::size_t>() != b.config.codebook_sizes.size())
      throw ParseError("tier_count disagrees with codebook_sizes", header_offset);
    b.config.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad bundle header: ") + e.what(), header_offset);
  } catch (const ConfigError& e) {
    throw ParseError(std::string("bad bundle header: ") + e.what(), header_offset);
  }
  const std::size_t d = b.config.latent_dim;
  const std::size_t m = b.config.code_dim;
  auto read_matrix = [&](std::size_t rows, std::size_t cols, const std::string& what) {
    Matrix out(rows, cols);
    for (double& x : out.data()) x = r.f32(what);
    return out;
  };
  for (std::size_t i = 0; i < b.config.num_tiers(); ++i) {
    CodebookTier t;
    t.tier_index = i;
    const std::string tag = "tier " + std::to_string(i);
    t.w_in = read_matrix(d, m, tag + " w_in");
    t.codewords = read_matrix(b.config.codebook_sizes[i], m, tag + " codewords");
    t.w_out = read_matrix(m, d, tag + " w_out");
    b.tiers.push_back(std::move(t));
  }
  if (!r.at_end()) throw ParseError("trailing bytes after last tier", r.offset());
  validate_tiers(b.config, b.tiers);
  return b;
}

inline CodebookBundle read_bundle(const std::filesystem::path& path) {
  ByteReader r = ByteReader::from_file(path);
  return decode_bundle(r);
}

}  // namespace anoncodec::quantizer

#endif  // ANONCODEC_QUANTIZER_BUNDLE_HPP_
