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

#ifndef ANONCODEC_QUANTIZER_TYPES_HPP_
#define ANONCODEC_QUANTIZER_TYPES_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"
#include "anoncodec/core/rng.hpp"

namespace anoncodec::quantizer {

/// T x D encoder latents.
struct LatentSequence {
  Matrix frames;
  double frame_rate_hz = 25.0;

  std::size_t length() const noexcept { return frames.rows(); }
  std::size_t dim() const noexcept { return frames.cols(); }

  void validate() const {
    if (frames.rows() < 1 || frames.cols() < 1)
      throw RangeError("latent sequence must have at least one frame and one dimension");
    if (!all_finite(frames.data()))
      throw RangeError("latent sequence contains non-finite values");
  }
};

/// One factorized quantizer: D -> M projection, K codewords in M-space,
/// M -> D projection. Codewords are stored unnormalized.
struct CodebookTier {
  Matrix w_in;       // D x M
  Matrix codewords;  // K x M
  Matrix w_out;      // M x D
  std::size_t tier_index = 0;

  std::size_t latent_dim() const noexcept { return w_in.rows(); }
  std::size_t code_dim() const noexcept { return w_in.cols(); }
  std::size_t size() const noexcept { return codewords.rows(); }

  void validate() const {
    const std::size_t d = w_in.rows();
    const std::size_t m = w_in.cols();
    if (d == 0 || m == 0) throw RangeError("tier projections are empty");
    if (m > d) throw RangeError("code dimension exceeds latent dimension");
    if (w_out.rows() != m || w_out.cols() != d)
      throw RangeError("w_out must be M x D");
    if (codewords.rows() < 1 || codewords.cols() != m)
      throw RangeError("codebook must be K x M with K >= 1");
    for (std::size_t k = 0; k < codewords.rows(); ++k)
      if (norm_l2(codewords.row(k)) == 0.0)
        throw DegenerateInputError("codeword " + std::to_string(k) + " of tier " +
                                   std::to_string(tier_index) + " is the zero vector");
  }
};

struct RVQConfig {
  std::vector<std::size_t> codebook_sizes{256, 64, 64};
  std::size_t latent_dim = 16;
  std::size_t code_dim = 4;
  double dropout_prob = 0.5;

  std::size_t num_tiers() const noexcept { return codebook_sizes.size(); }

  /// Six tiers, 16384 semantic codes, 1024 per residual tier, D=768, M=8.
  static RVQConfig full_scale() {
    return RVQConfig{{16384, 1024, 1024, 1024, 1024, 1024}, 768, 8, 0.5};
  }

  void validate() const {
    if (codebook_sizes.empty()) throw ConfigError("rvq: at least one tier is required");
    for (std::size_t k : codebook_sizes)
      if (k < 1) throw ConfigError("rvq: codebook sizes must be >= 1");
    if (latent_dim < 1 || code_dim < 1) throw ConfigError("rvq: dimensions must be >= 1");
    if (code_dim > latent_dim) throw ConfigError("rvq: code_dim must not exceed latent_dim");
    if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0))
      throw ConfigError("rvq: dropout_prob must lie in [0, 1]");
  }
};

struct QuantizeOutput {
  /// codes[i][t] is the codeword index of tier i at frame t.
  std::vector<std::vector<std::uint32_t>> codes;
  /// z_q^0 ... z_q^n, each T x D.
  std::vector<Matrix> z_q_partial;
  std::size_t n_used = 0;
  bool encoder_grad_stop = false;
  /// Frame-averaged commitment and codebook losses per used tier.
  std::vector<double> commitment_loss;
  std::vector<double> codebook_loss;

  const Matrix& quantized() const { return z_q_partial.back(); }
};

/// Random projections (Gaussian, variance 1/fan-in) and Gaussian codewords.
/// Training replaces the codewords with data samples before the first step.
inline std::vector<CodebookTier> make_tiers(const RVQConfig& config, const Rng& rng) {
  config.validate();
  std::vector<CodebookTier> tiers;
  const std::size_t d = config.latent_dim;
  const std::size_t m = config.code_dim;
  for (std::size_t i = 0; i < config.num_tiers(); ++i) {
    Rng r = rng.substream("tier-init", i);
    CodebookTier t;
    t.tier_index = i;
    t.w_in = Matrix(d, m);
    t.w_out = Matrix(m, d);
    t.codewords = Matrix(config.codebook_sizes[i], m);
    const double s_in = 1.0 / std::sqrt(static_cast<double>(d));
    const double s_out = 1.0 / std::sqrt(static_cast<double>(m));
    for (double& x : t.w_in.data()) x = s_in * r.normal();
    for (double& x : t.w_out.data()) x = s_out * r.normal();
    for (double& x : t.codewords.data()) x = r.normal();
    tiers.push_back(std::move(t));
  }
  return tiers;
}

inline void validate_tiers(const RVQConfig& config, const std::vector<CodebookTier>& tiers) {
  if (tiers.size() != config.num_tiers())
    throw ConfigError("tier count " + std::to_string(tiers.size()) +
                      " does not match configuration (" +
                      std::to_string(config.num_tiers()) + ")");
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    tiers[i].validate();
    if (tiers[i].size() != config.codebook_sizes[i] ||
        tiers[i].latent_dim() != config.latent_dim ||
        tiers[i].code_dim() != config.code_dim)
      throw ConfigError("tier " + std::to_string(i) + " shape does not match configuration");
  }
}

}  // namespace anoncodec::quantizer

#endif  // ANONCODEC_QUANTIZER_TYPES_HPP_
