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

// Factorized, L2-normalized residual vector quantization.
//
// A tier projects a D-dimensional latent to M dimensions, picks the codeword
// with the largest cosine similarity, and projects the raw (unnormalized)
// codeword back to D dimensions. Tier 0 quantizes the latent itself; tier i
// quantizes the residual z_e - z_q^{i-1} left by the tiers before it.

#ifndef ANONCODEC_QUANTIZER_RVQ_HPP_
#define ANONCODEC_QUANTIZER_RVQ_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"
#include "anoncodec/core/rng.hpp"
#include "anoncodec/quantizer/types.hpp"

namespace anoncodec::quantizer {

struct LookupResult {
  std::uint32_t index = 0;
  Vector codeword;
};

/// Nearest codeword under cosine similarity. Ties go to the lowest index.
inline LookupResult vq_lookup(const CodebookTier& tier, std::span<const double> v) {
  if (v.size() != tier.code_dim())
    throw RangeError("vq_lookup: query has dimension " + std::to_string(v.size()) +
                     ", codebook has " + std::to_string(tier.code_dim()));
  const double vn = norm_l2(v);
  if (!(vn > 0.0) || !std::isfinite(vn))
    throw DegenerateInputError("vq_lookup: query vector is zero or non-finite");
  std::size_t best = 0;
  double best_cos = -2.0;
  for (std::size_t k = 0; k < tier.size(); ++k) {
    const auto e = tier.codewords.row(k);
    const double en = norm_l2(e);
    if (en == 0.0) throw DegenerateInputError("vq_lookup: zero codeword " + std::to_string(k));
    const double c = dot(v, e) / (vn * en);
    if (c > best_cos) {
      best_cos = c;
      best = k;
    }
  }
  const auto e = tier.codewords.row(best);
  return {static_cast<std::uint32_t>(best), Vector(e.begin(), e.end())};
}

struct TierResult {
  std::uint32_t index = 0;
  Vector z_hat;     // D
  Vector z_proj;    // M
  Vector selected;  // M, raw codeword
};

/// Lookup and up-projection of an already projected M-vector.
inline TierResult quantize_projected(const CodebookTier& tier, Vector z_proj) {
  auto [index, codeword] = vq_lookup(tier, z_proj);
  TierResult out;
  out.index = index;
  out.z_hat = row_times(codeword, tier.w_out);
  out.z_proj = std::move(z_proj);
  out.selected = std::move(codeword);
  return out;
}

inline TierResult quantize_tier(const CodebookTier& tier, std::span<const double> z) {
  if (!all_finite(z)) throw RangeError("quantize_tier: non-finite input");
  return quantize_projected(tier, row_times(z, tier.w_in));
}

/// Commitment and codebook losses of one frame in the projected space.
///
/// Both have the value |z_proj - e|^2; they differ in which argument the
/// stop-gradient freezes, so commitment only moves z_proj and the codebook
/// loss only moves the codeword.
struct VqLosses {
  double commitment = 0.0;  // L_w
  double codebook = 0.0;    // L_c
  Vector grad_z;            // dL_w / dz_proj
  Vector grad_e;            // dL_c / de
};

inline VqLosses vq_losses(std::span<const double> z_proj, std::span<const double> e_sel) {
  if (z_proj.size() != e_sel.size()) throw RangeError("vq_losses: dimension mismatch");
  VqLosses out;
  out.grad_z.resize(z_proj.size());
  out.grad_e.resize(z_proj.size());
  double sq = 0.0;
  for (std::size_t j = 0; j < z_proj.size(); ++j) {
    const double d = z_proj[j] - e_sel[j];
    sq += d * d;
    out.grad_z[j] = 2.0 * d;
    out.grad_e[j] = -2.0 * d;
  }
  out.commitment = sq;
  out.codebook = sq;
  return out;
}

/// Encode with tiers 0..n using the recursive form
///   z_q^0 = VQ_0(z_e),  z_q^i = z_q^{i-1} + VQ_i(z_e - z_q^{i-1}).
inline QuantizeOutput rvq_encode(const RVQConfig& config,
                                 const std::vector<CodebookTier>& tiers,
                                 const LatentSequence& z_e, std::size_t n) {
  validate_tiers(config, tiers);
  z_e.validate();
  if (n >= tiers.size())
    throw RangeError("rvq_encode: n=" + std::to_string(n) + " outside [0, " +
                     std::to_string(tiers.size() - 1) + "]");
  if (z_e.dim() != config.latent_dim)
    throw RangeError("rvq_encode: latent dimension mismatch");

  const std::size_t frames = z_e.length();
  const std::size_t d = z_e.dim();
  QuantizeOutput out;
  out.n_used = n;
  out.encoder_grad_stop = (n == 0);
  out.codes.assign(n + 1, std::vector<std::uint32_t>(frames));
  out.commitment_loss.assign(n + 1, 0.0);
  out.codebook_loss.assign(n + 1, 0.0);

  Matrix z_q(frames, d);
  Vector residual(d);
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t t = 0; t < frames; ++t) {
      const auto ze = z_e.frames.row(t);
      auto zq = z_q.row(t);
      for (std::size_t j = 0; j < d; ++j) residual[j] = ze[j] - zq[j];
      // Tier 0 sees z_e itself; z_q starts at exactly zero.
      const TierResult r = quantize_tier(tiers[i], i == 0 ? ze : std::span<const double>(residual));
      out.codes[i][t] = r.index;
      for (std::size_t j = 0; j < d; ++j) zq[j] += r.z_hat[j];
      const VqLosses l = vq_losses(r.z_proj, r.selected);
      out.commitment_loss[i] += l.commitment;
      out.codebook_loss[i] += l.codebook;
    }
    out.commitment_loss[i] /= static_cast<double>(frames);
    out.codebook_loss[i] /= static_cast<double>(frames);
    out.z_q_partial.push_back(z_q);
  }
  return out;
}

/// z_q^n from the summed form
///   z_q^n = z_q^0 + sum_{i=1..n} VQ_i(z_e - z_q^{i-1})
/// with each residual formed by subtracting the individual quantized errors
/// from z_e one at a time, not from a running z_q.
inline Matrix rvq_encode_summed(const RVQConfig& config,
                                const std::vector<CodebookTier>& tiers,
                                const LatentSequence& z_e, std::size_t n) {
  validate_tiers(config, tiers);
  z_e.validate();
  if (n >= tiers.size()) throw RangeError("rvq_encode_summed: n out of range");
  const std::size_t frames = z_e.length();
  const std::size_t d = z_e.dim();
  Matrix out(frames, d);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto ze = z_e.frames.row(t);
    std::vector<Vector> errors;
    errors.push_back(quantize_tier(tiers[0], ze).z_hat);
    for (std::size_t i = 1; i <= n; ++i) {
      Vector residual(ze.begin(), ze.end());
      for (const Vector& e : errors)
        for (std::size_t j = 0; j < d; ++j) residual[j] -= e[j];
      errors.push_back(quantize_tier(tiers[i], residual).z_hat);
    }
    auto row = out.row(t);
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (const Vector& e : errors) s += e[j];
      row[j] = s;
    }
  }
  return out;
}

/// Sum of up-projected codewords for tiers 0..n. Accumulates in tier order,
/// so the result is bit-identical to the encoder's z_q^n.
inline LatentSequence rvq_decode(const RVQConfig& config,
                                 const std::vector<CodebookTier>& tiers,
                                 const std::vector<std::vector<std::uint32_t>>& codes,
                                 std::size_t n) {
  validate_tiers(config, tiers);
  if (n >= tiers.size()) throw RangeError("rvq_decode: n out of range");
  if (codes.size() < n + 1) throw RangeError("rvq_decode: missing code rows for requested tiers");
  const std::size_t frames = codes[0].size();
  LatentSequence out;
  out.frames = Matrix(frames, config.latent_dim);
  for (std::size_t i = 0; i <= n; ++i) {
    if (codes[i].size() != frames) throw RangeError("rvq_decode: ragged code rows");
    for (std::size_t t = 0; t < frames; ++t) {
      const std::uint32_t c = codes[i][t];
      if (c >= tiers[i].size())
        throw RangeError("rvq_decode: code " + std::to_string(c) + " at tier " +
                         std::to_string(i) + " frame " + std::to_string(t) +
                         " exceeds codebook size " + std::to_string(tiers[i].size()));
      const Vector z_hat = row_times(tiers[i].codewords.row(c), tiers[i].w_out);
      auto row = out.frames.row(t);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += z_hat[j];
    }
  }
  return out;
}

struct DropoutDraw {
  std::size_t n_used = 0;
  bool encoder_grad_stop = false;
};

/// Quantizer dropout: with probability 1-p use every tier, otherwise draw
/// the last used tier uniformly from {0, ..., K-1}.
inline DropoutDraw quantizer_dropout_sample(double p, std::size_t num_tiers, Rng& rng) {
  if (num_tiers == 0) throw RangeError("quantizer_dropout_sample: no tiers");
  DropoutDraw d;
  d.n_used = num_tiers - 1;
  if (rng.bernoulli(p)) d.n_used = static_cast<std::size_t>(rng.below(num_tiers));
  d.encoder_grad_stop = (d.n_used == 0);
  return d;
}

}  // namespace anoncodec::quantizer

#endif  // ANONCODEC_QUANTIZER_RVQ_HPP_
