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

// Laplace local differential privacy on the projected semantic latents.
//
// Each frame is clipped to L1 norm C, which bounds the L1 sensitivity of the
// block output by 2C, then perturbed with i.i.d. Laplace(0, 2C / epsilon)
// noise per coordinate. The noise step is skipped at inference.

#ifndef ANONCODEC_DISENTANGLE_LDP_HPP_
#define ANONCODEC_DISENTANGLE_LDP_HPP_

#include <cmath>
#include <span>
#include <vector>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"
#include "anoncodec/core/rng.hpp"

namespace anoncodec::disentangle {

struct LdpConfig {
  double epsilon = 15.0;
  double clip_c = 1.0;
  bool enabled_in_inference = false;

  double laplace_scale() const { return 2.0 * clip_c / epsilon; }

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw ConfigError("ldp: epsilon must be a positive finite number");
    if (!(clip_c > 0.0) || !std::isfinite(clip_c))
      throw ConfigError("ldp: clip_c must be a positive finite number");
  }
};

enum class NoiseMode { kTrain, kInfer };

/// Scale v so that its L1 norm is at most c. Vectors already inside the
/// ball are returned unchanged.
inline Vector clip_l1(std::span<const double> v, double c) {
  if (!(c > 0.0)) throw ConfigError("clip_l1: bound must be positive");
  Vector out(v.begin(), v.end());
  const double n = norm_l1(v);
  if (n > c) {
    const double s = c / n;
    for (double& x : out) x *= s;
  }
  return out;
}

/// Inverse-CDF Laplace draw: b * sign(u) * ln(1 - 2|u|), u ~ U(-1/2, 1/2).
inline double sample_laplace(double b, Rng& rng) {
  const double u = rng.uniform_open() - 0.5;
  const double sign = u < 0.0 ? -1.0 : (u > 0.0 ? 1.0 : 0.0);
  return b * sign * std::log(1.0 - 2.0 * std::abs(u));
}

inline Matrix add_ldp_noise(const Matrix& z_proj, const LdpConfig& cfg, Rng& rng, NoiseMode mode) {
  cfg.validate();
  Matrix out(z_proj.rows(), z_proj.cols());
  const bool noisy = mode == NoiseMode::kTrain || cfg.enabled_in_inference;
  const double b = cfg.laplace_scale();
  for (std::size_t t = 0; t < z_proj.rows(); ++t) {
    const Vector clipped = clip_l1(z_proj.row(t), cfg.clip_c);
    auto row = out.row(t);
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = noisy ? clipped[j] + sample_laplace(b, rng) : clipped[j];
  }
  return out;
}

/// Mean per-frame L1 norm over every frame of every batch; used to pick C
/// from latents produced without the noise block.
inline double estimate_clip_norm(const std::vector<Matrix>& batches) {
  double sum = 0.0;
  std::size_t frames = 0;
  for (const auto& b : batches)
    for (std::size_t t = 0; t < b.rows(); ++t) {
      sum += norm_l1(b.row(t));
      ++frames;
    }
  if (frames == 0) throw RangeError("estimate_clip_norm: no frames");
  return sum / static_cast<double>(frames);
}

}  // namespace anoncodec::disentangle

#endif  // ANONCODEC_DISENTANGLE_LDP_HPP_
