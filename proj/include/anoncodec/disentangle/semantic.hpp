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

#ifndef ANONCODEC_DISENTANGLE_SEMANTIC_HPP_
#define ANONCODEC_DISENTANGLE_SEMANTIC_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"

namespace anoncodec::disentangle {

/// Hidden states of one teacher layer, T' x D_t.
struct TeacherTargets {
  std::size_t layer_index = 9;
  Matrix frames;
};

struct SemanticLossWeights {
  double l1 = 0.15;
  double cosine = 1.0;
};

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Frame-averaged distillation loss between the semantic tier output z and
/// teacher targets s:
///   w_l1 * |z - s|_1 + w_cos * max(0, 1 - cos(z, s))
/// The L1 subgradient at 0 and the hinge gradient at cos = 1 are taken as 0.
inline LossAndGrad semantic_distillation_loss(const Matrix& z, const Matrix& s,
                                              SemanticLossWeights w = {}) {
  if (z.rows() != s.rows() || z.cols() != s.cols())
    throw RangeError("semantic_distillation_loss: shape mismatch");
  if (z.rows() == 0) throw RangeError("semantic_distillation_loss: no frames");
  const double inv_t = 1.0 / static_cast<double>(z.rows());
  LossAndGrad out{0.0, Matrix(z.rows(), z.cols())};
  for (std::size_t t = 0; t < z.rows(); ++t) {
    const auto zr = z.row(t);
    const auto sr = s.row(t);
    auto gr = out.grad.row(t);
    const double zn = norm_l2(zr);
    const double sn = norm_l2(sr);
    if (zn == 0.0 || sn == 0.0)
      throw DegenerateInputError("semantic_distillation_loss: zero-norm frame " + std::to_string(t));
    double l1 = 0.0;
    for (std::size_t j = 0; j < zr.size(); ++j) {
      const double d = zr[j] - sr[j];
      l1 += std::abs(d);
      gr[j] = w.l1 * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv_t;
    }
    const double cos = dot(zr, sr) / (zn * sn);
    const double hinge = 1.0 - cos;
    out.loss += (w.l1 * l1 + w.cosine * std::max(0.0, hinge)) * inv_t;
    if (hinge > 0.0) {
      // d cos / dz = s / (|z||s|) - cos * z / |z|^2
      for (std::size_t j = 0; j < zr.size(); ++j) {
        const double dcos = sr[j] / (zn * sn) - cos * zr[j] / (zn * zn);
        gr[j] -= w.cosine * dcos * inv_t;
      }
    }
  }
  return out;
}

/// Average pooling over time to match the student frame rate. A trailing
/// partial window is dropped.
inline Matrix teacher_pool(const Matrix& targets, std::size_t factor = 2) {
  if (factor == 0) throw RangeError("teacher_pool: factor must be >= 1");
  if (targets.rows() < factor)
    throw RangeError("teacher_pool: " + std::to_string(targets.rows()) +
                     " frames is fewer than the pooling factor " + std::to_string(factor));
  const std::size_t out_rows = targets.rows() / factor;
  Matrix out(out_rows, targets.cols());
  for (std::size_t t = 0; t < out_rows; ++t) {
    auto o = out.row(t);
    for (std::size_t k = 0; k < factor; ++k) {
      const auto in = targets.row(t * factor + k);
      for (std::size_t j = 0; j < o.size(); ++j) o[j] += in[j];
    }
    for (double& x : o) x /= static_cast<double>(factor);
  }
  return out;
}

}  // namespace anoncodec::disentangle

#endif  // ANONCODEC_DISENTANGLE_SEMANTIC_HPP_
