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

// Speaker reversal: an additive-margin softmax speaker classifier whose
// gradient is negated before it reaches the semantic representation.

#ifndef ANONCODEC_DISENTANGLE_SPEAKER_HPP_
#define ANONCODEC_DISENTANGLE_SPEAKER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"

namespace anoncodec::disentangle {

struct SpeakerClassifierParams {
  Matrix weights;  // N_spk x D_s; rows are L2-normalized at use
  double margin = 0.4;
  double scale = 30.0;
};

struct AmsResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d features, B x D_s
};

/// Mean AMSoftmax loss over a batch.
///
/// With f = F_i/|F_i| and w_j = W_j/|W_j|, the logits are
/// a_y = s (w_y.f - m) for the labelled speaker and a_j = s w_j.f otherwise;
/// the item loss is logsumexp(a) - a_y. The gradient is carried back through
/// the feature normalization.
inline AmsResult ams_softmax_loss(const Matrix& features, std::span<const std::size_t> labels,
                                  const SpeakerClassifierParams& params) {
  const std::size_t batch = features.rows();
  const std::size_t dim = features.cols();
  const std::size_t speakers = params.weights.rows();
  if (labels.size() != batch) throw RangeError("ams_softmax_loss: one label per feature row");
  if (params.weights.cols() != dim) throw RangeError("ams_softmax_loss: weight dimension mismatch");
  if (batch == 0) throw RangeError("ams_softmax_loss: empty batch");

  std::vector<Vector> w(speakers);
  for (std::size_t j = 0; j < speakers; ++j) {
    const auto r = params.weights.row(j);
    const double n = norm_l2(r);
    if (n == 0.0) throw DegenerateInputError("ams_softmax_loss: zero weight row " + std::to_string(j));
    w[j].assign(r.begin(), r.end());
    for (double& x : w[j]) x /= n;
  }

  AmsResult out{0.0, Matrix(batch, dim)};
  const double inv_b = 1.0 / static_cast<double>(batch);
  Vector f(dim), a(speakers), p(speakers), df(dim);
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t y = labels[i];
    if (y >= speakers)
      throw RangeError("ams_softmax_loss: label " + std::to_string(y) + " >= " +
                       std::to_string(speakers) + " speakers");
    const auto fr = features.row(i);
    const double fn = norm_l2(fr);
    if (fn == 0.0) throw DegenerateInputError("ams_softmax_loss: zero feature row " + std::to_string(i));
    for (std::size_t k = 0; k < dim; ++k) f[k] = fr[k] / fn;
    for (std::size_t j = 0; j < speakers; ++j)
      a[j] = params.scale * (dot(w[j], f) - (j == y ? params.margin : 0.0));

    // loss_i = log(sum_j exp(a_j - a_y)); |a| <= s (1 + m) keeps exp finite.
    double denom = 0.0;
    for (std::size_t j = 0; j < speakers; ++j) {
      p[j] = j == y ? 1.0 : std::exp(a[j] - a[y]);
      if (j != y) denom += p[j];
    }
    out.loss += std::log1p(denom) * inv_b;
    const double z = 1.0 + denom;
    for (double& x : p) x /= z;

    // d loss / d f = s * sum_j (p_j - [j == y]) w_j
    std::fill(df.begin(), df.end(), 0.0);
    for (std::size_t j = 0; j < speakers; ++j) {
      const double c = params.scale * (p[j] - (j == y ? 1.0 : 0.0));
      for (std::size_t k = 0; k < dim; ++k) df[k] += c * w[j][k];
    }
    // Through f = F/|F|: dF = (df - (df.f) f) / |F|
    const double proj = dot(df, f);
    auto g = out.grad.row(i);
    for (std::size_t k = 0; k < dim; ++k) g[k] = (df[k] - proj * f[k]) / fn * inv_b;
  }
  return out;
}

/// Identity on the forward pass, negated gradient on the backward pass.
struct GradientReversal {
  template <typename T>
  static T forward(T representation) {
    return representation;
  }

  static Vector backward(std::span<const double> upstream) {
    Vector out(upstream.size());
    for (std::size_t k = 0; k < upstream.size(); ++k) out[k] = -upstream[k];
    return out;
  }

  static Matrix backward(const Matrix& upstream) {
    Matrix out(upstream.rows(), upstream.cols());
    auto src = upstream.data();
    auto dst = out.data();
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = -src[k];
    return out;
  }
};

/// Desk-scale speaker head input: the time-mean of an utterance's latents.
inline Vector mean_pool(const Matrix& frames) {
  if (frames.rows() == 0) throw RangeError("mean_pool: no frames");
  Vector out(frames.cols(), 0.0);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const auto r = frames.row(t);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += r[k];
  }
  for (double& x : out) x /= static_cast<double>(frames.rows());
  return out;
}

struct ReversalResult {
  double loss = 0.0;            // AMSoftmax over the labelled items only
  std::size_t labelled = 0;
  std::vector<Matrix> grads;    // reversed, weighted gradient per utterance
};

/// Mean-pool-then-classify speaker branch for a batch of utterances.
/// Unlabelled utterances contribute neither loss nor gradient. Returned
/// gradients are with respect to each utterance's frames, already scaled by
/// `weight` and passed through the reversal.
inline ReversalResult speaker_reversal(const std::vector<Matrix>& utterances,
                                       const std::vector<std::optional<std::size_t>>& labels,
                                       const SpeakerClassifierParams& params, double weight) {
  if (labels.size() != utterances.size())
    throw RangeError("speaker_reversal: one label slot per utterance");
  ReversalResult out;
  for (const auto& u : utterances) out.grads.emplace_back(u.rows(), u.cols());

  std::vector<std::size_t> rows, ids;
  for (std::size_t i = 0; i < utterances.size(); ++i)
    if (labels[i]) {
      rows.push_back(i);
      ids.push_back(*labels[i]);
    }
  out.labelled = rows.size();
  if (rows.empty()) return out;

  Matrix pooled(rows.size(), params.weights.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Vector v = mean_pool(utterances[rows[r]]);
    if (v.size() != pooled.cols()) throw RangeError("speaker_reversal: feature dimension mismatch");
    std::copy(v.begin(), v.end(), pooled.row(r).begin());
  }
  const AmsResult ams = ams_softmax_loss(pooled, ids, params);
  out.loss = ams.loss;
  const Matrix reversed = GradientReversal::backward(ams.grad);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Matrix& g = out.grads[rows[r]];
    const double inv_t = 1.0 / static_cast<double>(g.rows());
    for (std::size_t t = 0; t < g.rows(); ++t)
      for (std::size_t k = 0; k < g.cols(); ++k) g(t, k) = weight * reversed(r, k) * inv_t;
  }
  return out;
}

}  // namespace anoncodec::disentangle

#endif  // ANONCODEC_DISENTANGLE_SPEAKER_HPP_
