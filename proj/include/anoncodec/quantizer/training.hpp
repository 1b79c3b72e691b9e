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

#ifndef ANONCODEC_QUANTIZER_TRAINING_HPP_
#define ANONCODEC_QUANTIZER_TRAINING_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"
#include "anoncodec/core/rng.hpp"
#include "anoncodec/quantizer/rvq.hpp"
#include "anoncodec/quantizer/types.hpp"

namespace anoncodec::quantizer {

struct TrainHyper {
  double learning_rate = 0.01;
  std::size_t steps = 500;
  std::size_t batch_size = 8;
  double codebook_weight = 1.0;     // lambda_c
  double commitment_weight = 0.25;  // lambda_w
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Learning rate decays on a cosine from learning_rate to
  /// learning_rate * final_lr_fraction over the run; 1 keeps it constant.
  double final_lr_fraction = 0.05;
  /// A codeword left unselected for this many consecutive steps is re-seeded
  /// from a projected frame of the current batch; 0 disables re-seeding.
  std::size_t dead_code_patience = 20;
};

struct TrainResult {
  std::vector<CodebookTier> tiers;
  /// Batch loss per step: reconstruction + lambda_c L_c + lambda_w L_w.
  std::vector<double> loss_trace;
  double initial_mse = 0.0;
  double final_mse = 0.0;
  /// Items whose dropout draw kept only tier 0.
  std::size_t grad_stop_items = 0;
  /// Codewords re-seeded because they went unused.
  std::size_t restarted_codewords = 0;
};

/// Mean squared error over all entries between z_e and z_q^n.
inline double reconstruction_mse(const RVQConfig& config,
                                 const std::vector<CodebookTier>& tiers,
                                 const std::vector<LatentSequence>& corpus, std::size_t n) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& seq : corpus) {
    const QuantizeOutput q = rvq_encode(config, tiers, seq, n);
    const Matrix& zq = q.quantized();
    for (std::size_t t = 0; t < seq.length(); ++t)
      for (std::size_t j = 0; j < seq.dim(); ++j) {
        const double e = seq.frames(t, j) - zq(t, j);
        sum += e * e;
      }
    count += seq.length() * seq.dim();
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

namespace detail {

inline std::vector<std::size_t> draw_batch(std::size_t corpus_size, std::size_t batch_size,
                                           const Rng& root, std::size_t step) {
  Rng r = root.substream("batch", step);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = static_cast<std::size_t>(r.below(corpus_size));
  return idx;
}

struct Adam {
  Matrix m, v;
  explicit Adam(const Matrix& like) : m(like.rows(), like.cols()), v(like.rows(), like.cols()) {}

  void reset_row(std::size_t r) {
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = v(r, c) = 0.0;
  }

  void step(Matrix& param, const Matrix& grad, const TrainHyper& h, double lr, std::size_t t) {
    const double bc1 = 1.0 - std::pow(h.adam_beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(h.adam_beta2, static_cast<double>(t));
    auto p = param.data();
    auto g = grad.data();
    auto mm = m.data();
    auto vv = v.data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      mm[k] = h.adam_beta1 * mm[k] + (1.0 - h.adam_beta1) * g[k];
      vv[k] = h.adam_beta2 * vv[k] + (1.0 - h.adam_beta2) * g[k] * g[k];
      const double mhat = mm[k] / bc1;
      const double vhat = vv[k] / bc2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + h.adam_epsilon);
    }
  }
};

inline double scheduled_lr(const TrainHyper& h, std::size_t step) {
  if (h.steps <= 1) return h.learning_rate;
  const double pi = std::acos(-1.0);
  const double phase = static_cast<double>(step) / static_cast<double>(h.steps - 1);
  const double f = h.final_lr_fraction;
  return h.learning_rate * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(pi * phase)));
}

}  // namespace detail

/// Replace every tier's codewords with projected inputs sampled uniformly
/// (without replacement while enough nonzero frames remain) from one batch.
/// Residual tiers are seeded from the residuals left by the tiers before them.
inline void initialize_codebooks(std::vector<CodebookTier>& tiers,
                                 const std::vector<LatentSequence>& batch, const Rng& rng) {
  std::vector<Vector> inputs;
  for (const auto& seq : batch)
    for (std::size_t t = 0; t < seq.length(); ++t) {
      const auto r = seq.frames.row(t);
      inputs.emplace_back(r.begin(), r.end());
    }
  std::vector<Vector> targets = inputs;
  for (auto& tier : tiers) {
    std::vector<Vector> projected;
    std::vector<std::size_t> source;
    for (std::size_t f = 0; f < inputs.size(); ++f) {
      Vector p = row_times(inputs[f], tier.w_in);
      if (norm_l2(p) > 0.0) {
        projected.push_back(std::move(p));
        source.push_back(f);
      }
    }
    if (projected.empty()) throw DegenerateInputError("codebook init: all projected frames are zero");
    Rng r = rng.substream("codebook-init", tier.tier_index);
    std::vector<std::size_t> order(projected.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k < tier.size(); ++k) {
      std::size_t pick;
      if (k < order.size()) {
        const std::size_t j = k + static_cast<std::size_t>(r.below(order.size() - k));
        std::swap(order[k], order[j]);
        pick = order[k];
      } else {
        pick = static_cast<std::size_t>(r.below(projected.size()));
      }
      std::copy(projected[pick].begin(), projected[pick].end(), tier.codewords.row(k).begin());
    }
    // Residuals for the next tier.
    for (std::size_t f = 0; f < inputs.size(); ++f) {
      const Vector p = row_times(inputs[f], tier.w_in);
      if (norm_l2(p) == 0.0) continue;
      const TierResult q = quantize_projected(tier, p);
      for (std::size_t j = 0; j < q.z_hat.size(); ++j) inputs[f][j] -= q.z_hat[j];
    }
  }
}

/// Desk-scale codebook learning with straight-through estimation and
/// per-item quantizer dropout.
///
/// Per frame and used tier i with input r_i (z_e for tier 0, the residual
/// otherwise, treated as a constant), projection p = r_i W_in, selected
/// codeword e and reconstruction z_q:
///   dRecon/dW_out  = e^T g                  with g = -2 (z_e - z_q) / frames
///   dRecon/dp      = g W_out^T              (straight-through past the lookup)
///   dL_w/dp        = 2 (p - e) / frames     (commitment, moves the input side)
///   dL_c/de        = 2 (e - p) / frames     (codebook, moves the codeword only)
/// Parameters are updated with Adam.
inline TrainResult train_codebooks(const std::vector<LatentSequence>& corpus,
                                   const RVQConfig& config, const TrainHyper& hyper,
                                   const Rng& rng) {
  if (corpus.empty()) throw RangeError("train_codebooks: empty corpus");
  config.validate();
  for (const auto& seq : corpus) {
    seq.validate();
    if (seq.dim() != config.latent_dim)
      throw RangeError("train_codebooks: corpus latent dimension does not match configuration");
  }
  if (hyper.batch_size == 0) throw ConfigError("train_codebooks: batch_size must be >= 1");
  if (!(hyper.learning_rate >= 0.0)) throw ConfigError("train_codebooks: learning_rate must be >= 0");
  if (!(hyper.final_lr_fraction >= 0.0 && hyper.final_lr_fraction <= 1.0))
    throw ConfigError("train_codebooks: final_lr_fraction must be in [0, 1]");

  TrainResult result;
  result.tiers = make_tiers(config, rng.substream("init"));
  {
    std::vector<LatentSequence> first;
    for (std::size_t i : detail::draw_batch(corpus.size(), hyper.batch_size, rng, 0))
      first.push_back(corpus[i]);
    initialize_codebooks(result.tiers, first, rng);
  }
  const std::size_t last = config.num_tiers() - 1;
  result.initial_mse = reconstruction_mse(config, result.tiers, corpus, last);

  std::vector<detail::Adam> adam_in, adam_code, adam_out;
  for (const auto& t : result.tiers) {
    adam_in.emplace_back(t.w_in);
    adam_code.emplace_back(t.codewords);
    adam_out.emplace_back(t.w_out);
  }

  const std::size_t d = config.latent_dim;
  const std::size_t m = config.code_dim;
  std::vector<std::vector<std::size_t>> idle;
  for (const auto& t : result.tiers) idle.emplace_back(t.size(), 0);
  for (std::size_t step = 0; step < hyper.steps; ++step) {
    std::vector<std::vector<Vector>> seen(result.tiers.size());
    std::vector<std::vector<bool>> hit;
    for (const auto& t : result.tiers) hit.emplace_back(t.size(), false);
    std::vector<Matrix> g_in, g_code, g_out;
    for (const auto& t : result.tiers) {
      g_in.emplace_back(t.w_in.rows(), t.w_in.cols());
      g_code.emplace_back(t.codewords.rows(), t.codewords.cols());
      g_out.emplace_back(t.w_out.rows(), t.w_out.cols());
    }
    const auto batch = detail::draw_batch(corpus.size(), hyper.batch_size, rng, step);
    Rng dropout_rng = rng.substream("dropout", step);
    std::size_t total_frames = 0;
    for (std::size_t i : batch) total_frames += corpus[i].length();
    const double inv_frames = 1.0 / static_cast<double>(total_frames);

    double loss = 0.0;
    for (std::size_t i : batch) {
      const LatentSequence& seq = corpus[i];
      const DropoutDraw draw = quantizer_dropout_sample(config.dropout_prob, config.num_tiers(), dropout_rng);
      if (draw.encoder_grad_stop) ++result.grad_stop_items;
      for (std::size_t t = 0; t < seq.length(); ++t) {
        const auto ze = seq.frames.row(t);
        Vector zq(d, 0.0);
        std::vector<Vector> tier_input;
        std::vector<TierResult> tier_out;
        for (std::size_t k = 0; k <= draw.n_used; ++k) {
          Vector r(d);
          for (std::size_t j = 0; j < d; ++j) r[j] = ze[j] - zq[j];
          TierResult q = quantize_tier(result.tiers[k], r);
          for (std::size_t j = 0; j < d; ++j) zq[j] += q.z_hat[j];
          tier_input.push_back(std::move(r));
          tier_out.push_back(std::move(q));
        }
        Vector g(d);
        for (std::size_t j = 0; j < d; ++j) {
          const double err = ze[j] - zq[j];
          loss += err * err * inv_frames;
          g[j] = -2.0 * err * inv_frames;
        }
        for (std::size_t k = 0; k <= draw.n_used; ++k) {
          const CodebookTier& tier = result.tiers[k];
          const TierResult& q = tier_out[k];
          const VqLosses vl = vq_losses(q.z_proj, q.selected);
          hit[k][q.index] = true;
          if (norm_l2(q.z_proj) > 0.0) seen[k].push_back(q.z_proj);
          loss += (hyper.codebook_weight * vl.codebook + hyper.commitment_weight * vl.commitment) *
                  inv_frames;
          Vector dp(m);
          for (std::size_t a = 0; a < m; ++a) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              s += tier.w_out(a, j) * g[j];
              g_out[k](a, j) += q.selected[a] * g[j];
            }
            dp[a] = s + hyper.commitment_weight * vl.grad_z[a] * inv_frames;
            g_code[k](q.index, a) += hyper.codebook_weight * vl.grad_e[a] * inv_frames;
          }
          for (std::size_t j = 0; j < d; ++j)
            for (std::size_t a = 0; a < m; ++a) g_in[k](j, a) += tier_input[k][j] * dp[a];
        }
      }
    }
    if (!std::isfinite(loss))
      throw ComputationError("train_codebooks: non-finite loss at step " + std::to_string(step));
    result.loss_trace.push_back(loss);
    const double lr = detail::scheduled_lr(hyper, step);
    for (std::size_t k = 0; k < result.tiers.size(); ++k) {
      adam_in[k].step(result.tiers[k].w_in, g_in[k], hyper, lr, step + 1);
      adam_code[k].step(result.tiers[k].codewords, g_code[k], hyper, lr, step + 1);
      adam_out[k].step(result.tiers[k].w_out, g_out[k], hyper, lr, step + 1);
    }
    if (hyper.dead_code_patience == 0 || hyper.learning_rate == 0.0) continue;
    for (std::size_t k = 0; k < result.tiers.size(); ++k) {
      Rng restart = rng.substream("restart", step * result.tiers.size() + k);
      for (std::size_t c = 0; c < idle[k].size(); ++c) {
        idle[k][c] = hit[k][c] ? 0 : idle[k][c] + 1;
        if (idle[k][c] < hyper.dead_code_patience || seen[k].empty()) continue;
        const Vector& p = seen[k][static_cast<std::size_t>(restart.below(seen[k].size()))];
        std::copy(p.begin(), p.end(), result.tiers[k].codewords.row(c).begin());
        adam_code[k].reset_row(c);
        idle[k][c] = 0;
        ++result.restarted_codewords;
      }
    }
  }
  result.final_mse = reconstruction_mse(config, result.tiers, corpus, last);
  if (!std::isfinite(result.final_mse))
    throw ComputationError("train_codebooks: non-finite reconstruction error after training");
  return result;
}

}  // namespace anoncodec::quantizer

#endif  // ANONCODEC_QUANTIZER_TRAINING_HPP_
