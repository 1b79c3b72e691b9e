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

// Semantic-tier anonymization of a latent corpus: project onto tier 0,
// optionally clip and perturb with the Laplace mechanism, look up the
// nearest codeword, and decode back to the latent space.

#ifndef ANONCODEC_PIPELINE_ANONYMIZE_HPP_
#define ANONCODEC_PIPELINE_ANONYMIZE_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "anoncodec/core/matrix.hpp"
#include "anoncodec/core/rng.hpp"
#include "anoncodec/corpus/synthetic.hpp"
#include "anoncodec/disentangle/ldp.hpp"
#include "anoncodec/privacy/rank.hpp"
#include "anoncodec/quantizer/rvq.hpp"
#include "anoncodec/quantizer/types.hpp"

namespace anoncodec::pipeline {

inline Matrix project(const quantizer::CodebookTier& tier, const Matrix& frames) {
  Matrix out(frames.rows(), tier.code_dim());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const Vector p = row_times(frames.row(t), tier.w_in);
    std::copy(p.begin(), p.end(), out.row(t).begin());
  }
  return out;
}

/// Mean per-frame L1 norm of the tier-0 projections of every utterance.
inline double estimate_clip(const quantizer::CodebookTier& tier, const corpus::LatentCorpus& corpus) {
  std::vector<Matrix> projected;
  for (const auto& s : corpus.speakers)
    for (const auto& u : s.utterances) projected.push_back(project(tier, u));
  return disentangle::estimate_clip_norm(projected);
}

/// Tier-0 reconstruction of one utterance. With `ldp` set, the projected
/// frames go through the training-mode noise block before the lookup.
inline Matrix anonymize_utterance(const quantizer::CodebookTier& tier, const Matrix& frames,
                                  const std::optional<disentangle::LdpConfig>& ldp, Rng& rng) {
  Matrix z_proj = project(tier, frames);
  if (ldp) z_proj = disentangle::add_ldp_noise(z_proj, *ldp, rng, disentangle::NoiseMode::kTrain);
  Matrix out(frames.rows(), tier.latent_dim());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const auto lookup = quantizer::vq_lookup(tier, z_proj.row(t));
    const Vector z_hat = row_times(lookup.codeword, tier.w_out);
    std::copy(z_hat.begin(), z_hat.end(), out.row(t).begin());
  }
  return out;
}

/// Every utterance draws noise from its own substream, keyed by its
/// speaker-major position in the corpus.
inline corpus::LatentCorpus anonymize_corpus(const corpus::LatentCorpus& input,
                                             const quantizer::CodebookTier& tier,
                                             const std::optional<disentangle::LdpConfig>& ldp,
                                             std::uint64_t seed) {
  tier.validate();
  if (input.dim() != tier.latent_dim())
    throw RangeError("anonymize: corpus dimension " + std::to_string(input.dim()) +
                     " does not match codebook latent dimension " + std::to_string(tier.latent_dim()));
  const Rng root(seed);
  corpus::LatentCorpus out;
  std::size_t index = 0;
  for (const auto& s : input.speakers) {
    corpus::SpeakerLatents spk{s.id, {}};
    for (const auto& u : s.utterances) {
      Rng r = root.substream("anonymize", index++);
      spk.utterances.push_back(anonymize_utterance(tier, u, ldp, r));
    }
    out.speakers.push_back(std::move(spk));
  }
  return out;
}

struct PrivacyEvaluation {
  privacy::PrivacyReport linkability;
  privacy::PrivacyReport singling_out;
};

/// Splits the corpus into reference and evaluation halves, anonymizes both
/// and runs the two rank tests on surrogate embeddings.
inline PrivacyEvaluation evaluate_privacy(const corpus::LatentCorpus& corpus,
                                          const quantizer::CodebookTier& tier,
                                          const std::optional<disentangle::LdpConfig>& ldp,
                                          std::size_t tests, std::uint64_t seed,
                                          std::size_t threads = 1) {
  const auto split = corpus::split_partitions(corpus);
  const Rng root(seed);
  const auto anon_ref = corpus::embed(
      anonymize_corpus(split.reference, tier, ldp, root.substream("anon-ref").seed()),
      privacy::Partition::kReference);
  const auto anon_eval =
      corpus::embed(anonymize_corpus(split.evaluation, tier, ldp, root.substream("anon-eval").seed()));
  const auto orig_eval = corpus::embed(split.evaluation);
  const std::uint64_t rank_seed = root.substream("rank").seed();
  return {
      privacy::linkability(anon_eval, anon_ref, tests, rank_seed, privacy::TieMode::kSpeakerIndex, threads),
      privacy::singling_out(orig_eval, anon_ref, tests, rank_seed, privacy::TieMode::kSpeakerIndex, threads),
  };
}

inline double grand_mean_rank(const privacy::PrivacyReport& report) {
  if (report.per_speaker.empty()) throw RangeError("grand_mean_rank: empty report");
  double s = 0.0;
  for (const auto& r : report.per_speaker) s += r.mean_rank;
  return s / static_cast<double>(report.per_speaker.size());
}

}  // namespace anoncodec::pipeline

#endif  // ANONCODEC_PIPELINE_ANONYMIZE_HPP_
