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

// Synthetic speaker/content latents.
//
// Each speaker owns a random centroid; every frame adds one prototype from
// a bank shared by all speakers plus isotropic noise:
//
//   frame = speaker_spread * c_s + content_spread * p_k + noise_std * n

#ifndef ANONCODEC_CORPUS_SYNTHETIC_HPP_
#define ANONCODEC_CORPUS_SYNTHETIC_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"
#include "anoncodec/core/rng.hpp"
#include "anoncodec/privacy/rank.hpp"
#include "anoncodec/quantizer/types.hpp"

namespace anoncodec::corpus {

struct SyntheticCorpusConfig {
  std::size_t n_speakers = 200;
  std::size_t utterances_per_speaker = 10;
  std::size_t frames_per_utterance = 40;
  std::size_t latent_dim = 16;
  std::size_t n_prototypes = 32;
  double speaker_spread = 1.0;
  double content_spread = 1.0;
  double noise_std = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_speakers < 1 || utterances_per_speaker < 1 || frames_per_utterance < 1 ||
        latent_dim < 1 || n_prototypes < 1)
      throw ConfigError("corpus: every count must be >= 1");
    for (double s : {speaker_spread, content_spread, noise_std})
      if (!(s >= 0.0) || !std::isfinite(s))
        throw ConfigError("corpus: spreads and noise must be finite and >= 0");
  }
};

struct SpeakerLatents {
  std::string id;
  std::vector<Matrix> utterances;  // each T x D
};

struct LatentCorpus {
  std::vector<SpeakerLatents> speakers;

  std::size_t dim() const {
    for (const auto& s : speakers)
      if (!s.utterances.empty()) return s.utterances.front().cols();
    return 0;
  }

  std::size_t utterance_count() const {
    std::size_t n = 0;
    for (const auto& s : speakers) n += s.utterances.size();
    return n;
  }

  /// Every utterance as a quantizer input, speaker-major.
  std::vector<quantizer::LatentSequence> sequences() const {
    std::vector<quantizer::LatentSequence> out;
    for (const auto& s : speakers)
      for (const auto& u : s.utterances) out.push_back({u});
    return out;
  }
};

inline std::string speaker_name(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "spk%04zu", index);
  return buf;
}

inline LatentCorpus generate_corpus(const SyntheticCorpusConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.latent_dim;
  const Rng root(cfg.seed);
  Rng proto_rng = root.substream("prototypes");
  Matrix prototypes(cfg.n_prototypes, d);
  for (double& x : prototypes.data()) x = proto_rng.normal();

  LatentCorpus out;
  out.speakers.resize(cfg.n_speakers);
  for (std::size_t s = 0; s < cfg.n_speakers; ++s) {
    Rng r = root.substream("speaker", s);
    Vector centroid(d);
    for (double& x : centroid) x = cfg.speaker_spread * r.normal();
    SpeakerLatents& spk = out.speakers[s];
    spk.id = speaker_name(s);
    for (std::size_t u = 0; u < cfg.utterances_per_speaker; ++u) {
      Matrix frames(cfg.frames_per_utterance, d);
      for (std::size_t t = 0; t < frames.rows(); ++t) {
        const auto p = prototypes.row(r.below(cfg.n_prototypes));
        for (std::size_t j = 0; j < d; ++j)
          frames(t, j) = centroid[j] + cfg.content_spread * p[j] + cfg.noise_std * r.normal();
      }
      spk.utterances.push_back(std::move(frames));
    }
  }
  return out;
}

/// Time-mean of the frames, L2-normalized.
inline Vector surrogate_embedding(const Matrix& frames) {
  if (frames.rows() < 1) throw RangeError("surrogate_embedding: no frames");
  Vector mean(frames.cols(), 0.0);
  for (std::size_t t = 0; t < frames.rows(); ++t)
    for (std::size_t j = 0; j < frames.cols(); ++j) mean[j] += frames(t, j);
  for (double& x : mean) x /= static_cast<double>(frames.rows());
  const double n = norm_l2(mean);
  if (n == 0.0) throw DegenerateInputError("surrogate_embedding: zero mean vector");
  for (double& x : mean) x /= n;
  return mean;
}

inline privacy::EmbeddingDataset embed(const LatentCorpus& corpus,
                                       privacy::Partition partition = privacy::Partition::kEvaluation) {
  privacy::EmbeddingDataset ds;
  ds.partition = partition;
  for (const auto& s : corpus.speakers) {
    privacy::SpeakerEmbeddings e{s.id, {}};
    for (const auto& u : s.utterances) e.utterances.push_back(surrogate_embedding(u));
    ds.speakers.push_back(std::move(e));
  }
  return ds;
}

struct CorpusSplit {
  LatentCorpus reference;
  LatentCorpus evaluation;
};

/// First half of each speaker's utterances (rounded up) to the reference
/// partition, the rest to evaluation.
inline CorpusSplit split_partitions(const LatentCorpus& corpus) {
  CorpusSplit out;
  for (const auto& s : corpus.speakers) {
    if (s.utterances.size() < 2)
      throw RangeError("speaker '" + s.id + "' needs at least two utterances to split");
    const std::size_t half = (s.utterances.size() + 1) / 2;
    out.reference.speakers.push_back(
        {s.id, {s.utterances.begin(), s.utterances.begin() + static_cast<std::ptrdiff_t>(half)}});
    out.evaluation.speakers.push_back(
        {s.id, {s.utterances.begin() + static_cast<std::ptrdiff_t>(half), s.utterances.end()}});
  }
  return out;
}

}  // namespace anoncodec::corpus

#endif  // ANONCODEC_CORPUS_SYNTHETIC_HPP_
