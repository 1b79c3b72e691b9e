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

// USCEMB01 dataset files.
//
//   magic      8 bytes "USCEMB01"
//   speakers   u32
//   per speaker:
//     id       u16 length + UTF-8 bytes
//     count    u32 utterances
//     dim      u32
//     per utterance:
//       [frames u32]           latent corpora only
//       values  f32 x (frames x) dim, row-major
//
// All integers and floats are little-endian. The two layouts share the
// magic, so the caller states which one it expects.

#ifndef ANONCODEC_CORPUS_EMBEDDING_IO_HPP_
#define ANONCODEC_CORPUS_EMBEDDING_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>

#include "anoncodec/core/binary_io.hpp"
#include "anoncodec/core/error.hpp"
#include "anoncodec/corpus/synthetic.hpp"
#include "anoncodec/privacy/rank.hpp"

namespace anoncodec::corpus {

inline constexpr std::string_view kEmbeddingMagic = "USCEMB01";

namespace detail {

inline void put_header(ByteWriter& w, std::size_t speakers) {
  w.bytes(kEmbeddingMagic);
  w.u32(static_cast<std::uint32_t>(speakers));
}

inline void put_speaker(ByteWriter& w, const std::string& id, std::size_t count, std::size_t dim) {
  if (id.size() > std::numeric_limits<std::uint16_t>::max())
    throw RangeError("speaker id longer than 65535 bytes");
  w.u16(static_cast<std::uint16_t>(id.size()));
  w.bytes(id);
  w.u32(static_cast<std::uint32_t>(count));
  w.u32(static_cast<std::uint32_t>(dim));
}

inline std::uint32_t get_header(ByteReader& r) {
  if (r.bytes(kEmbeddingMagic.size(), "magic") != kEmbeddingMagic)
    throw ParseError("bad magic (expected USCEMB01)", 0);
  return r.u32("speaker count");
}

struct SpeakerHeader {
  std::string id;
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
};

inline SpeakerHeader get_speaker(ByteReader& r, std::uint32_t& expected_dim, bool first) {
  SpeakerHeader h;
  const std::uint16_t len = r.u16("speaker id length");
  h.id = r.bytes(len, "speaker id");
  h.count = r.u32("utterance count");
  const auto dim_at = r.offset();
  h.dim = r.u32("dimension");
  if (h.dim == 0) throw ParseError("zero dimension for speaker '" + h.id + "'", dim_at);
  if (first)
    expected_dim = h.dim;
  else if (h.dim != expected_dim)
    throw ParseError("dimension mismatch for speaker '" + h.id + "' (" + std::to_string(h.dim) +
                         " vs " + std::to_string(expected_dim) + ")",
                     dim_at);
  return h;
}

inline void expect_end(const ByteReader& r) {
  if (!r.at_end())
    throw ParseError(std::to_string(r.remaining()) + " trailing bytes after dataset", r.offset());
}

}  // namespace detail

inline ByteWriter encode_embeddings(const privacy::EmbeddingDataset& ds) {
  ds.validate();
  ByteWriter w;
  detail::put_header(w, ds.speakers.size());
  const std::size_t dim = ds.dim();
  for (const auto& s : ds.speakers) {
    detail::put_speaker(w, s.id, s.utterances.size(), dim);
    for (const auto& u : s.utterances)
      for (double x : u) w.f32(static_cast<float>(x));
  }
  return w;
}

inline privacy::EmbeddingDataset decode_embeddings(ByteReader& r) {
  privacy::EmbeddingDataset ds;
  const std::uint32_t n = detail::get_header(r);
  std::uint32_t dim = 0;
  for (std::uint32_t s = 0; s < n; ++s) {
    const auto h = detail::get_speaker(r, dim, s == 0);
    privacy::SpeakerEmbeddings spk{h.id, {}};
    for (std::uint32_t u = 0; u < h.count; ++u) {
      Vector v(h.dim);
      for (double& x : v) x = r.f32("embedding value");
      spk.utterances.push_back(std::move(v));
    }
    ds.speakers.push_back(std::move(spk));
  }
  detail::expect_end(r);
  return ds;
}

inline ByteWriter encode_latents(const LatentCorpus& corpus) {
  ByteWriter w;
  detail::put_header(w, corpus.speakers.size());
  const std::size_t dim = corpus.dim();
  for (const auto& s : corpus.speakers) {
    detail::put_speaker(w, s.id, s.utterances.size(), dim);
    for (const auto& u : s.utterances) {
      if (u.cols() != dim) throw RangeError("latent corpus mixes dimensions");
      w.u32(static_cast<std::uint32_t>(u.rows()));
      for (double x : u.data()) w.f32(static_cast<float>(x));
    }
  }
  return w;
}

inline LatentCorpus decode_latents(ByteReader& r) {
  LatentCorpus corpus;
  const std::uint32_t n = detail::get_header(r);
  std::uint32_t dim = 0;
  for (std::uint32_t s = 0; s < n; ++s) {
    const auto h = detail::get_speaker(r, dim, s == 0);
    SpeakerLatents spk{h.id, {}};
    for (std::uint32_t u = 0; u < h.count; ++u) {
      const std::uint32_t frames = r.u32("frame count");
      if (static_cast<std::uint64_t>(frames) * h.dim * 4 > r.remaining())
        throw ParseError("truncated input while reading latent matrix", r.offset());
      Matrix m(frames, h.dim);
      for (double& x : m.data()) x = r.f32("latent value");
      spk.utterances.push_back(std::move(m));
    }
    corpus.speakers.push_back(std::move(spk));
  }
  detail::expect_end(r);
  return corpus;
}

inline void write_embedding_file(const std::filesystem::path& path, const privacy::EmbeddingDataset& ds) {
  encode_embeddings(ds).save(path);
}

inline privacy::EmbeddingDataset read_embedding_file(const std::filesystem::path& path) {
  ByteReader r = ByteReader::from_file(path);
  return decode_embeddings(r);
}

inline void write_latent_file(const std::filesystem::path& path, const LatentCorpus& corpus) {
  encode_latents(corpus).save(path);
}

inline LatentCorpus read_latent_file(const std::filesystem::path& path) {
  ByteReader r = ByteReader::from_file(path);
  return decode_latents(r);
}

}  // namespace anoncodec::corpus

#endif  // ANONCODEC_CORPUS_EMBEDDING_IO_HPP_
