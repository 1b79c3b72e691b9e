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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "anoncodec/corpus/embedding_io.hpp"
#include "anoncodec/corpus/synthetic.hpp"
#include "anoncodec/privacy/rank.hpp"
#include "test_support.hpp"

namespace anoncodec::corpus {
namespace {

SyntheticCorpusConfig small_config() {
  SyntheticCorpusConfig c;
  c.n_speakers = 12;
  c.utterances_per_speaker = 4;
  c.frames_per_utterance = 10;
  c.latent_dim = 6;
  c.n_prototypes = 8;
  c.seed = 3;
  return c;
}

double linkability_grand_mean(const LatentCorpus& corpus, std::uint64_t seed) {
  const auto split = split_partitions(corpus);
  const auto rep = privacy::linkability(embed(split.evaluation), embed(split.reference), 50, seed);
  double s = 0.0;
  for (const auto& r : rep.per_speaker) s += r.mean_rank;
  return s / static_cast<double>(rep.per_speaker.size());
}

TEST(Generate, ShapeAndNames) {
  const auto c = generate_corpus(small_config());
  ASSERT_EQ(c.speakers.size(), 12u);
  EXPECT_EQ(c.speakers[0].id, "spk0000");
  EXPECT_EQ(c.speakers[11].id, "spk0011");
  EXPECT_EQ(c.dim(), 6u);
  EXPECT_EQ(c.utterance_count(), 48u);
  EXPECT_EQ(c.sequences().size(), 48u);
  for (const auto& s : c.speakers)
    for (const auto& u : s.utterances) {
      EXPECT_EQ(u.rows(), 10u);
      EXPECT_TRUE(all_finite(u.data()));
    }
}

TEST(Generate, SameSeedBitIdentical) {
  const auto a = generate_corpus(small_config());
  const auto b = generate_corpus(small_config());
  for (std::size_t s = 0; s < a.speakers.size(); ++s)
    for (std::size_t u = 0; u < a.speakers[s].utterances.size(); ++u)
      EXPECT_EQ(a.speakers[s].utterances[u], b.speakers[s].utterances[u]);
  auto cfg = small_config();
  cfg.seed = 4;
  EXPECT_NE(generate_corpus(cfg).speakers[0].utterances[0], a.speakers[0].utterances[0]);
}

TEST(Generate, ValidatesConfig) {
  auto cfg = small_config();
  cfg.n_speakers = 0;
  EXPECT_THROW(generate_corpus(cfg), ConfigError);
  cfg = small_config();
  cfg.speaker_spread = -1.0;
  EXPECT_THROW(generate_corpus(cfg), ConfigError);
  cfg = small_config();
  cfg.noise_std = NAN;
  EXPECT_THROW(generate_corpus(cfg), ConfigError);
}

TEST(Generate, NoContentNoNoiseMakesUtterancesIdentical) {
  auto cfg = small_config();
  cfg.content_spread = 0.0;
  cfg.noise_std = 0.0;
  const auto c = generate_corpus(cfg);
  for (const auto& s : c.speakers)
    for (const auto& u : s.utterances) EXPECT_EQ(u, s.utterances[0]);
  const auto split = split_partitions(c);
  const auto rep = privacy::linkability(embed(split.evaluation), embed(split.reference), 20, 1);
  for (const auto& r : rep.per_speaker) EXPECT_EQ(r.mean_rank, 1.0);
}

TEST(Generate, ZeroSpeakerSpreadIsNearRandom) {
  SyntheticCorpusConfig cfg;
  cfg.n_speakers = 100;
  cfg.utterances_per_speaker = 6;
  cfg.speaker_spread = 0.0;
  cfg.seed = 5;
  const double mean = linkability_grand_mean(generate_corpus(cfg), 9);
  const auto b = privacy::random_baseline(100, 50);
  EXPECT_NEAR(mean, b.mu, 3.0 * std::sqrt(b.var));
}

TEST(Generate, SpeakerSpreadMonotone) {
  SyntheticCorpusConfig cfg;
  cfg.n_speakers = 100;
  cfg.utterances_per_speaker = 6;
  cfg.seed = 6;
  double prev = 1e300;
  for (double spread : {0.05, 0.2, 1.0}) {
    cfg.speaker_spread = spread;
    const double mean = linkability_grand_mean(generate_corpus(cfg), 2);
    EXPECT_LT(mean, prev) << "spread " << spread;
    prev = mean;
  }
}

TEST(Split, HalvesRoundedUp) {
  auto cfg = small_config();
  cfg.utterances_per_speaker = 5;
  const auto c = generate_corpus(cfg);
  const auto split = split_partitions(c);
  EXPECT_EQ(split.reference.speakers[0].utterances.size(), 3u);
  EXPECT_EQ(split.evaluation.speakers[0].utterances.size(), 2u);
  EXPECT_EQ(split.evaluation.speakers[0].utterances[0], c.speakers[0].utterances[3]);
  cfg.utterances_per_speaker = 1;
  EXPECT_THROW(split_partitions(generate_corpus(cfg)), RangeError);
}

TEST(Surrogate, Examples) {
  const Matrix constant{{3, 4}, {3, 4}, {3, 4}};
  const Vector e = surrogate_embedding(constant);
  EXPECT_DOUBLE_EQ(e[0], 0.6);
  EXPECT_DOUBLE_EQ(e[1], 0.8);
  EXPECT_THROW(surrogate_embedding(Matrix{{1, -2}, {-1, 2}}), DegenerateInputError);
  EXPECT_THROW(surrogate_embedding(Matrix(0, 2)), RangeError);
}

TEST(Surrogate, MeanNormalizeOracle) {
  Rng r(2);
  for (int t = 0; t < 50; ++t) {
    const Matrix m = testing::random_matrix(r, 7, 5);
    long double mean[5] = {0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 5; ++j) mean[j] += m(i, j) / 7.0L;
    long double n = 0;
    for (long double x : mean) n += x * x;
    n = std::sqrt(n);
    const Vector e = surrogate_embedding(m);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(e[j], static_cast<double>(mean[j] / n), 1e-14);
  }
}

// Hand-rolled little-endian writer, independent of the library's ByteWriter.
struct RawBytes {
  std::vector<char> b;
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    for (std::size_t k = 0; k < n; ++k) b.push_back(c[k]);
  }
  void u16(std::uint16_t v) {
    b.push_back(static_cast<char>(v & 0xff));
    b.push_back(static_cast<char>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) b.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void f32(float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
};

TEST(EmbeddingFile, IndependentWriterParses) {
  RawBytes w;
  w.raw("USCEMB01", 8);
  w.u32(2);
  w.u16(3);
  w.raw("bob", 3);
  w.u32(1);
  w.u32(2);
  w.f32(0.5f);
  w.f32(-2.0f);
  w.u16(5);
  w.raw("alice", 5);
  w.u32(2);
  w.u32(2);
  for (float f : {1.0f, 0.25f, 3.0f, -0.125f}) w.f32(f);
  ByteReader r(w.b);
  const auto ds = decode_embeddings(r);
  ASSERT_EQ(ds.speakers.size(), 2u);
  EXPECT_EQ(ds.speakers[0].id, "bob");
  EXPECT_EQ(ds.speakers[0].utterances[0], (Vector{0.5, -2.0}));
  EXPECT_EQ(ds.speakers[1].id, "alice");
  EXPECT_EQ(ds.speakers[1].utterances[1], (Vector{3.0, -0.125}));

  // The library writer produces the same bytes.
  const auto again = encode_embeddings(ds);
  EXPECT_EQ(again.buffer(), w.b);
}

TEST(EmbeddingFile, RoundTripThroughDisk) {
  testing::TempDir dir("emb");
  const auto ds = embed(generate_corpus(small_config()), privacy::Partition::kReference);
  write_embedding_file(dir / "x.emb", ds);
  const auto back = read_embedding_file(dir / "x.emb");
  ASSERT_EQ(back.speakers.size(), ds.speakers.size());
  for (std::size_t s = 0; s < ds.speakers.size(); ++s) {
    EXPECT_EQ(back.speakers[s].id, ds.speakers[s].id);
    for (std::size_t u = 0; u < ds.speakers[s].utterances.size(); ++u)
      for (std::size_t k = 0; k < ds.dim(); ++k)
        EXPECT_EQ(back.speakers[s].utterances[u][k], static_cast<float>(ds.speakers[s].utterances[u][k]));
  }
  // A second trip is bit-exact.
  write_embedding_file(dir / "y.emb", back);
  EXPECT_EQ(ByteReader::from_file(dir / "x.emb").remaining(), ByteReader::from_file(dir / "y.emb").remaining());
  const auto third = read_embedding_file(dir / "y.emb");
  for (std::size_t s = 0; s < back.speakers.size(); ++s) EXPECT_EQ(third.speakers[s].utterances, back.speakers[s].utterances);
}

TEST(LatentFile, RoundTrip) {
  testing::TempDir dir("lat");
  const auto c = generate_corpus(small_config());
  write_latent_file(dir / "c.lat", c);
  const auto back = read_latent_file(dir / "c.lat");
  ASSERT_EQ(back.speakers.size(), c.speakers.size());
  for (std::size_t s = 0; s < c.speakers.size(); ++s)
    for (std::size_t u = 0; u < c.speakers[s].utterances.size(); ++u) {
      const Matrix& a = c.speakers[s].utterances[u];
      const Matrix& b = back.speakers[s].utterances[u];
      ASSERT_EQ(a.rows(), b.rows());
      for (std::size_t k = 0; k < a.data().size(); ++k) EXPECT_EQ(b.data()[k], static_cast<float>(a.data()[k]));
    }
}

std::size_t parse_offset(const std::vector<char>& bytes) {
  ByteReader r(bytes);
  try {
    decode_embeddings(r);
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "expected ParseError";
  return 0;
}

TEST(EmbeddingFile, StructuredParseErrors) {
  RawBytes w;
  w.raw("USCEMB01", 8);
  w.u32(2);
  w.u16(1);
  w.raw("a", 1);
  w.u32(1);
  w.u32(2);  // offset 19
  w.f32(1.0f);
  w.f32(2.0f);
  w.u16(1);
  w.raw("b", 1);
  w.u32(1);
  w.u32(3);  // offset 38
  for (int k = 0; k < 3; ++k) w.f32(0.0f);
  EXPECT_EQ(parse_offset(w.b), 38u);

  std::vector<char> bad = w.b;
  bad[3] = 'X';
  EXPECT_EQ(parse_offset(bad), 0u);

  std::vector<char> truncated(w.b.begin(), w.b.begin() + 25);
  EXPECT_EQ(parse_offset(truncated), 23u);

  std::vector<char> zero_dim = w.b;
  zero_dim[19] = 0;
  EXPECT_EQ(parse_offset(zero_dim), 19u);

  RawBytes ok;
  ok.raw("USCEMB01", 8);
  ok.u32(0);
  ok.u16(7);
  EXPECT_EQ(parse_offset(ok.b), 12u);
  EXPECT_THROW(read_embedding_file("/nonexistent/dir/x.emb"), IoError);
}

TEST(LatentFile, TruncatedMatrixReportsOffset) {
  const auto c = generate_corpus(small_config());
  auto bytes = encode_latents(c).buffer();
  bytes.resize(bytes.size() - 3);
  ByteReader r(bytes);
  EXPECT_THROW(decode_latents(r), ParseError);
}

}  // namespace
}  // namespace anoncodec::corpus
