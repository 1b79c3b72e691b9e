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
#include <vector>

#include "anoncodec/quantizer/bitrate.hpp"
#include "anoncodec/quantizer/bundle.hpp"
#include "anoncodec/quantizer/rvq.hpp"
#include "anoncodec/quantizer/types.hpp"
#include "test_support.hpp"

namespace anoncodec::quantizer {
namespace {

using testing::random_matrix;
using testing::random_vector;

// Independent argmax of cosine similarity in long double.
std::size_t brute_force_index(const Matrix& codewords, const Vector& v) {
  std::size_t best = 0;
  long double best_cos = -10.0L;
  for (std::size_t k = 0; k < codewords.rows(); ++k) {
    long double d = 0, nv = 0, ne = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      d += static_cast<long double>(v[j]) * codewords(k, j);
      nv += static_cast<long double>(v[j]) * v[j];
      ne += static_cast<long double>(codewords(k, j)) * codewords(k, j);
    }
    const long double c = d / std::sqrt(nv * ne);
    if (c > best_cos) {
      best_cos = c;
      best = k;
    }
  }
  return best;
}

TEST(VqLookup, MatchesBruteForceArgmax) {
  Rng r(11);
  for (int trial = 0; trial < 200; ++trial) {
    CodebookTier t;
    t.codewords = random_matrix(r, 37, 5);
    t.w_in = random_matrix(r, 8, 5);
    t.w_out = random_matrix(r, 5, 8);
    const Vector v = random_vector(r, 5);
    EXPECT_EQ(vq_lookup(t, v).index, brute_force_index(t.codewords, v));
  }
}

TEST(VqLookup, TiesGoToLowestIndex) {
  CodebookTier t;
  t.codewords = Matrix{{0, 1}, {1, 0}, {2, 0}, {1, 0}};
  t.w_in = Matrix::identity(2);
  t.w_out = Matrix::identity(2);
  const auto res = vq_lookup(t, Vector{3.0, 0.0});
  EXPECT_EQ(res.index, 1u);
  EXPECT_EQ(res.codeword, (Vector{1.0, 0.0}));
}

TEST(VqLookup, ScaleInvariant) {
  Rng r(2);
  CodebookTier t;
  t.codewords = random_matrix(r, 20, 3);
  t.w_in = Matrix::identity(3);
  const Vector v = random_vector(r, 3);
  Vector w = v;
  for (double& x : w) x *= 0.001;
  EXPECT_EQ(vq_lookup(t, v).index, vq_lookup(t, w).index);
}

TEST(VqLookup, RejectsZeroQuery) {
  CodebookTier t;
  t.codewords = Matrix{{1, 0}};
  t.w_in = Matrix::identity(2);
  EXPECT_THROW(vq_lookup(t, Vector{0.0, 0.0}), DegenerateInputError);
  EXPECT_THROW(vq_lookup(t, Vector{1.0}), RangeError);
}

TEST(QuantizeTier, FactorizedProjectionByHand) {
  CodebookTier t;
  t.w_in = Matrix{{1, 0}, {0, 1}, {1, 1}};       // D=3, M=2
  t.codewords = Matrix{{1, 0}, {0, 2}};
  t.w_out = Matrix{{1, 2, 3}, {4, 5, 6}};
  const TierResult q = quantize_tier(t, Vector{0.0, 3.0, 1.0});
  EXPECT_EQ(q.z_proj, (Vector{1.0, 4.0}));
  EXPECT_EQ(q.index, 1u);
  EXPECT_EQ(q.selected, (Vector{0.0, 2.0}));
  EXPECT_EQ(q.z_hat, (Vector{8.0, 10.0, 12.0}));
}

TEST(CodebookTier, ValidationRejectsBadShapes) {
  CodebookTier t;
  t.w_in = Matrix(2, 3);
  t.w_out = Matrix(3, 2);
  t.codewords = Matrix{{1, 1, 1}};
  EXPECT_THROW(t.validate(), RangeError);  // M > D
  t.w_in = Matrix(3, 2);
  t.w_out = Matrix(2, 3);
  t.codewords = Matrix{{1, 0}, {0, 0}};
  EXPECT_THROW(t.validate(), DegenerateInputError);
}

TEST(RvqConfig, Validation) {
  RVQConfig c;
  c.code_dim = 32;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RVQConfig{};
  c.dropout_prob = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(RVQConfig::full_scale().validate());
}

struct Instance {
  RVQConfig config;
  std::vector<CodebookTier> tiers;
  LatentSequence z;
};

Instance random_instance(std::uint64_t seed) {
  Rng r(seed);
  Instance in;
  in.config.latent_dim = 2 + r.below(10);
  in.config.code_dim = 1 + r.below(in.config.latent_dim);
  in.config.codebook_sizes.assign(1 + r.below(5), 0);
  for (auto& k : in.config.codebook_sizes) k = 1 + r.below(40);
  in.tiers = make_tiers(in.config, r.substream("tiers"));
  in.z.frames = random_matrix(r, 1 + r.below(12), in.config.latent_dim);
  return in;
}

TEST(Rvq, RecursiveEqualsSummedForm) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Instance in = random_instance(s);
    for (std::size_t n = 0; n < in.config.num_tiers(); ++n) {
      const Matrix a = rvq_encode(in.config, in.tiers, in.z, n).quantized();
      const Matrix b = rvq_encode_summed(in.config, in.tiers, in.z, n);
      for (std::size_t k = 0; k < a.data().size(); ++k) ASSERT_NEAR(a.data()[k], b.data()[k], 1e-9);
    }
  }
}

TEST(Rvq, DecodeIsBitExact) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Instance in = random_instance(1000 + s);
    for (std::size_t n = 0; n < in.config.num_tiers(); ++n) {
      const auto enc = rvq_encode(in.config, in.tiers, in.z, n);
      const auto dec = rvq_decode(in.config, in.tiers, enc.codes, n);
      ASSERT_EQ(dec.frames, enc.quantized());
    }
  }
}

TEST(Rvq, DecodeBySummationOracle) {
  const Instance in = random_instance(77);
  const std::size_t n = in.config.num_tiers() - 1;
  const auto enc = rvq_encode(in.config, in.tiers, in.z, n);
  const auto dec = rvq_decode(in.config, in.tiers, enc.codes, n);
  for (std::size_t t = 0; t < in.z.length(); ++t)
    for (std::size_t j = 0; j < in.config.latent_dim; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t a = 0; a < in.config.code_dim; ++a)
          s += in.tiers[i].codewords(enc.codes[i][t], a) * in.tiers[i].w_out(a, j);
      EXPECT_NEAR(dec.frames(t, j), s, 1e-12);
    }
}

TEST(Rvq, ResidualTiersSeeResiduals) {
  int checked = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Instance in = random_instance(s);
    if (in.config.num_tiers() < 2) continue;
    ++checked;
    const auto enc = rvq_encode(in.config, in.tiers, in.z, 1);
    for (std::size_t t = 0; t < in.z.length(); ++t) {
      Vector res(in.config.latent_dim);
      for (std::size_t j = 0; j < res.size(); ++j) res[j] = in.z.frames(t, j) - enc.z_q_partial[0](t, j);
      EXPECT_EQ(enc.codes[1][t], quantize_tier(in.tiers[1], res).index);
    }
  }
  EXPECT_GE(checked, 5);
}

TEST(Rvq, RangeAndShapeErrors) {
  const Instance in = random_instance(3);
  const std::size_t k = in.config.num_tiers();
  EXPECT_THROW(rvq_encode(in.config, in.tiers, in.z, k), RangeError);
  auto codes = rvq_encode(in.config, in.tiers, in.z, 0).codes;
  codes[0][0] = static_cast<std::uint32_t>(in.tiers[0].size());
  EXPECT_THROW(rvq_decode(in.config, in.tiers, codes, 0), RangeError);
  LatentSequence bad{Matrix(3, in.config.latent_dim + 1, 1.0)};
  EXPECT_THROW(rvq_encode(in.config, in.tiers, bad, 0), RangeError);
}

TEST(Rvq, GradStopOnlyForSemanticOnly) {
  const Instance in = random_instance(8);
  EXPECT_TRUE(rvq_encode(in.config, in.tiers, in.z, 0).encoder_grad_stop);
  if (in.config.num_tiers() > 1) {
    EXPECT_FALSE(rvq_encode(in.config, in.tiers, in.z, 1).encoder_grad_stop);
  }
}

TEST(VqLosses, ValuesAndGradients) {
  const Vector z{1.0, 2.0}, e{0.5, 3.0};
  const auto l = vq_losses(z, e);
  EXPECT_DOUBLE_EQ(l.commitment, 1.25);
  EXPECT_DOUBLE_EQ(l.codebook, 1.25);
  EXPECT_EQ(l.grad_z, (Vector{1.0, -2.0}));
  EXPECT_EQ(l.grad_e, (Vector{-1.0, 2.0}));
}

TEST(Dropout, DistributionOfTierCount) {
  Rng r(17);
  const std::size_t k = 4;
  const double p = 0.5;
  const int n = 200000;
  std::vector<int> counts(k, 0);
  int stops = 0;
  for (int i = 0; i < n; ++i) {
    const auto d = quantizer_dropout_sample(p, k, r);
    ++counts[d.n_used];
    if (d.encoder_grad_stop) {
      ++stops;
      EXPECT_EQ(d.n_used, 0u);
    }
  }
  for (std::size_t i = 0; i + 1 < k; ++i) EXPECT_NEAR(counts[i] / double(n), p / k, 0.005);
  EXPECT_NEAR(counts[k - 1] / double(n), 1.0 - p + p / k, 0.005);
  EXPECT_EQ(stops, counts[0]);
}

TEST(Dropout, ZeroProbabilityUsesAllTiers) {
  Rng r(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(quantizer_dropout_sample(0.0, 3, r).n_used, 2u);
}

TEST(Bitrate, PresetTable) {
  struct Row {
    const char* preset;
    std::size_t n;
    double kbps;
  };
  const Row rows[] = {{"usc", 0, 0.35},     {"usc", 5, 1.60},
                      {"encodec", 0, 0.75}, {"encodec", 7, 6.00},
                      {"dac", 0, 0.86},     {"dac", 8, 7.75},
                      {"speechtokenizer", 0, 0.50}, {"speechtokenizer", 7, 4.00},
                      {"facodec", 0, 1.60}, {"facodec", 4, 4.80}};
  for (const auto& row : rows) {
    const auto spec = find_bitrate_preset(row.preset);
    ASSERT_TRUE(spec) << row.preset;
    EXPECT_NEAR(bitrate_kbps(*spec, row.n), row.kbps, 0.005) << row.preset << " n=" << row.n;
  }
}

TEST(Bitrate, FormulaByHand) {
  BitrateSpec s{"toy", 8.0, {2, 2}, {{256, 1}, {16, 1}, {3, 1}}};
  EXPECT_DOUBLE_EQ(bitrate_kbps(s, 0), 2.0 * 8);
  EXPECT_DOUBLE_EQ(bitrate_kbps(s, 2), 2.0 * (8 + 4 + 2));
  EXPECT_THROW(bitrate_kbps(s, 3), RangeError);
  EXPECT_EQ(bits_for(1), 0u);
  EXPECT_EQ(bits_for(1024), 10u);
  EXPECT_EQ(bits_for(1025), 11u);
  EXPECT_FALSE(find_bitrate_preset("nope"));
}

Instance small_instance() {
  Instance in;
  in.config.codebook_sizes = {8, 4};
  in.config.latent_dim = 6;
  in.config.code_dim = 3;
  in.tiers = make_tiers(in.config, Rng(4));
  return in;
}

TEST(Bundle, RoundTripIsBitExactAfterFirstWrite) {
  const Instance in = small_instance();
  const CodebookBundle b{in.config, in.tiers, 99};
  const auto bytes = encode_bundle(b).buffer();
  ByteReader r(bytes);
  const auto back = decode_bundle(r);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.config.codebook_sizes, in.config.codebook_sizes);
  for (std::size_t i = 0; i < in.tiers.size(); ++i)
    for (std::size_t k = 0; k < in.tiers[i].codewords.data().size(); ++k)
      EXPECT_EQ(back.tiers[i].codewords.data()[k],
                static_cast<double>(static_cast<float>(in.tiers[i].codewords.data()[k])));
  EXPECT_EQ(encode_bundle(back).buffer(), bytes);
}

TEST(Bundle, ParseErrors) {
  const Instance in = small_instance();
  auto bytes = encode_bundle({in.config, in.tiers, 1}).buffer();
  {
    auto bad = bytes;
    bad[0] = 'X';
    ByteReader r(bad);
    try {
      decode_bundle(r);
      FAIL();
    } catch (const ParseError& e) {
      EXPECT_EQ(e.offset(), 0u);
    }
  }
  {
    auto cut = bytes;
    cut.resize(cut.size() - 3);
    ByteReader r(cut);
    EXPECT_THROW(decode_bundle(r), ParseError);
  }
  {
    auto extra = bytes;
    extra.push_back(0);
    ByteReader r(extra);
    try {
      decode_bundle(r);
      FAIL();
    } catch (const ParseError& e) {
      EXPECT_EQ(e.offset(), bytes.size());
    }
  }
}

}  // namespace
}  // namespace anoncodec::quantizer
