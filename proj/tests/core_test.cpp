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

#include "anoncodec/core/binary_io.hpp"
#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"
#include "anoncodec/core/rng.hpp"
#include "test_support.hpp"

namespace anoncodec {
namespace {

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, SubstreamsAreDistinctAndStable) {
  const Rng root(7);
  Rng a = root.substream("x", 0), b = root.substream("x", 1), c = root.substream("y", 0);
  Rng a2 = root.substream("x", 0);
  const auto va = a.next_u64();
  EXPECT_EQ(va, a2.next_u64());
  EXPECT_NE(va, b.next_u64());
  EXPECT_NE(va, c.next_u64());
}

TEST(Rng, UniformOpenNeverHitsEndpoints) {
  Rng r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, BelowIsRoughlyUniform) {
  Rng r(3);
  const int n = 7, draws = 70000;
  std::vector<int> counts(n, 0);
  for (int i = 0; i < draws; ++i) ++counts[r.below(n)];
  double chi2 = 0.0;
  const double expected = static_cast<double>(draws) / n;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 22.46);  // 6 dof, p = 0.001
  EXPECT_EQ(r.below(1), 0u);
}

TEST(Rng, NormalMoments) {
  Rng r(5);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
}

TEST(Matrix, MatmulMatchesHandComputation) {
  const Matrix a{{1, 2}, {3, 4}, {5, 6}};
  const Matrix b{{7, 8, 9}, {10, 11, 12}};
  const Matrix c = matmul(a, b);
  const Matrix expected{{27, 30, 33}, {61, 68, 75}, {95, 106, 117}};
  EXPECT_EQ(c, expected);
}

TEST(Matrix, RowTimesEqualsMatmulRow) {
  Rng r(9);
  const Matrix w = testing::random_matrix(r, 5, 3);
  const Vector x = testing::random_vector(r, 5);
  const Vector y = row_times(x, w);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) s += x[i] * w(i, j);
    EXPECT_NEAR(y[j], s, 1e-12);
  }
}

TEST(Matrix, Norms) {
  const Vector v{3.0, -4.0};
  EXPECT_DOUBLE_EQ(norm_l2(v), 5.0);
  EXPECT_DOUBLE_EQ(norm_l1(v), 7.0);
  EXPECT_TRUE(all_finite(v));
  EXPECT_FALSE(all_finite(Vector{1.0, NAN}));
}

TEST(BinaryIo, RoundTrip) {
  ByteWriter w;
  w.bytes("HEAD");
  w.u16(0xBEEF);
  w.u32(123456789u);
  w.f32(-1.5f);
  ByteReader r(w.buffer());
  EXPECT_EQ(r.bytes(4, "tag"), "HEAD");
  EXPECT_EQ(r.u16("a"), 0xBEEF);
  EXPECT_EQ(r.u32("b"), 123456789u);
  EXPECT_EQ(r.f32("c"), -1.5f);
  EXPECT_TRUE(r.at_end());
}

TEST(BinaryIo, LittleEndianLayout) {
  ByteWriter w;
  w.u32(0x01020304u);
  const auto& b = w.buffer();
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[0], 0x04);
  EXPECT_EQ(b[3], 0x01);
}

TEST(BinaryIo, TruncationReportsOffset) {
  ByteWriter w;
  w.u32(1);
  w.u16(2);
  ByteReader r(w.buffer());
  r.u32("first");
  try {
    r.u32("second");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(BinaryIo, MissingFileIsIoError) {
  EXPECT_THROW(ByteReader::from_file("/nonexistent/anoncodec/file.bin"), IoError);
}

}  // namespace
}  // namespace anoncodec
