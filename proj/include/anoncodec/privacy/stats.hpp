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

#ifndef ANONCODEC_PRIVACY_STATS_HPP_
#define ANONCODEC_PRIVACY_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"

namespace anoncodec::privacy {

inline double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw RangeError("cosine_sim: dimension mismatch");
  const double na = norm_l2(a);
  const double nb = norm_l2(b);
  if (na == 0.0 || nb == 0.0) throw DegenerateInputError("cosine_sim: zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

/// Linear-interpolation percentile on the ascending sample, position
/// (P / 100) * (n - 1).
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw RangeError("percentile: empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw RangeError("percentile: P outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct Percentiles {
  double p50 = 0.0;
  double p1 = 0.0;
};

inline Percentiles percentiles(const std::vector<double>& mean_ranks) {
  return {percentile(mean_ranks, 50.0), percentile(mean_ranks, 1.0)};
}

/// Rank distribution under random guessing: averaged uniform ranks on
/// {1..N} over L tests, approximated as normal by the CLT.
struct RandomBaseline {
  double mu = 0.0;
  double var = 0.0;
  double p50 = 0.0;
  double p1 = 0.0;
};

inline constexpr double kFirstPercentileZ = -2.326348;

inline RandomBaseline random_baseline(std::size_t n_speakers, std::size_t tests) {
  if (n_speakers < 1 || tests < 1) throw RangeError("random_baseline: N and L must be >= 1");
  const double n = static_cast<double>(n_speakers);
  RandomBaseline b;
  b.mu = (n + 1.0) / 2.0;
  b.var = (n - 1.0) * (n - 1.0) / (12.0 * static_cast<double>(tests));
  b.p50 = b.mu;
  b.p1 = b.mu + kFirstPercentileZ * std::sqrt(b.var);
  return b;
}

struct WilsonInterval {
  double center = 0.0;
  double half_width = 0.0;
  double lower() const { return center - half_width; }
  double upper() const { return center + half_width; }
};

inline double z_for_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("wilson: alpha outside (0, 1)");
  if (alpha == 0.05) return 1.959964;
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
}

/// Wilson score interval for k successes in n trials.
inline WilsonInterval wilson_interval(std::size_t k, std::size_t n, double alpha = 0.05) {
  if (n == 0) throw RangeError("wilson_interval: n must be >= 1");
  if (k > n) throw RangeError("wilson_interval: k exceeds n");
  const double z = z_for_alpha(alpha);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double shift = z * z / (2.0 * nn);
  const double denom = 1.0 + z * z / nn;
  const double spread = p * (1.0 - p);
  // At p = 0 or 1 the root reduces to z / 2n exactly; using the shared
  // shift term keeps the boundary endpoint at exactly 0 (or 1).
  const double root = spread == 0.0 ? shift : z * std::sqrt(spread / nn + z * z / (4.0 * nn * nn));
  return {(p + shift) / denom, root / denom};
}

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
  double rmse = 0.0;
};

/// Ranks 1..n with ties given their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0)
    throw DegenerateInputError("correlation undefined for a constant sequence");
  return sab / std::sqrt(saa * sbb);
}

inline Correlation correlation_metrics(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw RangeError("correlation_metrics: length mismatch");
  if (a.size() < 2) throw RangeError("correlation_metrics: need at least two points");
  Correlation c;
  c.pearson = pearson(a, b);
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  c.spearman = pearson(ra, rb);
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  c.rmse = std::sqrt(sq / static_cast<double>(a.size()));
  return c;
}

}  // namespace anoncodec::privacy

#endif  // ANONCODEC_PRIVACY_STATS_HPP_
