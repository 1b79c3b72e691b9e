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

#ifndef ANONCODEC_LOSSES_ADVERSARIAL_HPP_
#define ANONCODEC_LOSSES_ADVERSARIAL_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"

namespace anoncodec::losses {

/// Scores and per-layer feature maps of a set of sub-discriminators; the
/// discriminators themselves live outside this library.
struct DiscriminatorOutputs {
  std::vector<std::vector<double>> scores;   // [discriminator][position]
  std::vector<std::vector<Matrix>> features;  // [discriminator][layer]
};

struct LsganLosses {
  double discriminator = 0.0;
  double generator = 0.0;
};

namespace detail {

inline double mean_of(const std::vector<std::vector<double>>& xs, double (*f)(double)) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& v : xs)
    for (double x : v) {
      s += f(x);
      ++n;
    }
  if (n == 0) throw RangeError("lsgan: empty score list");
  return s / static_cast<double>(n);
}

}  // namespace detail

/// Least-squares GAN losses, each mean taken over every score of every
/// sub-discriminator:
///   d = mean((real - 1)^2) + mean(fake^2),  g = mean((fake - 1)^2)
inline LsganLosses lsgan_losses(const std::vector<std::vector<double>>& real_scores,
                                const std::vector<std::vector<double>>& fake_scores) {
  LsganLosses out;
  out.discriminator = detail::mean_of(real_scores, [](double x) { return (x - 1.0) * (x - 1.0); }) +
                      detail::mean_of(fake_scores, [](double x) { return x * x; });
  out.generator = detail::mean_of(fake_scores, [](double x) { return (x - 1.0) * (x - 1.0); });
  return out;
}

/// Mean over discriminators and layers of the mean absolute difference
/// between paired feature maps.
inline double feature_matching_loss(const std::vector<std::vector<Matrix>>& real_feats,
                                    const std::vector<std::vector<Matrix>>& fake_feats) {
  if (real_feats.size() != fake_feats.size())
    throw RangeError("feature_matching_loss: discriminator count mismatch");
  double total = 0.0;
  std::size_t maps = 0;
  for (std::size_t d = 0; d < real_feats.size(); ++d) {
    if (real_feats[d].size() != fake_feats[d].size())
      throw RangeError("feature_matching_loss: layer count mismatch at discriminator " +
                       std::to_string(d));
    for (std::size_t l = 0; l < real_feats[d].size(); ++l) {
      const Matrix& a = real_feats[d][l];
      const Matrix& b = fake_feats[d][l];
      if (a.rows() != b.rows() || a.cols() != b.cols())
        throw RangeError("feature_matching_loss: shape mismatch at discriminator " +
                         std::to_string(d) + " layer " + std::to_string(l));
      if (a.empty()) throw RangeError("feature_matching_loss: empty feature map");
      double s = 0.0;
      for (std::size_t k = 0; k < a.data().size(); ++k) s += std::abs(a.data()[k] - b.data()[k]);
      total += s / static_cast<double>(a.data().size());
      ++maps;
    }
  }
  if (maps == 0) throw RangeError("feature_matching_loss: no feature maps");
  return total / static_cast<double>(maps);
}

}  // namespace anoncodec::losses

#endif  // ANONCODEC_LOSSES_ADVERSARIAL_HPP_
