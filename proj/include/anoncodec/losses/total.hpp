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

#ifndef ANONCODEC_LOSSES_TOTAL_HPP_
#define ANONCODEC_LOSSES_TOTAL_HPP_

#include <cmath>

#include "anoncodec/core/error.hpp"

namespace anoncodec::losses {

struct LossWeights {
  double reconstruction = 15.0;  // lambda_f
  double gan = 1.0;
  double feature_matching = 2.0;
  double codebook = 1.0;         // lambda_c
  double commitment = 0.25;      // lambda_w
  double ams = 25.0;
  double semantic = 45.0;
};

struct LossComponents {
  double reconstruction = 0.0;
  double gan = 0.0;
  double feature_matching = 0.0;
  double codebook = 0.0;
  double commitment = 0.0;
  double ams = 0.0;
  double semantic = 0.0;
};

/// Weighted training objective, summed in three groups:
/// reconstruction + perceptual, codebook + commitment, speaker disentanglement.
inline double total_loss(const LossComponents& c, const LossWeights& w = {}) {
  for (double x : {c.reconstruction, c.gan, c.feature_matching, c.codebook, c.commitment, c.ams,
                   c.semantic})
    if (!std::isfinite(x)) throw ComputationError("total_loss: non-finite component");
  const double perceptual = w.reconstruction * c.reconstruction + w.gan * c.gan +
                            w.feature_matching * c.feature_matching;
  const double quantizer = w.codebook * c.codebook + w.commitment * c.commitment;
  const double speaker = w.ams * c.ams + w.semantic * c.semantic;
  return perceptual + quantizer + speaker;
}

}  // namespace anoncodec::losses

#endif  // ANONCODEC_LOSSES_TOTAL_HPP_
