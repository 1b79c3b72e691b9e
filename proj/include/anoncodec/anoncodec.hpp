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

#ifndef ANONCODEC_ANONCODEC_HPP_
#define ANONCODEC_ANONCODEC_HPP_

#include "anoncodec/abx/service.hpp"
#include "anoncodec/abx/trials.hpp"
#include "anoncodec/cli/config.hpp"
#include "anoncodec/core/binary_io.hpp"
#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"
#include "anoncodec/core/rng.hpp"
#include "anoncodec/corpus/embedding_io.hpp"
#include "anoncodec/corpus/synthetic.hpp"
#include "anoncodec/disentangle/ldp.hpp"
#include "anoncodec/disentangle/semantic.hpp"
#include "anoncodec/disentangle/speaker.hpp"
#include "anoncodec/losses/adversarial.hpp"
#include "anoncodec/losses/mel.hpp"
#include "anoncodec/losses/total.hpp"
#include "anoncodec/losses/wav.hpp"
#include "anoncodec/pipeline/anonymize.hpp"
#include "anoncodec/privacy/rank.hpp"
#include "anoncodec/privacy/stats.hpp"
#include "anoncodec/quantizer/bitrate.hpp"
#include "anoncodec/quantizer/bundle.hpp"
#include "anoncodec/quantizer/rvq.hpp"
#include "anoncodec/quantizer/training.hpp"
#include "anoncodec/quantizer/types.hpp"

#endif  // ANONCODEC_ANONCODEC_HPP_
