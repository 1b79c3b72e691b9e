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

// Toolkit configuration file.
//
//   {
//     "version": 1,
//     "rvq":     {"codebook_sizes": [256, 64, 64], "latent_dim": 16, "code_dim": 4,
//                 "dropout_prob": 0.5},
//     "ldp":     {"epsilon": 15, "clip_c": 1, "estimate_clip": true,
//                 "enabled_in_inference": false},
//     "weights": {"reconstruction": 15, "gan": 1, "feature_matching": 2, "codebook": 1,
//                 "commitment": 0.25, "ams": 25, "semantic": 45},
//     "corpus":  {"n_speakers": 200, ..., "seed": 1},
//     "train":   {"learning_rate": 0.01, "steps": 500, "batch_size": 8},
//     "eval":    {"L": 100, "seed": 1}
//   }
//
// Every section and key is optional; unknown keys are rejected.

#ifndef ANONCODEC_CLI_CONFIG_HPP_
#define ANONCODEC_CLI_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "anoncodec/core/error.hpp"
#include "anoncodec/corpus/synthetic.hpp"
#include "anoncodec/disentangle/ldp.hpp"
#include "anoncodec/losses/total.hpp"
#include "anoncodec/quantizer/training.hpp"
#include "anoncodec/quantizer/types.hpp"

namespace anoncodec::cli {

inline constexpr int kConfigVersion = 1;

struct EvalConfig {
  std::size_t tests = 100;
  std::optional<std::uint64_t> seed;
};

struct ToolkitConfig {
  quantizer::RVQConfig rvq;
  disentangle::LdpConfig ldp;
  bool estimate_clip = true;
  losses::LossWeights weights;
  corpus::SyntheticCorpusConfig corpus;
  std::optional<std::uint64_t> corpus_seed;
  quantizer::TrainHyper train;
  EvalConfig eval;

  void validate() const {
    rvq.validate();
    ldp.validate();
    corpus.validate();
    if (eval.tests < 1) throw ConfigError("eval.L must be >= 1");
    if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(train.learning_rate >= 0.0)) throw ConfigError("train.learning_rate must be >= 0");
    if (!(train.final_lr_fraction >= 0.0 && train.final_lr_fraction <= 1.0))
      throw ConfigError("train.final_lr_fraction must be in [0, 1]");
  }
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, std::string_view section,
                       std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError("'" + std::string(section) + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in '" + std::string(section) + "'");
  }
}

template <typename T>
void read(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace detail

inline ToolkitConfig parse_config(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::read;
  ToolkitConfig c;
  try {
    check_keys(j, "config", {"version", "rvq", "ldp", "weights", "corpus", "train", "eval"});
    if (!j.contains("version")) throw ConfigError("config is missing 'version'");
    if (j.at("version").get<int>() != kConfigVersion)
      throw ConfigError("unsupported config version " + j.at("version").dump());
    if (j.contains("rvq")) {
      const auto& s = j.at("rvq");
      check_keys(s, "rvq", {"codebook_sizes", "latent_dim", "code_dim", "dropout_prob"});
      read(s, "codebook_sizes", c.rvq.codebook_sizes);
      read(s, "latent_dim", c.rvq.latent_dim);
      read(s, "code_dim", c.rvq.code_dim);
      read(s, "dropout_prob", c.rvq.dropout_prob);
    }
    if (j.contains("ldp")) {
      const auto& s = j.at("ldp");
      check_keys(s, "ldp", {"epsilon", "clip_c", "estimate_clip", "enabled_in_inference"});
      read(s, "epsilon", c.ldp.epsilon);
      read(s, "clip_c", c.ldp.clip_c);
      read(s, "estimate_clip", c.estimate_clip);
      read(s, "enabled_in_inference", c.ldp.enabled_in_inference);
    }
    if (j.contains("weights")) {
      const auto& s = j.at("weights");
      check_keys(s, "weights",
                 {"reconstruction", "gan", "feature_matching", "codebook", "commitment", "ams", "semantic"});
      read(s, "reconstruction", c.weights.reconstruction);
      read(s, "gan", c.weights.gan);
      read(s, "feature_matching", c.weights.feature_matching);
      read(s, "codebook", c.weights.codebook);
      read(s, "commitment", c.weights.commitment);
      read(s, "ams", c.weights.ams);
      read(s, "semantic", c.weights.semantic);
    }
    if (j.contains("corpus")) {
      const auto& s = j.at("corpus");
      check_keys(s, "corpus",
                 {"n_speakers", "utterances_per_speaker", "frames_per_utterance", "latent_dim",
                  "n_prototypes", "speaker_spread", "content_spread", "noise_std", "seed"});
      read(s, "n_speakers", c.corpus.n_speakers);
      read(s, "utterances_per_speaker", c.corpus.utterances_per_speaker);
      read(s, "frames_per_utterance", c.corpus.frames_per_utterance);
      read(s, "latent_dim", c.corpus.latent_dim);
      read(s, "n_prototypes", c.corpus.n_prototypes);
      read(s, "speaker_spread", c.corpus.speaker_spread);
      read(s, "content_spread", c.corpus.content_spread);
      read(s, "noise_std", c.corpus.noise_std);
      if (s.contains("seed")) c.corpus_seed = s.at("seed").get<std::uint64_t>();
    }
    if (j.contains("train")) {
      const auto& s = j.at("train");
      check_keys(s, "train", {"learning_rate", "steps", "batch_size", "codebook_weight", "commitment_weight",
                                   "final_lr_fraction", "dead_code_patience"});
      read(s, "learning_rate", c.train.learning_rate);
      read(s, "steps", c.train.steps);
      read(s, "batch_size", c.train.batch_size);
      c.train.codebook_weight = c.weights.codebook;
      c.train.commitment_weight = c.weights.commitment;
      read(s, "codebook_weight", c.train.codebook_weight);
      read(s, "commitment_weight", c.train.commitment_weight);
      read(s, "final_lr_fraction", c.train.final_lr_fraction);
      read(s, "dead_code_patience", c.train.dead_code_patience);
    }
    if (j.contains("eval")) {
      const auto& s = j.at("eval");
      check_keys(s, "eval", {"L", "seed"});
      read(s, "L", c.eval.tests);
      if (s.contains("seed")) c.eval.seed = s.at("seed").get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ToolkitConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

inline nlohmann::json config_to_json(const ToolkitConfig& c) {
  nlohmann::json corpus = {
      {"n_speakers", c.corpus.n_speakers},
      {"utterances_per_speaker", c.corpus.utterances_per_speaker},
      {"frames_per_utterance", c.corpus.frames_per_utterance},
      {"latent_dim", c.corpus.latent_dim},
      {"n_prototypes", c.corpus.n_prototypes},
      {"speaker_spread", c.corpus.speaker_spread},
      {"content_spread", c.corpus.content_spread},
      {"noise_std", c.corpus.noise_std},
  };
  if (c.corpus_seed) corpus["seed"] = *c.corpus_seed;
  nlohmann::json eval = {{"L", c.eval.tests}};
  if (c.eval.seed) eval["seed"] = *c.eval.seed;
  return {
      {"version", kConfigVersion},
      {"rvq",
       {{"codebook_sizes", c.rvq.codebook_sizes},
        {"latent_dim", c.rvq.latent_dim},
        {"code_dim", c.rvq.code_dim},
        {"dropout_prob", c.rvq.dropout_prob}}},
      {"ldp",
       {{"epsilon", c.ldp.epsilon},
        {"clip_c", c.ldp.clip_c},
        {"estimate_clip", c.estimate_clip},
        {"enabled_in_inference", c.ldp.enabled_in_inference}}},
      {"weights",
       {{"reconstruction", c.weights.reconstruction},
        {"gan", c.weights.gan},
        {"feature_matching", c.weights.feature_matching},
        {"codebook", c.weights.codebook},
        {"commitment", c.weights.commitment},
        {"ams", c.weights.ams},
        {"semantic", c.weights.semantic}}},
      {"corpus", corpus},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"steps", c.train.steps},
        {"batch_size", c.train.batch_size},
        {"codebook_weight", c.train.codebook_weight},
        {"commitment_weight", c.train.commitment_weight},
        {"final_lr_fraction", c.train.final_lr_fraction},
        {"dead_code_patience", c.train.dead_code_patience}}},
      {"eval", eval},
  };
}

}  // namespace anoncodec::cli

#endif  // ANONCODEC_CLI_CONFIG_HPP_
