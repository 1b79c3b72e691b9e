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

// A/B/X trial assembly.
//
// X is an anonymized utterance of speaker s, A an original recording of a
// different utterance of s, and B an original recording of a speaker drawn
// from s's similar-speaker pool. The correct answer is always A; clients
// are expected to present A and B without revealing that.

#ifndef ANONCODEC_ABX_TRIALS_HPP_
#define ANONCODEC_ABX_TRIALS_HPP_

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/rng.hpp"
#include "anoncodec/privacy/rank.hpp"

namespace anoncodec::abx {

enum class MediaKind { kOriginal, kAnonymized };

struct MediaEntry {
  std::string media_id;  // opaque, assigned on load
  std::string speaker_id;
  MediaKind kind = MediaKind::kOriginal;
  std::filesystem::path path;
  std::string utterance_id;  // defaults to the file stem
};

struct Manifest {
  std::vector<MediaEntry> entries;

  const MediaEntry* find(const std::string& media_id) const {
    for (const auto& e : entries)
      if (e.media_id == media_id) return &e;
    return nullptr;
  }
};

inline std::string opaque_id(std::uint64_t salt, std::size_t index) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(anoncodec::detail::splitmix64(salt + index)));
  return buf;
}

/// Parses a JSON list of {speaker_id, kind, media_path[, utterance_id]}.
/// Relative media paths resolve against `base_dir`.
inline Manifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir = {},
                               std::uint64_t salt = 0) {
  if (!j.is_array()) throw ConfigError("manifest must be a JSON list");
  Manifest m;
  try {
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto& o = j[i];
      for (const auto& [key, _] : o.items())
        if (key != "speaker_id" && key != "kind" && key != "media_path" && key != "utterance_id")
          throw ConfigError("manifest entry " + std::to_string(i) + ": unknown key '" + key + "'");
      MediaEntry e;
      e.media_id = opaque_id(salt, i);
      e.speaker_id = o.at("speaker_id").get<std::string>();
      const auto kind = o.at("kind").get<std::string>();
      if (kind == "original")
        e.kind = MediaKind::kOriginal;
      else if (kind == "anonymized")
        e.kind = MediaKind::kAnonymized;
      else
        throw ConfigError("manifest entry " + std::to_string(i) + ": kind must be original or anonymized");
      e.path = o.at("media_path").get<std::string>();
      if (e.path.is_relative() && !base_dir.empty()) e.path = base_dir / e.path;
      e.utterance_id = o.contains("utterance_id") ? o.at("utterance_id").get<std::string>()
                                                  : e.path.stem().string();
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path, std::uint64_t salt = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_manifest(j, path.parent_path(), salt);
}

struct AbxTrial {
  std::string trial_id;
  std::string x_media;
  std::string a_media;
  std::string b_media;
  std::string speaker_id;    // never sent to raters
  std::string b_speaker_id;  // never sent to raters
  char correct_answer = 'A';
};

struct TrialSet {
  std::vector<AbxTrial> trials;
  std::vector<std::string> warnings;
};

/// Picks `n_trials` distinct speakers at random among those that have an
/// anonymized utterance, an original recording of another utterance and a
/// non-empty pool of speakers with original recordings.
inline TrialSet assemble_trials(const Manifest& manifest, const privacy::PrivacyReport& report,
                                std::size_t n_trials, std::uint64_t seed) {
  if (report.mode != privacy::PrivacyMode::kSinglingOut)
    throw ConfigError("ABX trials need a singling-out report");
  if (n_trials < 1) throw RangeError("n_trials must be >= 1");
  std::map<std::string, std::vector<const MediaEntry*>> originals, anonymized;
  for (const auto& e : manifest.entries)
    (e.kind == MediaKind::kOriginal ? originals : anonymized)[e.speaker_id].push_back(&e);

  TrialSet out;
  struct Candidate {
    std::string speaker;
    std::vector<std::string> pool;
  };
  std::vector<Candidate> eligible;
  for (const auto& spk : report.per_speaker) {
    const auto& s = spk.id;
    if (!anonymized.count(s) || !originals.count(s)) continue;
    bool has_pair = false;
    for (const auto* x : anonymized[s])
      for (const auto* a : originals[s]) has_pair = has_pair || a->utterance_id != x->utterance_id;
    if (!has_pair) continue;
    std::vector<std::string> pool;
    for (auto& p : privacy::similar_speaker_pool(report, s))
      if (originals.count(p)) pool.push_back(std::move(p));
    if (pool.empty()) {
      out.warnings.push_back("speaker '" + s + "' skipped: empty similar-speaker pool");
      continue;
    }
    eligible.push_back({s, std::move(pool)});
  }
  if (eligible.size() < n_trials)
    throw RangeError("only " + std::to_string(eligible.size()) + " eligible speakers for " +
                     std::to_string(n_trials) + " trials");

  const Rng root(seed);
  Rng pick = root.substream("abx-speakers");
  for (std::size_t i = 0; i < n_trials; ++i) {
    const std::size_t j = i + pick.below(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  for (std::size_t i = 0; i < n_trials; ++i) {
    const Candidate& c = eligible[i];
    Rng r = root.substream("abx-trial", i);
    auto others = [&](const MediaEntry* x) {
      std::vector<const MediaEntry*> as;
      for (const auto* a : originals[c.speaker])
        if (a->utterance_id != x->utterance_id) as.push_back(a);
      return as;
    };
    std::vector<const MediaEntry*> xs;
    for (const auto* x : anonymized[c.speaker])
      if (!others(x).empty()) xs.push_back(x);
    const MediaEntry* x = xs[r.below(xs.size())];
    const auto as = others(x);
    const MediaEntry* a = as[r.below(as.size())];
    const std::string& b_speaker = c.pool[r.below(c.pool.size())];
    const auto& bs = originals[b_speaker];
    const MediaEntry* b = bs[r.below(bs.size())];
    char id[24];
    std::snprintf(id, sizeof id, "t%03zu", i + 1);
    out.trials.push_back({id, x->media_id, a->media_id, b->media_id, c.speaker, b_speaker, 'A'});
  }
  return out;
}

/// The rater-facing view of a trial: media links only.
inline nlohmann::json public_view(const AbxTrial& t) {
  return {{"trial_id", t.trial_id},
          {"x", "/media/" + t.x_media},
          {"a", "/media/" + t.a_media},
          {"b", "/media/" + t.b_media}};
}

}  // namespace anoncodec::abx

#endif  // ANONCODEC_ABX_TRIALS_HPP_
