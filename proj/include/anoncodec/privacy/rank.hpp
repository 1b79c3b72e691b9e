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

// k-anonymity rank tests.
//
// For speaker s and test l, one evaluation utterance x of s is compared by
// cosine similarity against one randomly drawn reference utterance of every
// speaker. The rank is the position of s's own reference in the descending
// similarity list; the mean rank of s over L tests is its k-anonymity
// level. Linkability compares anonymized evaluation data with anonymized
// references; singling out compares original evaluation data with
// anonymized references.

#ifndef ANONCODEC_PRIVACY_RANK_HPP_
#define ANONCODEC_PRIVACY_RANK_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"
#include "anoncodec/core/rng.hpp"
#include "anoncodec/privacy/stats.hpp"

namespace anoncodec::privacy {

enum class Partition { kReference, kEvaluation };

struct SpeakerEmbeddings {
  std::string id;
  std::vector<Vector> utterances;
};

struct EmbeddingDataset {
  std::vector<SpeakerEmbeddings> speakers;
  Partition partition = Partition::kEvaluation;

  std::size_t dim() const {
    for (const auto& s : speakers)
      if (!s.utterances.empty()) return s.utterances.front().size();
    return 0;
  }

  void validate() const {
    std::map<std::string, int> seen;
    const std::size_t d = dim();
    for (const auto& s : speakers) {
      if (s.utterances.empty()) throw RangeError("speaker '" + s.id + "' has no utterances");
      if (++seen[s.id] > 1) throw RangeError("duplicate speaker id '" + s.id + "'");
      for (const auto& u : s.utterances)
        if (u.size() != d) throw RangeError("speaker '" + s.id + "' has an embedding of the wrong dimension");
    }
  }
};

/// Ties between the same-speaker similarity and others.
enum class TieMode {
  kSpeakerIndex,  // tied speakers with a lower index rank ahead (integer ranks)
  kAverage,       // each tie counts one half
};

struct RankMatrix {
  std::vector<std::vector<double>> ranks;  // [test][speaker]
  std::vector<double> mean_ranks;          // per speaker
  std::vector<std::string> speaker_ids;
  std::size_t tests = 0;
  std::size_t speakers = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<std::vector<Vector>> normalized(const EmbeddingDataset& ds,
                                                   const std::vector<std::size_t>& order) {
  std::vector<std::vector<Vector>> out;
  out.reserve(order.size());
  for (std::size_t idx : order) {
    std::vector<Vector> utts;
    for (const Vector& u : ds.speakers[idx].utterances) {
      const double n = norm_l2(u);
      if (n == 0.0)
        throw DegenerateInputError("zero embedding for speaker '" + ds.speakers[idx].id + "'");
      Vector v(u);
      for (double& x : v) x /= n;
      utts.push_back(std::move(v));
    }
    out.push_back(std::move(utts));
  }
  return out;
}

}  // namespace detail

/// Rank test of `eval_ds` against `ref_ds`. Speakers are matched by id and
/// reported in the evaluation dataset's order. Each speaker draws from its
/// own substream, so the result does not depend on `threads`.
inline RankMatrix rank_test(const EmbeddingDataset& eval_ds, const EmbeddingDataset& ref_ds,
                            std::size_t tests, std::uint64_t seed,
                            TieMode ties = TieMode::kSpeakerIndex, std::size_t threads = 1) {
  if (tests < 1) throw RangeError("rank_test: L must be >= 1");
  eval_ds.validate();
  ref_ds.validate();
  const std::size_t n = eval_ds.speakers.size();
  if (n == 0) throw RangeError("rank_test: no speakers");
  if (ref_ds.speakers.size() != n)
    throw RangeError("rank_test: partitions cover different speaker sets (" + std::to_string(n) +
                     " vs " + std::to_string(ref_ds.speakers.size()) + " speakers)");
  if (eval_ds.dim() != ref_ds.dim()) throw RangeError("rank_test: embedding dimension mismatch");
  std::map<std::string, std::size_t> ref_index;
  for (std::size_t i = 0; i < n; ++i) ref_index[ref_ds.speakers[i].id] = i;
  std::vector<std::size_t> eval_order(n), ref_order(n);
  for (std::size_t i = 0; i < n; ++i) {
    eval_order[i] = i;
    auto it = ref_index.find(eval_ds.speakers[i].id);
    if (it == ref_index.end())
      throw RangeError("rank_test: speaker '" + eval_ds.speakers[i].id +
                       "' missing from the reference partition");
    ref_order[i] = it->second;
  }
  const auto x_emb = detail::normalized(eval_ds, eval_order);
  const auto y_emb = detail::normalized(ref_ds, ref_order);

  RankMatrix out;
  out.tests = tests;
  out.speakers = n;
  out.seed = seed;
  out.ranks.assign(tests, std::vector<double>(n, 0.0));
  out.mean_ranks.assign(n, 0.0);
  for (const auto& s : eval_ds.speakers) out.speaker_ids.push_back(s.id);

  const Rng root(seed);
  auto run_speaker = [&](std::size_t s) {
    Rng r = root.substream("rank-test", s);
    std::vector<double> sims(n);
    double total = 0.0;
    for (std::size_t l = 0; l < tests; ++l) {
      const Vector& x = x_emb[s][r.below(x_emb[s].size())];
      for (std::size_t m = 0; m < n; ++m) sims[m] = dot(x, y_emb[m][r.below(y_emb[m].size())]);
      const double own = sims[s];
      double rank = 1.0;
      for (std::size_t m = 0; m < n; ++m) {
        if (m == s) continue;
        if (sims[m] > own) {
          rank += 1.0;
        } else if (sims[m] == own) {
          if (ties == TieMode::kAverage)
            rank += 0.5;
          else if (m < s)
            rank += 1.0;
        }
      }
      out.ranks[l][s] = rank;
      total += rank;
    }
    out.mean_ranks[s] = total / static_cast<double>(tests);
  };

  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t s = 0; s < n; ++s) run_speaker(s);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t s = w; s < n; s += threads) run_speaker(s);
      });
  }
  return out;
}

enum class PrivacyMode { kLinkability, kSinglingOut };

inline std::string to_string(PrivacyMode m) {
  return m == PrivacyMode::kLinkability ? "linkability" : "singling_out";
}

inline PrivacyMode parse_privacy_mode(const std::string& s) {
  if (s == "linkability") return PrivacyMode::kLinkability;
  if (s == "singling_out" || s == "singling-out") return PrivacyMode::kSinglingOut;
  throw ConfigError("unknown privacy mode '" + s + "'");
}

struct SpeakerRank {
  std::string id;
  double mean_rank = 0.0;
};

struct PrivacyReport {
  PrivacyMode mode = PrivacyMode::kLinkability;
  std::size_t speakers = 0;
  std::size_t tests = 0;
  std::uint64_t seed = 0;
  double p50 = 0.0;
  double p1 = 0.0;  // the k-anonymity factor
  RandomBaseline baseline;
  std::vector<SpeakerRank> per_speaker;
};

inline PrivacyReport make_report(PrivacyMode mode, const RankMatrix& ranks) {
  PrivacyReport r;
  r.mode = mode;
  r.speakers = ranks.speakers;
  r.tests = ranks.tests;
  r.seed = ranks.seed;
  const Percentiles p = percentiles(ranks.mean_ranks);
  r.p50 = p.p50;
  r.p1 = p.p1;
  r.baseline = random_baseline(ranks.speakers, ranks.tests);
  for (std::size_t s = 0; s < ranks.speakers; ++s)
    r.per_speaker.push_back({ranks.speaker_ids[s], ranks.mean_ranks[s]});
  return r;
}

/// Both partitions anonymized.
inline PrivacyReport linkability(const EmbeddingDataset& anon_eval, const EmbeddingDataset& anon_ref,
                                 std::size_t tests, std::uint64_t seed,
                                 TieMode ties = TieMode::kSpeakerIndex, std::size_t threads = 1) {
  return make_report(PrivacyMode::kLinkability,
                     rank_test(anon_eval, anon_ref, tests, seed, ties, threads));
}

/// Original evaluation recordings against anonymized references.
inline PrivacyReport singling_out(const EmbeddingDataset& orig_eval, const EmbeddingDataset& anon_ref,
                                  std::size_t tests, std::uint64_t seed,
                                  TieMode ties = TieMode::kSpeakerIndex, std::size_t threads = 1) {
  return make_report(PrivacyMode::kSinglingOut,
                     rank_test(orig_eval, anon_ref, tests, seed, ties, threads));
}

/// Speakers ranked strictly worse (higher mean rank) than `speaker_id` in a
/// singling-out report: the candidates for the B sample of an ABX trial.
inline std::vector<std::string> similar_speaker_pool(const PrivacyReport& report,
                                                     const std::string& speaker_id) {
  if (report.mode != PrivacyMode::kSinglingOut)
    throw ConfigError("similar_speaker_pool needs a singling-out report");
  const auto it = std::find_if(report.per_speaker.begin(), report.per_speaker.end(),
                               [&](const SpeakerRank& s) { return s.id == speaker_id; });
  if (it == report.per_speaker.end()) throw RangeError("unknown speaker '" + speaker_id + "'");
  std::vector<std::string> pool;
  for (const auto& s : report.per_speaker)
    if (s.mean_rank > it->mean_rank) pool.push_back(s.id);
  return pool;
}

inline nlohmann::json to_json(const PrivacyReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : r.per_speaker) per.push_back({{"id", s.id}, {"mean_rank", s.mean_rank}});
  return {
      {"mode", to_string(r.mode)},
      {"N", r.speakers},
      {"L", r.tests},
      {"seed", r.seed},
      {"p50", r.p50},
      {"p1", r.p1},
      {"baseline",
       {{"mu", r.baseline.mu}, {"var", r.baseline.var}, {"p50", r.baseline.p50}, {"p1", r.baseline.p1}}},
      {"per_speaker", per},
  };
}

inline PrivacyReport report_from_json(const nlohmann::json& j) {
  try {
    PrivacyReport r;
    r.mode = parse_privacy_mode(j.at("mode").get<std::string>());
    r.speakers = j.at("N").get<std::size_t>();
    r.tests = j.at("L").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.p50 = j.at("p50").get<double>();
    r.p1 = j.at("p1").get<double>();
    const auto& b = j.at("baseline");
    r.baseline = {b.at("mu").get<double>(), b.at("var").get<double>(), b.at("p50").get<double>(),
                  b.at("p1").get<double>()};
    for (const auto& s : j.at("per_speaker"))
      r.per_speaker.push_back({s.at("id").get<std::string>(), s.at("mean_rank").get<double>()});
    if (r.per_speaker.size() != r.speakers)
      throw ConfigError("privacy report: per_speaker has " + std::to_string(r.per_speaker.size()) +
                        " entries but N=" + std::to_string(r.speakers));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed privacy report: ") + e.what());
  }
}

}  // namespace anoncodec::privacy

#endif  // ANONCODEC_PRIVACY_RANK_HPP_
