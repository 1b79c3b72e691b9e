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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "anoncodec/abx/service.hpp"
#include "anoncodec/abx/trials.hpp"
#include "anoncodec/privacy/stats.hpp"
#include "httplib.h"
#include "test_support.hpp"

namespace anoncodec::abx {
namespace {

using nlohmann::json;

// n speakers, each with two original and two anonymized utterances.
json manifest_json(std::size_t speakers) {
  json m = json::array();
  for (std::size_t s = 0; s < speakers; ++s) {
    const std::string id = "spk" + std::to_string(s);
    for (int u = 0; u < 2; ++u) {
      m.push_back({{"speaker_id", id}, {"kind", "original"}, {"media_path", id + "_u" + std::to_string(u) + ".wav"}});
      m.push_back({{"speaker_id", id},
                   {"kind", "anonymized"},
                   {"media_path", "anon/" + id + "_u" + std::to_string(u) + ".wav"}});
    }
  }
  return m;
}

// Speaker s has mean rank s + 1, so its pool is every later speaker.
privacy::PrivacyReport ladder_report(std::size_t speakers) {
  privacy::PrivacyReport r;
  r.mode = privacy::PrivacyMode::kSinglingOut;
  r.speakers = speakers;
  r.tests = 10;
  for (std::size_t s = 0; s < speakers; ++s) r.per_speaker.push_back({"spk" + std::to_string(s), s + 1.0});
  return r;
}

TEST(Manifest, ParsesAndAssignsOpaqueIds) {
  const auto m = parse_manifest(manifest_json(2), "/data", 7);
  ASSERT_EQ(m.entries.size(), 8u);
  EXPECT_EQ(m.entries[0].path, std::filesystem::path("/data/spk0_u0.wav"));
  EXPECT_EQ(m.entries[1].kind, MediaKind::kAnonymized);
  EXPECT_EQ(m.entries[1].utterance_id, "spk0_u0");
  std::set<std::string> ids;
  for (const auto& e : m.entries) {
    EXPECT_EQ(e.media_id.size(), 16u);
    EXPECT_EQ(e.media_id.find("spk"), std::string::npos);
    ids.insert(e.media_id);
  }
  EXPECT_EQ(ids.size(), 8u);
  EXPECT_EQ(m.find(m.entries[3].media_id), &m.entries[3]);
  EXPECT_EQ(m.find("nope"), nullptr);
  EXPECT_NE(parse_manifest(manifest_json(1), "", 8).entries[0].media_id, m.entries[0].media_id);
}

TEST(Manifest, RejectsMalformedEntries) {
  EXPECT_THROW(parse_manifest(json::object()), ConfigError);
  EXPECT_THROW(parse_manifest(json::array({{{"speaker_id", "a"}, {"kind", "remix"}, {"media_path", "x"}}})), ConfigError);
  EXPECT_THROW(parse_manifest(json::array({{{"speaker_id", "a"}, {"kind", "original"}}})), ConfigError);
  EXPECT_THROW(parse_manifest(json::array({{{"speaker_id", "a"}, {"kind", "original"}, {"media_path", "x"}, {"gain", 2}}})),
               ConfigError);
  EXPECT_THROW(load_manifest("/nonexistent/manifest.json"), IoError);
}

TEST(Trials, TwentySpeakersPoolMembershipScan) {
  const auto manifest = parse_manifest(manifest_json(30));
  const auto report = ladder_report(30);
  const auto set = assemble_trials(manifest, report, 20, 11);
  ASSERT_EQ(set.trials.size(), 20u);
  std::set<std::string> speakers;
  std::map<std::string, const MediaEntry*> by_id;
  for (const auto& e : manifest.entries) by_id[e.media_id] = &e;
  for (const auto& t : set.trials) {
    speakers.insert(t.speaker_id);
    const auto pool = privacy::similar_speaker_pool(report, t.speaker_id);
    EXPECT_NE(std::find(pool.begin(), pool.end(), t.b_speaker_id), pool.end()) << t.trial_id;
    const MediaEntry* x = by_id.at(t.x_media);
    const MediaEntry* a = by_id.at(t.a_media);
    const MediaEntry* b = by_id.at(t.b_media);
    EXPECT_EQ(x->kind, MediaKind::kAnonymized);
    EXPECT_EQ(a->kind, MediaKind::kOriginal);
    EXPECT_EQ(b->kind, MediaKind::kOriginal);
    EXPECT_EQ(x->speaker_id, t.speaker_id);
    EXPECT_EQ(a->speaker_id, t.speaker_id);
    EXPECT_EQ(b->speaker_id, t.b_speaker_id);
    EXPECT_NE(a->utterance_id, x->utterance_id);
    EXPECT_EQ(t.correct_answer, 'A');
  }
  EXPECT_EQ(speakers.size(), 20u);
  EXPECT_EQ(set.trials.front().trial_id, "t001");
  EXPECT_EQ(set.trials.back().trial_id, "t020");
  // The top-ranked speaker has nobody above it.
  ASSERT_EQ(set.warnings.size(), 1u);
  EXPECT_NE(set.warnings[0].find("spk29"), std::string::npos);
}

TEST(Trials, SeededAssemblyIsDeterministic) {
  const auto manifest = parse_manifest(manifest_json(12));
  const auto report = ladder_report(12);
  const auto a = assemble_trials(manifest, report, 8, 5);
  const auto b = assemble_trials(manifest, report, 8, 5);
  const auto c = assemble_trials(manifest, report, 8, 6);
  auto key = [](const TrialSet& s) {
    std::vector<std::string> k;
    for (const auto& t : s.trials) k.push_back(t.x_media + t.a_media + t.b_media);
    return k;
  };
  EXPECT_EQ(key(a), key(b));
  EXPECT_NE(key(a), key(c));
}

TEST(Trials, SingleCandidatePool) {
  const auto manifest = parse_manifest(manifest_json(2));
  const auto set = assemble_trials(manifest, ladder_report(2), 1, 3);
  ASSERT_EQ(set.trials.size(), 1u);
  EXPECT_EQ(set.trials[0].speaker_id, "spk0");
  EXPECT_EQ(set.trials[0].b_speaker_id, "spk1");
}

TEST(Trials, Errors) {
  const auto manifest = parse_manifest(manifest_json(5));
  EXPECT_THROW(assemble_trials(manifest, ladder_report(5), 5, 1), RangeError);
  auto link = ladder_report(5);
  link.mode = privacy::PrivacyMode::kLinkability;
  EXPECT_THROW(assemble_trials(manifest, link, 2, 1), ConfigError);
  // One utterance per speaker leaves no A distinct from X.
  json single = json::array();
  for (int s = 0; s < 3; ++s) {
    const std::string id = "spk" + std::to_string(s);
    single.push_back({{"speaker_id", id}, {"kind", "original"}, {"media_path", id + ".wav"}});
    single.push_back({{"speaker_id", id}, {"kind", "anonymized"}, {"media_path", "anon/" + id + ".wav"}});
  }
  EXPECT_THROW(assemble_trials(parse_manifest(single), ladder_report(3), 1, 1), RangeError);
}

TEST(Trials, PublicViewHidesIdentity) {
  const auto set = assemble_trials(parse_manifest(manifest_json(4)), ladder_report(4), 3, 2);
  for (const auto& t : set.trials) {
    const json v = public_view(t);
    EXPECT_EQ(v.size(), 4u);
    const std::string s = v.dump();
    EXPECT_EQ(s.find("spk"), std::string::npos);
    EXPECT_EQ(s.find("correct"), std::string::npos);
    EXPECT_EQ(v.at("x"), "/media/" + t.x_media);
  }
}

TEST(Results, WilsonOracleAndNoData) {
  EXPECT_EQ(results_json({0, 0}), (json{{"n", 0}, {"k_correct", 0}, {"status", "no data"}}));
  const json r = results_json({100, 51});
  const double z = 1.959964, n = 100, p = 0.51;
  const double denom = 1 + z * z / n;
  EXPECT_DOUBLE_EQ(r.at("p_hat").get<double>(), 0.51);
  EXPECT_NEAR(r.at("wilson_center").get<double>(), (p + z * z / (2 * n)) / denom, 1e-15);
  EXPECT_NEAR(r.at("wilson_half_width").get<double>(), z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom,
              1e-15);
}

TrialSet synthetic_trials(std::size_t n) {
  TrialSet s;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "t%03zu", i + 1);
    s.trials.push_back({id, "x", "a", "b", "spk", "other", 'A'});
  }
  return s;
}

TEST(State, HundredResponsesAndReplay) {
  testing::TempDir dir("abx-state");
  const auto log = dir / "log.jsonl";
  {
    AbxState st(synthetic_trials(100), log);
    const auto session = st.mint_session();
    for (int i = 0; i < 100; ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "t%03d", i + 1);
      ASSERT_EQ(st.submit(session, id, i < 51 ? "A" : "B"), SubmitStatus::kRecorded);
    }
    EXPECT_EQ(st.results().n, 100u);
    EXPECT_EQ(st.results().k_correct, 51u);
    EXPECT_EQ(st.submit(session, "t001", "B"), SubmitStatus::kDuplicate);
    EXPECT_EQ(st.submit(session, "t999", "A"), SubmitStatus::kUnknownTrial);
    EXPECT_EQ(st.submit("stranger", "t001", "A"), SubmitStatus::kUnknownSession);
    EXPECT_EQ(st.submit(session, "t001", "C"), SubmitStatus::kMalformed);
    EXPECT_EQ(st.results().n, 100u);
  }
  AbxState again(synthetic_trials(100), log);
  EXPECT_EQ(again.results().n, 100u);
  EXPECT_EQ(again.results().k_correct, 51u);
}

TEST(State, TornTailIsDropped) {
  testing::TempDir dir("abx-torn");
  const auto log = dir / "log.jsonl";
  {
    AbxState st(synthetic_trials(3), log);
    const auto s = st.mint_session();
    ASSERT_EQ(st.submit(s, "t001", "A"), SubmitStatus::kRecorded);
  }
  const auto good_size = std::filesystem::file_size(log);
  std::ofstream(log, std::ios::app) << R"({"session":"x","trial_id":"t0)";
  {
    AbxState st(synthetic_trials(3), log);
    EXPECT_EQ(st.results().n, 1u);
    EXPECT_EQ(std::filesystem::file_size(log), good_size);
  }
  std::ofstream(log, std::ios::app) << R"({"session":"x","trial_id":"t777","choice":"A"})" << "\n";
  EXPECT_THROW(AbxState(synthetic_trials(3), log), ConfigError);
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    for (std::size_t s = 0; s < 6; ++s)
      for (int u = 0; u < 2; ++u) {
        std::ofstream(dir_ / ("spk" + std::to_string(s) + "_u" + std::to_string(u) + ".wav")) << "RIFF-orig-" << s;
        std::filesystem::create_directories(dir_ / "anon");
        std::ofstream(dir_ / "anon" / ("spk" + std::to_string(s) + "_u" + std::to_string(u) + ".wav")) << "RIFF-anon";
      }
    std::filesystem::create_directories(dir_ / "ui");
    std::ofstream(dir_ / "ui" / "index.html") << "<html>abx</html>";
    manifest_ = parse_manifest(manifest_json(6), dir_.path(), 99);
    trials_ = assemble_trials(manifest_, ladder_report(6), 3, 4);
    start();
  }

  void start() {
    ServiceOptions opts;
    opts.results_path = dir_ / "responses.jsonl";
    opts.static_dir = dir_ / "ui";
    service_ = std::make_unique<AbxService>(manifest_, trials_, opts);
    port_ = service_->start("127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void restart() {
    client_.reset();
    service_->stop();
    service_.reset();
    start();
  }

  httplib::Result post(const json& body) {
    return client_->Post("/api/response", body.dump(), "application/json");
  }

  testing::TempDir dir_{"abx-svc"};
  Manifest manifest_;
  TrialSet trials_;
  std::unique_ptr<AbxService> service_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

void expect_no_identity(const std::string& body) {
  EXPECT_EQ(body.find("spk"), std::string::npos) << body;
  EXPECT_EQ(body.find("speaker"), std::string::npos) << body;
  EXPECT_EQ(body.find("correct_answer"), std::string::npos) << body;
}

TEST_F(ServiceTest, ThreeTrialSession) {
  auto res = client_->Get("/api/results");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body).at("status"), "no data");

  res = client_->Get("/api/trials");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  expect_no_identity(res->body);
  const json session = json::parse(res->body);
  const std::string token = session.at("session");
  ASSERT_EQ(session.at("trials").size(), 3u);

  for (const auto& t : session.at("trials")) {
    for (const char* slot : {"x", "a", "b"}) {
      const auto media = client_->Get(t.at(slot).get<std::string>());
      ASSERT_TRUE(media);
      EXPECT_EQ(media->status, 200);
      EXPECT_EQ(media->get_header_value("Content-Type"), "audio/wav");
      EXPECT_EQ(media->body.rfind("RIFF", 0), 0u);
    }
  }
  const auto& list = session.at("trials");
  for (std::size_t i = 0; i < 3; ++i) {
    const auto r = post({{"session", token}, {"trial_id", list[i].at("trial_id")}, {"choice", i < 2 ? "A" : "B"}});
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    expect_no_identity(r->body);
  }
  const auto dup = post({{"session", token}, {"trial_id", list[0].at("trial_id")}, {"choice", "B"}});
  EXPECT_EQ(dup->status, 409);

  res = client_->Get("/api/trials/" + token);
  ASSERT_EQ(res->status, 200);
  expect_no_identity(res->body);
  EXPECT_EQ(json::parse(res->body).at("answered").size(), 3u);

  const json results = json::parse(client_->Get("/api/results")->body);
  EXPECT_EQ(results.at("n"), 3);
  EXPECT_EQ(results.at("k_correct"), 2);
  const auto w = privacy::wilson_interval(2, 3);
  EXPECT_DOUBLE_EQ(results.at("wilson_center").get<double>(), w.center);
  EXPECT_DOUBLE_EQ(results.at("wilson_half_width").get<double>(), w.half_width);

  std::ifstream log(dir_ / "responses.jsonl");
  std::string line;
  std::vector<std::string> logged;
  while (std::getline(log, line)) logged.push_back(json::parse(line).at("trial_id"));
  ASSERT_EQ(logged.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(logged[i], list[i].at("trial_id"));

  restart();
  EXPECT_EQ(json::parse(client_->Get("/api/results")->body), results);
  res = client_->Get("/api/trials/" + token);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).at("answered").size(), 3u);
  EXPECT_EQ(post({{"session", token}, {"trial_id", list[1].at("trial_id")}, {"choice", "A"}})->status, 409);
}

TEST_F(ServiceTest, ErrorStatuses) {
  const std::string token = json::parse(client_->Get("/api/trials")->body).at("session");
  EXPECT_EQ(client_->Get("/media/0000000000000000")->status, 404);
  EXPECT_EQ(client_->Get("/api/trials/nosuchsession")->status, 404);
  EXPECT_EQ(client_->Post("/api/response", "{not json", "application/json")->status, 400);
  EXPECT_EQ(post({{"session", token}})->status, 400);
  EXPECT_EQ(post({{"session", token}, {"trial_id", "t001"}, {"choice", "X"}})->status, 400);
  EXPECT_EQ(post({{"session", token}, {"trial_id", "t404"}, {"choice", "A"}})->status, 404);
  EXPECT_EQ(post({{"session", "forged"}, {"trial_id", "t001"}, {"choice", "A"}})->status, 404);
  EXPECT_EQ(json::parse(client_->Get("/api/results")->body).at("n"), 0);
}

TEST_F(ServiceTest, ServesStaticAssets) {
  const auto res = client_->Get("/index.html");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "<html>abx</html>");
}

TEST_F(ServiceTest, SessionsAreDistinct) {
  const std::string a = json::parse(client_->Get("/api/trials")->body).at("session");
  const std::string b = json::parse(client_->Get("/api/trials")->body).at("session");
  EXPECT_NE(a, b);
}

}  // namespace
}  // namespace anoncodec::abx
