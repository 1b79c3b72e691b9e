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

// ABX listening-test backend.
//
//   GET  /api/trials           mint a session, return the trial list
//   GET  /api/trials/:session  trial list plus the trials already answered
//   GET  /media/:id            raw media bytes
//   POST /api/response         {"session", "trial_id", "choice": "A"|"B"}
//   GET  /api/results          {n, k_correct, p_hat, wilson_center, wilson_half_width}
//
// Responses are appended to a JSON-lines log and fsync'ed before the
// acknowledgement; on start the log is replayed, so results are always a
// function of the log alone.

#ifndef ANONCODEC_ABX_SERVICE_HPP_
#define ANONCODEC_ABX_SERVICE_HPP_

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "anoncodec/abx/trials.hpp"
#include "anoncodec/core/error.hpp"
#include "anoncodec/privacy/stats.hpp"
#include "httplib.h"

namespace anoncodec::abx {

struct AbxResults {
  std::size_t n = 0;
  std::size_t k_correct = 0;
};

inline nlohmann::json results_json(const AbxResults& r) {
  if (r.n == 0) return {{"n", 0}, {"k_correct", 0}, {"status", "no data"}};
  const auto w = privacy::wilson_interval(r.k_correct, r.n);
  return {{"n", r.n},
          {"k_correct", r.k_correct},
          {"p_hat", static_cast<double>(r.k_correct) / static_cast<double>(r.n)},
          {"wilson_center", w.center},
          {"wilson_half_width", w.half_width}};
}

enum class SubmitStatus { kRecorded, kDuplicate, kUnknownTrial, kUnknownSession, kMalformed };

/// Trial set, session registry and response log. Thread-safe.
class AbxState {
 public:
  AbxState(TrialSet trials, std::filesystem::path log_path)
      : trials_(std::move(trials)), log_path_(std::move(log_path)) {
    for (std::size_t i = 0; i < trials_.trials.size(); ++i) index_[trials_.trials[i].trial_id] = i;
    replay();
    fd_ = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open response log " + log_path_.string());
  }

  AbxState(const AbxState&) = delete;
  AbxState& operator=(const AbxState&) = delete;
  ~AbxState() {
    if (fd_ >= 0) ::close(fd_);
  }

  const TrialSet& trials() const { return trials_; }

  std::string mint_session() {
    std::random_device rd;
    std::lock_guard lock(mu_);
    std::string token;
    do {
      const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      token = opaque_id(v, 0);
    } while (sessions_.count(token));
    sessions_.insert(token);
    return token;
  }

  bool has_session(const std::string& s) const {
    std::lock_guard lock(mu_);
    return sessions_.count(s) > 0;
  }

  std::vector<std::string> answered(const std::string& session) const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [key, _] : answers_)
      if (key.first == session) out.push_back(key.second);
    return out;
  }

  /// Validates, appends to the log and syncs it, then updates the counters.
  SubmitStatus submit(const std::string& session, const std::string& trial_id, const std::string& choice) {
    if (choice != "A" && choice != "B") return SubmitStatus::kMalformed;
    const auto it = index_.find(trial_id);
    if (it == index_.end()) return SubmitStatus::kUnknownTrial;
    std::lock_guard lock(mu_);
    if (!sessions_.count(session)) return SubmitStatus::kUnknownSession;
    if (answers_.count({session, trial_id})) return SubmitStatus::kDuplicate;
    const nlohmann::json line = {
        {"session", session}, {"trial_id", trial_id}, {"choice", choice}, {"timestamp", now_utc()}};
    append(line.dump() + "\n");
    record(session, trial_id, choice);
    return SubmitStatus::kRecorded;
  }

  AbxResults results() const {
    std::lock_guard lock(mu_);
    return counts_;
  }

 private:
  static std::string now_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    ::gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  void append(const std::string& s) {
    std::size_t done = 0;
    while (done < s.size()) {
      const auto w = ::write(fd_, s.data() + done, s.size() - done);
      if (w < 0) throw IoError("write to response log failed");
      done += static_cast<std::size_t>(w);
    }
    if (::fsync(fd_) != 0) throw IoError("fsync of response log failed");
  }

  void record(const std::string& session, const std::string& trial_id, const std::string& choice) {
    const AbxTrial& t = trials_.trials[index_.at(trial_id)];
    answers_[{session, trial_id}] = choice;
    counts_.n += 1;
    if (choice[0] == t.correct_answer) counts_.k_correct += 1;
  }

  // A final line without its newline is a torn write that was never
  // acknowledged; it is dropped.
  void replay() {
    std::ifstream in(log_path_, std::ios::binary);
    if (!in) return;
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < data.size()) {
      const auto nl = data.find('\n', start);
      if (nl == std::string::npos) break;
      ++line_no;
      const std::string line = data.substr(start, nl - start);
      start = nl + 1;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        const auto session = j.at("session").get<std::string>();
        const auto trial = j.at("trial_id").get<std::string>();
        const auto choice = j.at("choice").get<std::string>();
        if (!index_.count(trial) || (choice != "A" && choice != "B"))
          throw ConfigError("response log line " + std::to_string(line_no) +
                            " does not match the trial set");
        sessions_.insert(session);
        if (!answers_.count({session, trial})) record(session, trial, choice);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("response log line " + std::to_string(line_no) + " is malformed: " + e.what());
      }
    }
    if (start < data.size()) {
      std::filesystem::resize_file(log_path_, start);
    }
  }

  TrialSet trials_;
  std::map<std::string, std::size_t> index_;
  std::filesystem::path log_path_;
  int fd_ = -1;
  mutable std::mutex mu_;
  std::set<std::string> sessions_;
  std::map<std::pair<std::string, std::string>, std::string> answers_;
  AbxResults counts_;
};

inline std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".wav") return "audio/wav";
  if (ext == ".flac") return "audio/flac";
  if (ext == ".mp3") return "audio/mpeg";
  if (ext == ".ogg") return "audio/ogg";
  return "application/octet-stream";
}

struct ServiceOptions {
  std::filesystem::path results_path = "abx_responses.jsonl";
  std::optional<std::filesystem::path> static_dir;
};

/// HTTP front of an AbxState.
class AbxService {
 public:
  AbxService(Manifest manifest, TrialSet trials, ServiceOptions opts)
      : manifest_(std::move(manifest)), state_(std::move(trials), opts.results_path) {
    routes();
    if (opts.static_dir && !server_.set_mount_point("/", opts.static_dir->string()))
      throw IoError("static asset directory " + opts.static_dir->string() + " does not exist");
  }

  ~AbxService() { stop(); }

  AbxState& state() { return state_; }

  /// Binds and serves on a background thread. Port 0 picks a free port.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
    } else {
      if (!server_.bind_to_port(host, port)) port_ = -1;
      else port_ = port;
    }
    if (port_ < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  /// Serves on the calling thread until stop() is called elsewhere.
  void run(const std::string& host, int port) {
    if (!server_.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
    server_.listen_after_bind();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  static void json_reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  nlohmann::json trial_list() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& t : state_.trials().trials) list.push_back(public_view(t));
    return list;
  }

  void routes() {
    server_.Get("/api/trials", [this](const httplib::Request&, httplib::Response& res) {
      const auto session = state_.mint_session();
      json_reply(res, 200, {{"session", session}, {"trials", trial_list()}, {"answered", nlohmann::json::array()}});
    });
    server_.Get("/api/trials/:session", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& session = req.path_params.at("session");
      if (!state_.has_session(session)) return json_reply(res, 404, {{"error", "unknown session"}});
      json_reply(res, 200, {{"session", session}, {"trials", trial_list()}, {"answered", state_.answered(session)}});
    });
    server_.Get("/media/:id", [this](const httplib::Request& req, httplib::Response& res) {
      const MediaEntry* e = manifest_.find(req.path_params.at("id"));
      if (!e) return json_reply(res, 404, {{"error", "unknown media"}});
      std::ifstream in(e->path, std::ios::binary);
      if (!in) return json_reply(res, 404, {{"error", "media file missing"}});
      std::stringstream ss;
      ss << in.rdbuf();
      res.set_content(ss.str(), content_type_for(e->path));
    });
    server_.Post("/api/response", [this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body;
      std::string session, trial, choice;
      try {
        body = nlohmann::json::parse(req.body);
        session = body.at("session").get<std::string>();
        trial = body.at("trial_id").get<std::string>();
        choice = body.at("choice").get<std::string>();
      } catch (const nlohmann::json::exception&) {
        return json_reply(res, 400, {{"error", "malformed response body"}});
      }
      switch (state_.submit(session, trial, choice)) {
        case SubmitStatus::kRecorded: return json_reply(res, 200, {{"status", "recorded"}});
        case SubmitStatus::kDuplicate: return json_reply(res, 409, {{"error", "already answered"}});
        case SubmitStatus::kUnknownTrial: return json_reply(res, 404, {{"error", "unknown trial"}});
        case SubmitStatus::kUnknownSession: return json_reply(res, 404, {{"error", "unknown session"}});
        case SubmitStatus::kMalformed: return json_reply(res, 400, {{"error", "choice must be A or B"}});
      }
    });
    server_.Get("/api/results", [this](const httplib::Request&, httplib::Response& res) {
      json_reply(res, 200, results_json(state_.results()));
    });
  }

  Manifest manifest_;
  AbxState state_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace anoncodec::abx

#endif  // ANONCODEC_ABX_SERVICE_HPP_
