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

// anoncodec command-line tool.
//
// Exit codes: 0 success, 2 invalid config or usage, 3 missing file,
// 4 computation error. Failures print one line on stderr:
//   error: code=<n> kind=<kind> msg="<message>"

#include <csignal>
#include <pthread.h>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "anoncodec/abx/service.hpp"
#include "anoncodec/abx/trials.hpp"
#include "anoncodec/cli/config.hpp"
#include "anoncodec/corpus/embedding_io.hpp"
#include "anoncodec/corpus/synthetic.hpp"
#include "anoncodec/losses/mel.hpp"
#include "anoncodec/losses/wav.hpp"
#include "anoncodec/pipeline/anonymize.hpp"
#include "anoncodec/privacy/rank.hpp"
#include "anoncodec/privacy/stats.hpp"
#include "anoncodec/quantizer/bitrate.hpp"
#include "anoncodec/quantizer/bundle.hpp"
#include "anoncodec/quantizer/rvq.hpp"
#include "anoncodec/quantizer/training.hpp"

namespace fs = std::filesystem;
using namespace anoncodec;

namespace {

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

fs::path resolve(const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute()) return path;
  if (const char* dir = std::getenv("ANONCODEC_DATA_DIR"); dir && *dir) return fs::path(dir) / path;
  return path;
}

cli::ToolkitConfig config_or_default(const std::string& path) {
  return path.empty() ? cli::parse_config({{"version", cli::kConfigVersion}}) : cli::load_config(resolve(path));
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& flag, const std::optional<std::uint64_t>& cfg,
                           const std::string& command) {
  if (flag) return *flag;
  if (cfg) return *cfg;
  throw ConfigError(command + " is stochastic: pass --seed or set it in the config");
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

struct GenDataArgs {
  std::string config, out, embeddings;
  std::optional<std::uint64_t> seed;
};

int gen_data(const GenDataArgs& a) {
  auto cfg = config_or_default(a.config);
  cfg.corpus.seed = require_seed(a.seed, cfg.corpus_seed, "gen-data");
  const auto corpus = corpus::generate_corpus(cfg.corpus);
  corpus::write_latent_file(resolve(a.out), corpus);
  if (!a.embeddings.empty()) corpus::write_embedding_file(resolve(a.embeddings), corpus::embed(corpus));
  std::cout << "speakers=" << corpus.speakers.size() << " utterances=" << corpus.utterance_count()
            << " dim=" << corpus.dim() << "\n";
  return 0;
}

struct TrainArgs {
  std::string config, data, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
};

int train(const TrainArgs& a) {
  auto cfg = config_or_default(a.config);
  const std::uint64_t seed = require_seed(a.seed, cfg.eval.seed, "train");
  if (a.steps) cfg.train.steps = *a.steps;
  const auto corpus = corpus::read_latent_file(resolve(a.data));
  if (corpus.dim() != cfg.rvq.latent_dim)
    throw ConfigError("rvq.latent_dim is " + std::to_string(cfg.rvq.latent_dim) + " but the corpus has dimension " +
                      std::to_string(corpus.dim()));
  auto result = quantizer::train_codebooks(corpus.sequences(), cfg.rvq, cfg.train, Rng(seed));
  quantizer::write_bundle(resolve(a.out), {cfg.rvq, std::move(result.tiers), seed});
  std::cout << "initial_mse=" << fixed(result.initial_mse, 6) << " final_mse=" << fixed(result.final_mse, 6)
            << " steps=" << cfg.train.steps << "\n";
  return 0;
}

struct QuantizeArgs {
  std::string codebooks, data, out;
  std::size_t tiers = 0;
};

int quantize(const QuantizeArgs& a) {
  const auto bundle = quantizer::read_bundle(resolve(a.codebooks));
  const auto corpus = corpus::read_latent_file(resolve(a.data));
  corpus::LatentCorpus out;
  for (const auto& s : corpus.speakers) {
    corpus::SpeakerLatents spk{s.id, {}};
    for (const auto& u : s.utterances) {
      const auto q = quantizer::rvq_encode(bundle.config, bundle.tiers, {u}, a.tiers);
      spk.utterances.push_back(q.quantized());
    }
    out.speakers.push_back(std::move(spk));
  }
  const double mse = quantizer::reconstruction_mse(bundle.config, bundle.tiers, corpus.sequences(), a.tiers);
  if (!a.out.empty()) corpus::write_latent_file(resolve(a.out), out);
  std::cout << "tiers=" << a.tiers + 1 << " mse=" << fixed(mse, 6) << "\n";
  return 0;
}

struct AnonymizeArgs {
  std::string config, codebooks, data, out_dir;
  std::optional<double> epsilon;
  bool no_ldp = false;
  std::optional<std::uint64_t> seed;
};

int anonymize(const AnonymizeArgs& a) {
  auto cfg = config_or_default(a.config);
  const std::uint64_t seed = require_seed(a.seed, cfg.eval.seed, "anonymize");
  const auto bundle = quantizer::read_bundle(resolve(a.codebooks));
  const auto corpus = corpus::read_latent_file(resolve(a.data));
  const auto& tier = bundle.tiers.front();
  std::optional<disentangle::LdpConfig> ldp;
  if (!a.no_ldp) {
    ldp = cfg.ldp;
    if (a.epsilon) ldp->epsilon = *a.epsilon;
    if (cfg.estimate_clip) ldp->clip_c = pipeline::estimate_clip(tier, corpus);
    ldp->validate();
  }
  const auto split = corpus::split_partitions(corpus);
  const Rng root(seed);
  const fs::path dir = resolve(a.out_dir.empty() ? "." : a.out_dir);
  fs::create_directories(dir);
  corpus::write_embedding_file(
      dir / "ref_anon.emb",
      corpus::embed(pipeline::anonymize_corpus(split.reference, tier, ldp, root.substream("anon-ref").seed()),
                    privacy::Partition::kReference));
  corpus::write_embedding_file(
      dir / "eval_anon.emb",
      corpus::embed(pipeline::anonymize_corpus(split.evaluation, tier, ldp, root.substream("anon-eval").seed())));
  corpus::write_embedding_file(dir / "ref_orig.emb", corpus::embed(split.reference, privacy::Partition::kReference));
  corpus::write_embedding_file(dir / "eval_orig.emb", corpus::embed(split.evaluation));
  if (ldp)
    std::cout << "epsilon=" << ldp->epsilon << " clip_c=" << fixed(ldp->clip_c, 6)
              << " laplace_b=" << fixed(ldp->laplace_scale(), 6) << "\n";
  else
    std::cout << "ldp=off\n";
  std::cout << "wrote " << (dir / "{ref,eval}_{anon,orig}.emb").string() << "\n";
  return 0;
}

struct EvalArgs {
  std::string mode, ref, eval, out, ties = "index", config;
  std::optional<std::size_t> tests;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

int eval_privacy(const EvalArgs& a) {
  const auto cfg = config_or_default(a.config);
  const std::uint64_t seed = require_seed(a.seed, cfg.eval.seed, "eval-privacy");
  const std::size_t tests = a.tests.value_or(cfg.eval.tests);
  const auto mode = privacy::parse_privacy_mode(a.mode);
  if (a.ties != "index" && a.ties != "average") throw ConfigError("--ties must be index or average");
  const auto ties = a.ties == "average" ? privacy::TieMode::kAverage : privacy::TieMode::kSpeakerIndex;
  const auto ref = corpus::read_embedding_file(resolve(a.ref));
  const auto eval = corpus::read_embedding_file(resolve(a.eval));
  const auto report = mode == privacy::PrivacyMode::kLinkability
                          ? privacy::linkability(eval, ref, tests, seed, ties, a.threads)
                          : privacy::singling_out(eval, ref, tests, seed, ties, a.threads);
  if (!a.out.empty()) write_json(resolve(a.out), privacy::to_json(report));
  std::cout << "mode=" << privacy::to_string(mode) << " N=" << report.speakers << " L=" << report.tests
            << " p50=" << fixed(report.p50) << " p1=" << fixed(report.p1) << "\n";
  return 0;
}

int baseline(std::size_t n, std::size_t tests) {
  const auto b = privacy::random_baseline(n, tests);
  std::cout << "mu=" << fixed(b.mu, 4) << " var=" << fixed(b.var, 4) << " p50=" << fixed(b.p50, 4)
            << " p1=" << fixed(b.p1, 4) << "\n";
  return 0;
}

struct BitrateArgs {
  std::string preset;
  std::optional<std::size_t> tiers;
  bool all = false;
};

int bitrate(const BitrateArgs& a) {
  if (a.all) {
    for (const auto& spec : quantizer::bitrate_presets()) {
      const std::size_t last = spec.tiers.size() - 1;
      std::cout << std::left << std::setw(18) << spec.name << " semantic=" << fixed(quantizer::bitrate_kbps(spec, 0))
                << " all=" << fixed(quantizer::bitrate_kbps(spec, last)) << "\n";
    }
    return 0;
  }
  if (a.preset.empty()) throw ConfigError("bitrate needs --preset or --all");
  const auto spec = quantizer::find_bitrate_preset(a.preset);
  if (!spec) throw ConfigError("unknown preset '" + a.preset + "'");
  const std::size_t n = a.tiers.value_or(spec->tiers.size() - 1);
  std::cout << fixed(quantizer::bitrate_kbps(*spec, n)) << "\n";
  return 0;
}

int wilson(std::size_t k, std::size_t n, double alpha) {
  const auto w = privacy::wilson_interval(k, n, alpha);
  std::cout << "center=" << fixed(w.center, 4) << " half_width=" << fixed(w.half_width, 4)
            << " lower=" << fixed(w.lower(), 4) << " upper=" << fixed(w.upper(), 4) << "\n";
  return 0;
}

int mel_loss(const std::string& ref, const std::string& est) {
  const auto x = losses::read_wav(resolve(ref));
  const auto y = losses::read_wav(resolve(est));
  if (x.sample_rate != y.sample_rate) throw ConfigError("sample rates differ");
  losses::MelScaleConfig cfg;
  cfg.sample_rate_hz = x.sample_rate;
  std::cout << "mel_loss=" << fixed(losses::multiscale_mel_loss(x.samples, y.samples, cfg), 6) << "\n";
  return 0;
}

struct AbxArgs {
  std::string manifest, report, results = "abx_responses.jsonl", static_dir, host = "127.0.0.1";
  std::size_t trials = 20;
  std::optional<std::uint64_t> seed;
  int port = 8080;
};

int abx_serve(const AbxArgs& a) {
  const std::uint64_t seed = require_seed(a.seed, std::nullopt, "abx-serve");
  const auto manifest = abx::load_manifest(resolve(a.manifest), seed);
  const auto report = privacy::report_from_json(read_json(resolve(a.report)));
  auto trials = abx::assemble_trials(manifest, report, a.trials, seed);
  for (const auto& w : trials.warnings) std::cerr << "warning: " << w << "\n";
  abx::ServiceOptions opts;
  opts.results_path = resolve(a.results);
  if (!a.static_dir.empty()) opts.static_dir = resolve(a.static_dir);
  abx::AbxService service(manifest, std::move(trials), opts);

  // Server threads inherit the blocked mask; this thread waits for the signal.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
  const int port = service.start(a.host, a.port);
  std::cout << "serving " << service.state().trials().trials.size() << " trials on http://" << a.host << ":"
            << port << std::endl;
  int sig = 0;
  sigwait(&stop_signals, &sig);
  service.stop();
  return 0;
}

int report(const std::vector<std::string>& inputs, const std::string& out) {
  struct Row {
    std::optional<privacy::PrivacyReport> link, single;
  };
  std::vector<std::string> order;
  std::map<std::string, Row> rows;
  std::optional<std::pair<std::size_t, std::size_t>> shape;
  for (const auto& in : inputs) {
    const auto eq = in.find('=');
    const std::string label = eq == std::string::npos ? fs::path(in).stem().string() : in.substr(0, eq);
    const std::string path = eq == std::string::npos ? in : in.substr(eq + 1);
    auto r = privacy::report_from_json(read_json(resolve(path)));
    if (shape && *shape != std::pair{r.speakers, r.tests})
      throw ConfigError("reports disagree on N or L; the random row would be ambiguous");
    shape = std::pair{r.speakers, r.tests};
    if (!rows.count(label)) order.push_back(label);
    auto& slot = r.mode == privacy::PrivacyMode::kLinkability ? rows[label].link : rows[label].single;
    if (slot) throw ConfigError("two " + privacy::to_string(r.mode) + " reports for '" + label + "'");
    slot = std::move(r);
  }
  if (!shape) throw ConfigError("report needs at least one --in");
  const auto base = privacy::random_baseline(shape->first, shape->second);
  std::ostringstream os;
  auto cell = [](const std::optional<privacy::PrivacyReport>& r, bool p50) {
    return r ? fixed(p50 ? r->p50 : r->p1) : std::string("-");
  };
  os << std::left << std::setw(24) << "" << std::setw(22) << "Linkability" << "Singling out\n";
  os << std::setw(24) << "" << std::setw(11) << "p50" << std::setw(11) << "p1" << std::setw(11) << "p50" << "p1\n";
  os << std::setw(24) << "Random (theoretical)" << std::setw(11) << fixed(base.p50) << std::setw(11) << fixed(base.p1)
     << std::setw(11) << fixed(base.p50) << fixed(base.p1) << "\n";
  for (const auto& label : order) {
    const Row& r = rows[label];
    os << std::setw(24) << label << std::setw(11) << cell(r.link, true) << std::setw(11) << cell(r.link, false)
       << std::setw(11) << cell(r.single, true) << cell(r.single, false) << "\n";
  }
  os << "N=" << shape->first << " L=" << shape->second << "\n";
  std::cout << os.str();
  if (!out.empty()) {
    std::ofstream f(resolve(out));
    if (!f) throw IoError("cannot open " + out + " for writing");
    f << os.str();
  }
  return 0;
}

int fail(int code, const std::string& kind, const std::string& msg) {
  std::string escaped;
  for (char c : msg) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += c == '\n' ? ' ' : c;
  }
  std::cerr << "error: code=" << code << " kind=" << kind << " msg=\"" << escaped << "\"" << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker anonymization codec toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::function<int()> action;

  GenDataArgs gd;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a synthetic latent corpus");
  c_gen->add_option("--config", gd.config, "Toolkit config (JSON)");
  c_gen->add_option("--out", gd.out, "Latent corpus output (USCEMB01)")->required();
  c_gen->add_option("--embeddings", gd.embeddings, "Also write surrogate embeddings");
  c_gen->add_option("--seed", gd.seed, "Random seed");
  c_gen->callback([&] { action = [&] { return gen_data(gd); }; });

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train RVQ codebooks on a latent corpus");
  c_train->add_option("--config", tr.config, "Toolkit config (JSON)");
  c_train->add_option("--data", tr.data, "Latent corpus")->required();
  c_train->add_option("--out", tr.out, "Codebook bundle output")->required();
  c_train->add_option("--steps", tr.steps, "Override train.steps");
  c_train->add_option("--seed", tr.seed, "Random seed");
  c_train->callback([&] { action = [&] { return train(tr); }; });

  QuantizeArgs qa;
  auto* c_q = app.add_subcommand("quantize", "Encode and decode a latent corpus with n+1 tiers");
  c_q->add_option("--codebooks", qa.codebooks, "Codebook bundle")->required();
  c_q->add_option("--data,--input", qa.data, "Latent corpus")->required();
  c_q->add_option("--tiers", qa.tiers, "Index of the last tier used (0 = semantic only)");
  c_q->add_option("--out,--output", qa.out, "Reconstructed latent corpus");
  c_q->callback([&] { action = [&] { return quantize(qa); }; });

  AnonymizeArgs an;
  auto* c_an = app.add_subcommand("anonymize", "Anonymize through the semantic tier and re-embed");
  c_an->add_option("--config", an.config, "Toolkit config (JSON)");
  c_an->add_option("--codebooks", an.codebooks, "Codebook bundle")->required();
  c_an->add_option("--data", an.data, "Latent corpus")->required();
  c_an->add_option("--out-dir", an.out_dir, "Directory for the embedding files");
  auto* eps = c_an->add_option("--epsilon", an.epsilon, "LDP privacy budget");
  c_an->add_flag("--no-ldp", an.no_ldp, "Skip the noise block")->excludes(eps);
  c_an->add_option("--seed", an.seed, "Random seed");
  c_an->callback([&] { action = [&] { return anonymize(an); }; });

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval-privacy", "Rank-based linkability or singling-out test");
  c_ev->add_option("--mode", ev.mode, "linkability or singling-out")->required();
  c_ev->add_option("--ref", ev.ref, "Reference embeddings")->required();
  c_ev->add_option("--eval", ev.eval, "Evaluation embeddings")->required();
  c_ev->add_option("--tests", ev.tests, "Number of tests L");
  c_ev->add_option("--seed", ev.seed, "Random seed");
  c_ev->add_option("--out", ev.out, "Report output (JSON)");
  c_ev->add_option("--ties", ev.ties, "Tie handling: index or average");
  c_ev->add_option("--threads", ev.threads, "Worker threads");
  c_ev->add_option("--config", ev.config, "Toolkit config (JSON)");
  c_ev->callback([&] { action = [&] { return eval_privacy(ev); }; });

  std::size_t bl_n = 0, bl_tests = 0;
  auto* c_bl = app.add_subcommand("baseline", "Random-guessing rank baseline");
  c_bl->add_option("--n", bl_n, "Number of speakers")->required();
  c_bl->add_option("--tests", bl_tests, "Number of tests L")->required();
  c_bl->callback([&] { action = [&] { return baseline(bl_n, bl_tests); }; });

  BitrateArgs br;
  auto* c_br = app.add_subcommand("bitrate", "Codec bitrate in kbps");
  c_br->add_option("--preset", br.preset, "usc, usc-decoder, encodec, dac, speechtokenizer, facodec");
  c_br->add_option("--tiers", br.tiers, "Index of the last tier used (0 = first tier only)");
  c_br->add_flag("--all", br.all, "Print every preset");
  c_br->callback([&] { action = [&] { return bitrate(br); }; });

  std::size_t w_k = 0, w_n = 0;
  double w_alpha = 0.05;
  auto* c_w = app.add_subcommand("wilson", "Wilson score interval");
  c_w->add_option("--k", w_k, "Successes")->required();
  c_w->add_option("--n", w_n, "Trials")->required();
  c_w->add_option("--alpha", w_alpha, "Significance level");
  c_w->callback([&] { action = [&] { return wilson(w_k, w_n, w_alpha); }; });

  std::string m_ref, m_est;
  auto* c_m = app.add_subcommand("mel-loss", "Multi-scale mel loss between two mono 16-bit WAV files");
  c_m->add_option("--a,--ref", m_ref, "Reference WAV")->required();
  c_m->add_option("--b,--est", m_est, "Estimate WAV")->required();
  c_m->callback([&] { action = [&] { return mel_loss(m_ref, m_est); }; });

  AbxArgs ab;
  auto* c_abx = app.add_subcommand("abx-serve", "Serve ABX listening trials over HTTP");
  c_abx->add_option("--manifest", ab.manifest, "Media manifest (JSON)")->required();
  c_abx->add_option("--report", ab.report, "Singling-out report (JSON)")->required();
  c_abx->add_option("--trials", ab.trials, "Number of trials");
  c_abx->add_option("--seed", ab.seed, "Random seed");
  c_abx->add_option("--port", ab.port, "TCP port");
  c_abx->add_option("--host", ab.host, "Bind address");
  c_abx->add_option("--results", ab.results, "Response log (JSON lines)");
  c_abx->add_option("--static", ab.static_dir, "Directory of UI assets served at /");
  c_abx->callback([&] { action = [&] { return abx_serve(ab); }; });

  std::vector<std::string> rp_in;
  std::string rp_out;
  auto* c_rp = app.add_subcommand("report", "Merge privacy reports into one table");
  c_rp->add_option("--in", rp_in, "label=report.json (repeatable)")->required();
  c_rp->add_option("--out", rp_out, "Also write the table to a file");
  c_rp->callback([&] { action = [&] { return report(rp_in, rp_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const int code = fail(2, "usage", e.what());
    std::cerr << app.help();
    return code;
  }

  try {
    return action();
  } catch (const ParseError& e) {
    return fail(2, "parse", e.what());
  } catch (const ConfigError& e) {
    return fail(2, "config", e.what());
  } catch (const RangeError& e) {
    return fail(2, "range", e.what());
  } catch (const IoError& e) {
    return fail(3, "io", e.what());
  } catch (const DegenerateInputError& e) {
    return fail(4, "degenerate", e.what());
  } catch (const ComputationError& e) {
    return fail(4, "computation", e.what());
  } catch (const std::exception& e) {
    return fail(4, "internal", e.what());
  }
}
