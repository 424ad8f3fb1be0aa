// pit/tools/pit-asr.cc

// Copyright 2026  PIT-ASR Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: corpus generation, training, scoring, gradient
// checking and per-utterance dumps.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pit/corpus.h"
#include "pit/errors.h"
#include "pit/features.h"
#include "pit/gradcheck.h"
#include "pit/network.h"
#include "pit/random.h"
#include "pit/scoring.h"
#include "pit/trainer.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

struct GlobalOptions {
  std::uint64_t seed = 1;
  int workers = 1;
};

struct CorpusOptions {
  pit::CorpusSpec spec;
  fs::path out;
};

struct TrainOptions {
  fs::path corpus;
  fs::path out;
  std::string split;
  int hidden = 64;
  int layers = 2;
  int streams = 2;
  double learning_rate = 0.05;
  double clip = 0.0003;
  std::string clip_mode = "element";
  std::size_t minibatch = 8;
  int epochs = 10;
  double heldout_fraction = 0.1;
  bool no_lr_halving = false;
};

struct EvalOptions {
  fs::path corpus;
  fs::path model;
  std::string mode = "pit";
  std::string split;
  fs::path out;
};

struct DumpOptions {
  fs::path corpus;
  std::string utterance;
  std::string split;
  fs::path model;
  fs::path out = ".";
};

void SetupLogging() {
  auto logger = spdlog::stderr_color_mt("pit");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");
  spdlog::set_level(spdlog::level::info);
  const char *env = std::getenv("PIT_LOG");
  if (env == nullptr || *env == '\0') return;
  const std::string level = env;
  if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "warn") {
    spdlog::set_level(spdlog::level::warn);
  } else {
    spdlog::warn("PIT_LOG={} not recognized (debug|info|warn); using info", level);
  }
}

// Global options plus those of the subcommand being run; CLI11 would also
// list every other subcommand with its defaults.
void WriteResolvedConfig(const CLI::App &app, const fs::path &dir) {
  fs::create_directories(dir);
  const fs::path path = dir / "config.resolved";
  std::ofstream os(path);
  if (!os) throw pit::IoError("cannot write " + path.string());
  std::vector<std::string> skip;
  for (const CLI::App *sub : app.get_subcommands({})) {
    if (!sub->parsed()) skip.push_back(sub->get_name() + ".");
  }
  std::istringstream all(app.config_to_str(true, false));
  for (std::string line; std::getline(all, line);) {
    const bool other = std::any_of(skip.begin(), skip.end(),
                                   [&](const std::string &p) { return line.rfind(p, 0) == 0; });
    if (!other) os << line << "\n";
  }
  spdlog::debug("resolved configuration written to {}", path.string());
}

pit::ClipMode ParseClipMode(const std::string &mode) {
  if (mode == "element") return pit::ClipMode::kElement;
  if (mode == "norm") return pit::ClipMode::kNorm;
  throw pit::ValidationError("unknown clip mode " + mode);
}

void RunGenCorpus(const CLI::App &app, const GlobalOptions &g, CorpusOptions opts) {
  WriteResolvedConfig(app, opts.out);
  opts.spec.seed = pit::DeriveSeed(g.seed, "corpus");
  const pit::CorpusManifest m = pit::GenCorpus(opts.spec, opts.out, g.workers);
  for (std::size_t i = 0; i < m.split_names.size(); ++i) {
    std::printf("%s\t%zu\n", m.split_names[i].c_str(), m.splits[i].size());
  }
  std::printf("checksum\t%016llx\n",
              static_cast<unsigned long long>(pit::CorpusChecksum(opts.out)));
}

void RunTrain(const CLI::App &app, const GlobalOptions &g, TrainOptions opts, bool baseline) {
  if (baseline) opts.streams = 1;
  if (opts.split.empty()) opts.split = baseline ? "clean_train" : "train";
  if (!(opts.heldout_fraction > 0.0 && opts.heldout_fraction < 1.0)) {
    throw pit::ValidationError("--heldout-fraction must be in (0, 1)");
  }
  WriteResolvedConfig(app, opts.out);
  const pit::CorpusManifest manifest = pit::LoadManifest(opts.corpus);
  auto [train, heldout] =
      pit::SplitHeldout(pit::LoadSplit(opts.corpus, manifest, opts.split),
                        opts.heldout_fraction, pit::DeriveSeed(g.seed, "heldout"));

  pit::ModelConfig mc;
  mc.feat_dim = manifest.feat_dim;
  mc.hidden_dim = opts.hidden;
  mc.num_layers = opts.layers;
  mc.num_streams = opts.streams;
  mc.num_senones = manifest.spec.num_senones;
  mc.seed = pit::DeriveSeed(g.seed, "init");
  mc.Validate();
  pit::ModelParams params = pit::InitParams(mc);

  pit::TrainConfig tc;
  tc.learning_rate = opts.learning_rate;
  tc.clip_threshold = opts.clip;
  tc.clip_mode = ParseClipMode(opts.clip_mode);
  tc.minibatch_utterances = opts.minibatch;
  tc.epochs = opts.epochs;
  tc.shuffle_seed = pit::DeriveSeed(g.seed, "shuffle");
  tc.checkpoint_dir = opts.out;
  tc.halve_learning_rate = !opts.no_lr_halving;
  tc.workers = g.workers;
  spdlog::info("training {} parameters on {} utterances ({} held out)", params.NumScalars(),
               train.size(), heldout.size());
  const pit::TrainReport report = baseline ? pit::TrainBaseline(params, train, heldout, tc)
                                           : pit::Train(params, train, heldout, tc);
  std::printf("%s\n", report.final_checkpoint.string().c_str());
}

pit::EvalMode ParseEvalMode(const std::string &mode) {
  if (mode == "pit") return pit::EvalMode::kPit;
  if (mode == "single-on-mix") return pit::EvalMode::kSingleOnMixture;
  if (mode == "single-on-clean") return pit::EvalMode::kSingleOnClean;
  throw pit::ValidationError("unknown eval mode " + mode);
}

void RunEval(const CLI::App &app, const GlobalOptions &g, EvalOptions opts) {
  const pit::EvalMode mode = ParseEvalMode(opts.mode);
  if (opts.split.empty()) opts.split = mode == pit::EvalMode::kSingleOnClean ? "clean_eval" : "eval";
  if (!opts.out.empty()) {
    WriteResolvedConfig(app, opts.out.has_parent_path() ? opts.out.parent_path() : fs::path("."));
  }
  const pit::CorpusManifest manifest = pit::LoadManifest(opts.corpus);
  const pit::ModelParams params = pit::LoadCheckpoint(opts.model);
  const std::vector<pit::MixtureSample> samples =
      pit::LoadSplit(opts.corpus, manifest, opts.split);
  const pit::ScoreReport report =
      pit::EvaluateCorpus(params, samples, mode, manifest.spec.snrs, g.workers);
  const std::string csv = report.ToCsv();
  if (opts.out.empty()) {
    std::fputs(csv.c_str(), stdout);
    return;
  }
  std::ofstream os(opts.out);
  if (!os) throw pit::IoError("cannot write " + opts.out.string());
  os << csv;
}

int RunGradCheck(const GlobalOptions &g) {
  const pit::GradCheckResult r = pit::CheckTinyPitModel(g.seed);
  std::printf("max_rel_err=%.2g\n", r.max_rel_err);
  return r.max_rel_err < 1e-4 ? 0 : 1;
}

// Log magnitude spectrogram as binary PGM: time runs left to right, low
// frequencies at the bottom, linear gray scale between min and max.
void WritePgm(const fs::path &path, const pit::Matrix &spec) {
  const std::size_t width = spec.Rows(), height = spec.Cols();
  std::vector<double> logmag(spec.Size());
  for (std::size_t i = 0; i < spec.Size(); ++i) logmag[i] = std::log(spec.Data()[i] + pit::kLogFloor);
  const auto [lo, hi] = std::minmax_element(logmag.begin(), logmag.end());
  const double range = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw pit::IoError("cannot write " + path.string());
  os << "P5\n" << width << " " << height << "\n255\n";
  for (std::size_t row = 0; row < height; ++row) {
    const std::size_t bin = height - 1 - row;
    for (std::size_t t = 0; t < width; ++t) {
      const double v = (logmag[t * height + bin] - *lo) / range;
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
  }
}

void RunDump(const CLI::App &app, const GlobalOptions &g, const DumpOptions &opts) {
  (void)g;
  WriteResolvedConfig(app, opts.out);
  const pit::CorpusManifest manifest = pit::LoadManifest(opts.corpus);
  std::string split;
  const pit::SampleRecord *record = nullptr;
  for (std::size_t i = 0; i < manifest.split_names.size() && record == nullptr; ++i) {
    if (!opts.split.empty() && manifest.split_names[i] != opts.split) continue;
    for (const pit::SampleRecord &r : manifest.splits[i]) {
      if (r.id == opts.utterance) {
        record = &r;
        split = manifest.split_names[i];
        break;
      }
    }
  }
  if (record == nullptr) throw pit::ValidationError("no utterance " + opts.utterance);

  const pit::GeneratedMixture gen = pit::RegenerateMixture(manifest, split, *record);
  const pit::FrameConfig &frame = manifest.spec.frame;
  const fs::path stem = opts.out / opts.utterance;
  WritePgm(stem.string() + ".mixture.pgm", pit::MagnitudeSpectrogram(gen.mix.mixture, frame));
  WritePgm(stem.string() + ".high.pgm", pit::MagnitudeSpectrogram(gen.mix.high, frame));
  WritePgm(stem.string() + ".low.pgm", pit::MagnitudeSpectrogram(gen.mix.low, frame));

  const std::vector<pit::MixtureSample> samples = pit::LoadSplit(opts.corpus, manifest, split);
  const auto it = std::find_if(samples.begin(), samples.end(), [&](const pit::MixtureSample &s) {
    return s.features.utterance_id == opts.utterance;
  });
  if (it == samples.end()) throw pit::IoError("utterance missing from " + split + " data");

  std::ofstream os(stem.string() + ".frames.csv");
  if (!os) throw pit::IoError("cannot write frame dump");
  const std::size_t frames = it->features.frames.Rows();
  const std::size_t refs = it->targets.size();
  if (opts.model.empty()) {
    os << "frame";
    for (std::size_t u = 0; u < refs; ++u) os << ",ref" << u;
    os << "\n";
    for (std::size_t t = 0; t < frames; ++t) {
      os << t;
      for (std::size_t u = 0; u < refs; ++u) os << "," << it->targets[u].senones[t];
      os << "\n";
    }
    return;
  }
  const pit::ModelParams params = pit::LoadCheckpoint(opts.model);
  const pit::PosteriorStreams post = pit::Forward(params, it->features);
  const std::vector<pit::IdSequence> hyps = pit::FrameDecode(post);
  const auto k = static_cast<std::size_t>(params.config.num_senones);
  os << "frame";
  for (std::size_t u = 0; u < refs; ++u) os << ",ref" << u;
  for (std::size_t s = 0; s < post.NumStreams(); ++s) {
    os << ",hyp" << s;
    for (std::size_t j = 0; j < k; ++j) os << ",p" << s << "_" << j;
  }
  os << "\n";
  char buf[32];
  for (std::size_t t = 0; t < frames; ++t) {
    os << t;
    for (std::size_t u = 0; u < refs; ++u) os << "," << it->targets[u].senones[t];
    for (std::size_t s = 0; s < post.NumStreams(); ++s) {
      os << "," << hyps[s][t];
      for (std::size_t j = 0; j < k; ++j) {
        std::snprintf(buf, sizeof buf, ",%.6g", post.posteriors[s](t, j));
        os << buf;
      }
    }
    os << "\n";
  }
}

}  // namespace

int main(int argc, char **argv) {
  SetupLogging();
  CLI::App app{"Permutation invariant training for two-talker senone recognition"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Read options from a TOML/INI file; flags override it");
  app.require_subcommand(1);
  // Lets global flags follow the subcommand, e.g. `gradcheck --seed 7`.
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Root seed; corpus, init and shuffle seeds derive from it");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);

  CorpusOptions corpus;
  CLI::App *gen = app.add_subcommand("gen-corpus", "Generate a synthetic two-talker corpus");
  gen->add_option("--train", corpus.spec.train_mixtures, "Training mixtures");
  gen->add_option("--eval", corpus.spec.eval_mixtures, "Evaluation mixtures");
  gen->add_option("--snrs", corpus.spec.snrs, "SNR conditions in dB")->delimiter(',');
  gen->add_option("--speakers", corpus.spec.num_speakers, "Speaker pool size");
  gen->add_option("--senones", corpus.spec.num_senones, "Senone inventory K (0 = silence)");
  gen->add_option("--min-frames", corpus.spec.min_frames, "Shortest high-energy utterance");
  gen->add_option("--max-frames", corpus.spec.max_frames, "Longest high-energy utterance");
  gen->add_option("--eval-pair-fraction", corpus.spec.eval_pair_fraction,
                  "Fraction of speaker pairs reserved for eval");
  gen->add_option("--out", corpus.out, "Output directory")->required();

  TrainOptions train;
  CLI::App *tr = app.add_subcommand("train", "Train a multi-stream model with the PIT objective");
  CLI::App *tb = app.add_subcommand("train-baseline", "Train a single-stream model");
  for (CLI::App *sub : {tr, tb}) {
    sub->add_option("--corpus", train.corpus, "Corpus directory")->required();
    sub->add_option("--out", train.out, "Checkpoint directory")->required();
    sub->add_option("--split", train.split,
                    "Training split (default: train, or clean_train for the baseline)");
    sub->add_option("--hidden", train.hidden, "LSTM cells per direction");
    sub->add_option("--layers", train.layers, "BLSTM layers");
    sub->add_option("--lr", train.learning_rate, "Learning rate");
    sub->add_option("--clip", train.clip, "Gradient clipping threshold");
    sub->add_option("--clip-mode", train.clip_mode, "element or norm")
        ->check(CLI::IsMember({"element", "norm"}));
    sub->add_option("--minibatch", train.minibatch, "Utterances per minibatch");
    sub->add_option("--epochs", train.epochs, "Epochs");
    sub->add_option("--heldout-fraction", train.heldout_fraction,
                    "Share of the split held out for the learning-rate schedule");
    sub->add_flag("--no-lr-halving", train.no_lr_halving, "Keep the learning rate fixed");
  }
  tr->add_option("--streams", train.streams, "Output streams S");

  EvalOptions eval;
  CLI::App *ev = app.add_subcommand("eval", "Score a model; CSV report to stdout or --out");
  ev->add_option("--corpus", eval.corpus, "Corpus directory")->required();
  ev->add_option("--model", eval.model, "Checkpoint")->required();
  ev->add_option("--mode", eval.mode, "pit, single-on-mix or single-on-clean")
      ->check(CLI::IsMember({"pit", "single-on-mix", "single-on-clean"}));
  ev->add_option("--split", eval.split, "Split (default: eval, or clean_eval)");
  ev->add_option("--out", eval.out, "Write the CSV here instead of stdout");

  CLI::App *gc = app.add_subcommand(
      "gradcheck", "Finite-difference check of a tiny PIT model; exit 0 iff max error < 1e-4");

  DumpOptions dump;
  CLI::App *du = app.add_subcommand(
      "dump", "Spectrograms (PGM) and per-frame labels/posteriors (CSV) for one utterance");
  du->add_option("--corpus", dump.corpus, "Corpus directory")->required();
  du->add_option("--utterance", dump.utterance, "Utterance id, e.g. eval-000003")->required();
  du->add_option("--split", dump.split, "Restrict the search to one split");
  du->add_option("--model", dump.model, "Checkpoint; adds posteriors to the CSV");
  du->add_option("--out", dump.out, "Output directory");

  for (CLI::App *sub : app.get_subcommands({})) {
    sub->footer("Global options (--seed, --workers, --config) may follow the subcommand; see --help.");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    const std::vector<CLI::App *> chosen = app.get_subcommands();
    std::cerr << (chosen.empty() ? app.help() : chosen.front()->help());
    return kExitUsage;
  }

  try {
    if (*gen) RunGenCorpus(app, g, corpus);
    if (*tr) RunTrain(app, g, train, false);
    if (*tb) RunTrain(app, g, train, true);
    if (*ev) RunEval(app, g, eval);
    if (*gc) return RunGradCheck(g);
    if (*du) RunDump(app, g, dump);
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return kExitValidation;
  }
  return 0;
}
