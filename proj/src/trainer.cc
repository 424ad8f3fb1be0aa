// pit/trainer.cc

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

#include "pit/trainer.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "pit/errors.h"
#include "pit/parallel.h"
#include "pit/pit-loss.h"
#include "pit/random.h"

namespace pit {

namespace fs = std::filesystem;

namespace {

void CheckCompatible(const ModelParams &params, std::span<const MixtureSample> samples) {
  const ModelConfig &c = params.config;
  for (const MixtureSample &s : samples) {
    const std::string &id = s.features.utterance_id;
    if (s.features.frames.Cols() != static_cast<std::size_t>(c.feat_dim)) {
      throw ValidationError("utterance " + id + ": feature dimension " +
                            std::to_string(s.features.frames.Cols()) + " != model feat_dim " +
                            std::to_string(c.feat_dim));
    }
    if (s.targets.size() != static_cast<std::size_t>(c.num_streams)) {
      throw ValidationError("utterance " + id + ": " + std::to_string(s.targets.size()) +
                            " target streams for a " + std::to_string(c.num_streams) +
                            "-stream model");
    }
    for (const LabelSequence &t : s.targets) {
      for (std::int32_t k : t.senones) {
        if (k < 0 || k >= c.num_senones) {
          throw ValidationError("utterance " + id + ": senone " + std::to_string(k) +
                                " outside [0, " + std::to_string(c.num_senones) + ")");
        }
      }
    }
  }
}

void AppendLog(const fs::path &dir, const EpochRecord &r) {
  const fs::path path = dir / "train.log";
  std::ofstream os(path, std::ios::app);
  if (!os) throw IoError("cannot append to " + path.string());
  char line[160];
  std::snprintf(line, sizeof line, "%d\t%.10g\t%.10g\t%.3f\n", r.epoch, r.train_loss,
                r.heldout_loss, r.seconds);
  os << line;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("train: learning_rate must be > 0");
  if (!(clip_threshold > 0.0)) throw ValidationError("train: clip_threshold must be > 0");
  if (minibatch_utterances < 1) throw ValidationError("train: minibatch_utterances must be >= 1");
  if (epochs < 0) throw ValidationError("train: epochs must be >= 0");
}

void ClipGradients(std::span<Matrix> grads, double threshold, ClipMode mode) {
  if (!(threshold > 0.0)) throw ValidationError("clip_gradients: threshold must be > 0");
  if (mode == ClipMode::kElement) {
    for (Matrix &g : grads) {
      for (double &v : g.Data()) v = std::clamp(v, -threshold, threshold);
    }
    return;
  }
  double sq = 0.0;
  for (const Matrix &g : grads) {
    for (double v : g.Data()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  // A rescaled vector can come back a few ulps above the threshold; treat
  // that as clipped so that clipping twice changes nothing.
  if (norm <= threshold * (1.0 + 1e-12)) return;
  const double scale = threshold / norm;
  for (Matrix &g : grads) {
    for (double &v : g.Data()) v *= scale;
  }
}

void SgdStep(ModelParams &params, std::span<Matrix> grads, double learning_rate) {
  auto tensors = params.Tensors();
  if (grads.size() != tensors.size()) {
    throw ShapeError("sgd_step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(tensors.size()) + " parameters");
  }
  const auto names = params.TensorNames();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (!grads[i].SameShape(*tensors[i])) {
      throw ShapeError("sgd_step: gradient " + grads[i].ShapeString() + " for " + names[i] +
                       " " + tensors[i]->ShapeString());
    }
    auto p = tensors[i]->Data();
    auto g = grads[i].Data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!std::isfinite(g[j]) || !std::isfinite(p[j] - learning_rate * g[j])) {
        throw NumericError("sgd_step: non-finite update for " + names[i]);
      }
    }
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto p = tensors[i]->Data();
    auto g = grads[i].Data();
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= learning_rate * g[j];
    grads[i].SetZero();
  }
}

UtteranceGradient ComputeUtteranceGradient(const ModelParams &params,
                                           const MixtureSample &sample) {
  Graph graph;
  const ModelNodes nodes = BuildForward(graph, params, sample.features.frames);
  const PitLossNodes loss = BuildPitLoss(graph, nodes.logits, sample.targets);
  if (!std::isfinite(loss.result.value)) {
    throw NumericError("non-finite loss on utterance " + sample.features.utterance_id);
  }
  graph.Backward(loss.loss);
  return {loss.result.value, CollectGradients(graph, nodes)};
}

GradientAccumulator::GradientAccumulator(const ModelParams &params) {
  for (const Matrix *m : params.Tensors()) sum_.emplace_back(m->Rows(), m->Cols());
}

void GradientAccumulator::Add(std::span<const Matrix> grads) {
  if (grads.size() != sum_.size()) throw ShapeError("accumulator: gradient count mismatch");
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    if (!grads[i].SameShape(sum_[i])) throw ShapeError("accumulator: gradient shape mismatch");
    auto dst = sum_[i].Data();
    auto src = grads[i].Data();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  ++count_;
}

void GradientAccumulator::Step(ModelParams &params, const TrainConfig &config) {
  if (count_ == 0) return;
  const double inv = 1.0 / static_cast<double>(count_);
  for (Matrix &g : sum_) {
    for (double &v : g.Data()) v *= inv;
  }
  ClipGradients(sum_, config.clip_threshold, config.clip_mode);
  SgdStep(params, sum_, config.learning_rate);
  count_ = 0;
}

double TrainMinibatch(ModelParams &params, std::span<const MixtureSample *const> batch,
                      const TrainConfig &config, GradientAccumulator &accumulator) {
  std::vector<UtteranceGradient> results(batch.size());
  const ModelParams &frozen = params;
  ParallelFor(batch.size(), config.workers,
              [&](std::size_t i) { results[i] = ComputeUtteranceGradient(frozen, *batch[i]); });
  double loss_sum = 0.0;
  for (const UtteranceGradient &r : results) {
    accumulator.Add(r.grads);
    loss_sum += r.loss;
  }
  accumulator.Step(params, config);
  return loss_sum;
}

double MeanLoss(const ModelParams &params, std::span<const MixtureSample> samples, int workers) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> losses(samples.size());
  ParallelFor(samples.size(), workers, [&](std::size_t i) {
    const PosteriorStreams post = Forward(params, samples[i].features);
    losses[i] = PitLoss(post, samples[i].targets).value;
  });
  double total = 0.0;
  for (double v : losses) total += v;
  return total / static_cast<double>(samples.size());
}

TrainReport Train(ModelParams &params, std::span<const MixtureSample> train,
                  std::span<const MixtureSample> heldout, const TrainConfig &config) {
  config.Validate();
  CheckCompatible(params, train);
  CheckCompatible(params, heldout);
  if (train.empty()) throw ValidationError("train: no training utterances");
  if (!config.checkpoint_dir.empty()) fs::create_directories(config.checkpoint_dir);

  TrainConfig live = config;
  TrainReport report;
  GradientAccumulator accumulator(params);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.shuffle_seed);
  double best_heldout = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.Index(i)]);

    double loss_sum = 0.0;
    std::vector<const MixtureSample *> batch;
    for (std::size_t begin = 0; begin < order.size(); begin += live.minibatch_utterances) {
      const std::size_t end = std::min(order.size(), begin + live.minibatch_utterances);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&train[order[i]]);
      loss_sum += TrainMinibatch(params, batch, live, accumulator);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = live.learning_rate;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.heldout_loss = MeanLoss(params, heldout, live.workers);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(rec);
    spdlog::info("epoch {} train J {:.5f} held-out J {:.5f} lr {:.4g} ({:.1f}s)", epoch,
                 rec.train_loss, rec.heldout_loss, rec.learning_rate, rec.seconds);

    if (config.halve_learning_rate && std::isfinite(rec.heldout_loss)) {
      if (epoch > 1 && best_heldout - rec.heldout_loss < config.lr_halving_threshold) {
        live.learning_rate *= 0.5;
        spdlog::debug("halving learning rate to {:.4g}", live.learning_rate);
      }
      best_heldout = std::min(best_heldout, rec.heldout_loss);
    }

    if (!config.checkpoint_dir.empty()) {
      const fs::path ckpt = config.checkpoint_dir / ("epoch-" + std::to_string(epoch) + ".pitm");
      SaveCheckpoint(params, ckpt);
      AppendLog(config.checkpoint_dir, rec);
    }
  }
  if (!config.checkpoint_dir.empty()) {
    report.final_checkpoint = config.checkpoint_dir / "final.pitm";
    SaveCheckpoint(params, report.final_checkpoint);
  }
  return report;
}

TrainReport TrainBaseline(ModelParams &params, std::span<const MixtureSample> train,
                          std::span<const MixtureSample> heldout, const TrainConfig &config) {
  if (params.config.num_streams != 1) {
    throw ValidationError("train_baseline: model must have exactly one output stream, has " +
                          std::to_string(params.config.num_streams));
  }
  return Train(params, train, heldout, config);
}

std::pair<std::vector<MixtureSample>, std::vector<MixtureSample>> SplitHeldout(
    std::vector<MixtureSample> samples, double fraction, std::uint64_t seed) {
  const std::size_t n = samples.size();
  auto held = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  if (n >= 2) held = std::clamp<std::size_t>(held, 1, n - 1);
  else held = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.Index(i)]);
  std::vector<bool> is_held(n, false);
  for (std::size_t i = 0; i < held; ++i) is_held[order[i]] = true;
  std::pair<std::vector<MixtureSample>, std::vector<MixtureSample>> out;
  for (std::size_t i = 0; i < n; ++i) {
    (is_held[i] ? out.second : out.first).push_back(std::move(samples[i]));
  }
  return out;
}

}  // namespace pit
