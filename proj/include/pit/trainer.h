// pit/trainer.h

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

#ifndef PIT_TRAINER_H_
#define PIT_TRAINER_H_

// Utterance-level SGD with full-length BPTT.
//
// Each minibatch holds whole utterances. Per-utterance gradients of the PIT
// objective are summed in minibatch order, averaged, clipped and applied
// with plain SGD. Per-utterance work may run on several threads; the sum is
// always formed in the same order, so results do not depend on the thread
// count.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pit/corpus.h"
#include "pit/matrix.h"
#include "pit/network.h"

namespace pit {

enum class ClipMode {
  kElement,  // clamp every entry to [-threshold, threshold]
  kNorm,     // rescale so the global L2 norm is at most threshold
};

struct TrainConfig {
  double learning_rate = 0.05;
  double clip_threshold = 0.0003;
  ClipMode clip_mode = ClipMode::kElement;
  std::size_t minibatch_utterances = 8;
  int epochs = 10;
  std::uint64_t shuffle_seed = 0;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints or log
  /// Halve the rate when held-out J improves by less than this in an epoch.
  double lr_halving_threshold = 1e-3;
  bool halve_learning_rate = true;
  int workers = 1;

  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double heldout_loss = 0.0;
  double seconds = 0.0;
  double learning_rate = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::filesystem::path final_checkpoint;
};

void ClipGradients(std::span<Matrix> grads, double threshold, ClipMode mode = ClipMode::kElement);

/// theta <- theta - lr * g for every tensor, then zeroes `grads`. Throws
/// NumericError naming the tensor if a gradient or updated value is not
/// finite; parameters are left untouched in that case.
void SgdStep(ModelParams &params, std::span<Matrix> grads, double learning_rate);

struct UtteranceGradient {
  double loss = 0.0;
  std::vector<Matrix> grads;  // declaration order
};

/// Forward, PIT loss and backward for one utterance.
UtteranceGradient ComputeUtteranceGradient(const ModelParams &params,
                                           const MixtureSample &sample);

/// Sums per-utterance gradients and applies one averaged, clipped update.
class GradientAccumulator {
 public:
  explicit GradientAccumulator(const ModelParams &params);

  void Add(std::span<const Matrix> grads);
  std::size_t Count() const { return count_; }
  /// Averages over Count(), clips, steps and resets. No-op when empty.
  void Step(ModelParams &params, const TrainConfig &config);

 private:
  std::vector<Matrix> sum_;
  std::size_t count_ = 0;
};

/// One minibatch update; returns the sum of utterance losses before it.
double TrainMinibatch(ModelParams &params, std::span<const MixtureSample *const> batch,
                      const TrainConfig &config, GradientAccumulator &accumulator);

/// Mean utterance J with no gradient work.
double MeanLoss(const ModelParams &params, std::span<const MixtureSample> samples,
                int workers = 1);

/// PIT training. Held-out J is evaluated after every epoch. Writes
/// <checkpoint_dir>/epoch-N.pitm, final.pitm and appends to train.log when a
/// checkpoint directory is configured.
TrainReport Train(ModelParams &params, std::span<const MixtureSample> train,
                  std::span<const MixtureSample> heldout, const TrainConfig &config);

/// Single-talker baseline: the same loop with S = 1 (plain mean CE).
TrainReport TrainBaseline(ModelParams &params, std::span<const MixtureSample> train,
                          std::span<const MixtureSample> heldout, const TrainConfig &config);

/// Seeded split of `samples` into (train, heldout) with round(fraction * n)
/// held out, at least one of each when n >= 2.
std::pair<std::vector<MixtureSample>, std::vector<MixtureSample>> SplitHeldout(
    std::vector<MixtureSample> samples, double fraction, std::uint64_t seed);

}  // namespace pit

#endif  // PIT_TRAINER_H_
