// pit/scoring.h

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

#ifndef PIT_SCORING_H_
#define PIT_SCORING_H_

// Frame-level decoding and best-permutation scoring.
//
// Every output head is decoded by per-frame argmax. Hypotheses are scored
// against the references under the hypothesis -> reference pairing with the
// lowest total error, chosen per utterance. Two metrics: frame errors
// (mismatched frames) and token errors (Levenshtein distance between
// silence-stripped, run-collapsed senone sequences).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pit/corpus.h"
#include "pit/network.h"

namespace pit {

using IdSequence = std::vector<std::int32_t>;

enum class ScoreMetric { kFrame, kToken };

enum class EvalMode {
  kPit,                // S-head model on mixtures
  kSingleOnMixture,    // 1-head model on mixtures, scored against every reference
  kSingleOnClean,      // 1-head model on unmixed utterances
};

/// Per-stream argmax ids; ties go to the lowest senone id.
std::vector<IdSequence> FrameDecode(const PosteriorStreams &posteriors);

/// Merges runs of equal ids, then drops silence (0).
IdSequence CollapseTokens(std::span<const std::int32_t> frame_ids);

/// Levenshtein distance with unit costs.
std::size_t EditDistance(std::span<const std::int32_t> hyp, std::span<const std::int32_t> ref);

/// Errors of one hypothesis against one reference, both given as frame ids.
/// kFrame counts mismatched frames (sequences must have equal length);
/// kToken collapses both and takes the edit distance.
std::size_t StreamErrors(std::span<const std::int32_t> hyp, std::span<const std::int32_t> ref,
                         ScoreMetric metric);

struct PairwiseScoreResult {
  std::vector<int> perm;              // perm[h] = reference scored against hypothesis h
  std::vector<std::size_t> errors;    // indexed by reference stream
  std::size_t total = 0;
};

/// Searches all hypothesis -> reference pairings for the minimum total
/// error; ties go to the lexicographically smallest pairing. Throws
/// ValidationError on a stream count mismatch, UnsupportedSizeError for S > 8.
PairwiseScoreResult PairwiseScore(std::span<const IdSequence> hyps,
                                  std::span<const IdSequence> refs, ScoreMetric metric);

struct ScoreCell {
  std::string condition;  // SNR in dB, "clean" or "all"
  std::string role;       // "high", "low", "clean" or "all"
  std::size_t frame_errors = 0;
  std::size_t frames = 0;
  std::size_t token_errors = 0;
  std::size_t ref_tokens = 0;
  std::size_t utterances = 0;

  double FrameErrorRate() const;
  double TokenErrorRate() const;
};

struct ScoreReport {
  std::vector<ScoreCell> cells;
  ScoreCell total;

  const ScoreCell *Find(const std::string &condition, const std::string &role) const;
  /// snr_db,role,frame_error_rate,token_error_rate,utterances + totals row.
  std::string ToCsv() const;
};

/// Formats an SNR for report keys, e.g. 5 -> "5", 2.5 -> "2.5".
std::string SnrLabel(double snr_db);

/// Scores a model over a split. For mixture modes `snrs` fixes the report
/// rows (|snrs| x {high, low}); high/low roles come from the sample
/// metadata. Utterances are independent and may run on `workers` threads.
ScoreReport EvaluateCorpus(const ModelParams &params, std::span<const MixtureSample> samples,
                           EvalMode mode, std::span<const double> snrs, int workers = 1);

/// Scores given posteriors (one entry per sample) without a model.
ScoreReport ScorePosteriors(std::span<const PosteriorStreams> posteriors,
                            std::span<const MixtureSample> samples, EvalMode mode,
                            std::span<const double> snrs);

}  // namespace pit

#endif  // PIT_SCORING_H_
