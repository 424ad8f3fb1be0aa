// pit/scoring.cc

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

#include "pit/scoring.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>

#include "pit/errors.h"
#include "pit/mixer.h"
#include "pit/parallel.h"
#include "pit/pit-loss.h"

namespace pit {

namespace {

constexpr const char *kHigh = "high";
constexpr const char *kLow = "low";
constexpr const char *kClean = "clean";

ScoreCell &CellFor(ScoreReport &report, const std::string &condition, const std::string &role) {
  for (ScoreCell &c : report.cells) {
    if (c.condition == condition && c.role == role) return c;
  }
  throw ValidationError("score: no report cell for condition " + condition + " role " + role);
}

void AddStream(ScoreCell &cell, std::span<const std::int32_t> ref, std::size_t frame_errors,
               std::size_t token_errors) {
  cell.frame_errors += frame_errors;
  cell.frames += ref.size();
  cell.token_errors += token_errors;
  cell.ref_tokens += CollapseTokens(ref).size();
}

std::vector<IdSequence> References(const MixtureSample &s) {
  std::vector<IdSequence> refs;
  refs.reserve(s.targets.size());
  for (const LabelSequence &t : s.targets) refs.push_back(t.senones);
  return refs;
}

}  // namespace

std::vector<IdSequence> FrameDecode(const PosteriorStreams &posteriors) {
  std::vector<IdSequence> out;
  out.reserve(posteriors.NumStreams());
  for (const Matrix &p : posteriors.posteriors) {
    IdSequence ids(p.Rows());
    for (std::size_t t = 0; t < p.Rows(); ++t) {
      auto row = p.Row(t);
      // max_element returns the first maximum, i.e. the lowest id on ties.
      ids[t] = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    out.push_back(std::move(ids));
  }
  return out;
}

IdSequence CollapseTokens(std::span<const std::int32_t> frame_ids) {
  IdSequence tokens;
  for (std::size_t t = 0; t < frame_ids.size(); ++t) {
    if (t > 0 && frame_ids[t] == frame_ids[t - 1]) continue;
    if (frame_ids[t] != kSilenceSenone) tokens.push_back(frame_ids[t]);
  }
  return tokens;
}

std::size_t EditDistance(std::span<const std::int32_t> hyp, std::span<const std::int32_t> ref) {
  std::vector<std::size_t> prev(ref.size() + 1), cur(ref.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

std::size_t StreamErrors(std::span<const std::int32_t> hyp, std::span<const std::int32_t> ref,
                         ScoreMetric metric) {
  if (metric == ScoreMetric::kToken) {
    return EditDistance(CollapseTokens(hyp), CollapseTokens(ref));
  }
  if (hyp.size() != ref.size()) {
    throw ValidationError("frame scoring: hypothesis has " + std::to_string(hyp.size()) +
                          " frames, reference " + std::to_string(ref.size()));
  }
  std::size_t errors = 0;
  for (std::size_t t = 0; t < hyp.size(); ++t) errors += hyp[t] != ref[t] ? 1 : 0;
  return errors;
}

PairwiseScoreResult PairwiseScore(std::span<const IdSequence> hyps,
                                  std::span<const IdSequence> refs, ScoreMetric metric) {
  const std::size_t streams = refs.size();
  if (hyps.size() != streams) {
    throw ValidationError("pairwise_score: " + std::to_string(hyps.size()) + " hypotheses for " +
                          std::to_string(streams) + " references");
  }
  if (streams == 0) return {};
  if (streams > kMaxStreams) {
    throw UnsupportedSizeError("pairwise_score: " + std::to_string(streams) + " streams");
  }
  // errors[h][r], computed once.
  std::vector<std::vector<std::size_t>> pair(streams, std::vector<std::size_t>(streams));
  for (std::size_t h = 0; h < streams; ++h) {
    for (std::size_t r = 0; r < streams; ++r) pair[h][r] = StreamErrors(hyps[h], refs[r], metric);
  }
  std::vector<int> perm(streams);
  std::iota(perm.begin(), perm.end(), 0);
  PairwiseScoreResult best;
  best.total = std::numeric_limits<std::size_t>::max();
  do {
    std::size_t total = 0;
    for (std::size_t h = 0; h < streams; ++h) total += pair[h][static_cast<std::size_t>(perm[h])];
    if (total < best.total) {
      best.total = total;
      best.perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.errors.assign(streams, 0);
  for (std::size_t h = 0; h < streams; ++h) {
    const auto r = static_cast<std::size_t>(best.perm[h]);
    best.errors[r] = pair[h][r];
  }
  return best;
}

double ScoreCell::FrameErrorRate() const {
  return frames == 0 ? 0.0 : static_cast<double>(frame_errors) / static_cast<double>(frames);
}

double ScoreCell::TokenErrorRate() const {
  if (ref_tokens == 0) {
    return token_errors == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(token_errors) / static_cast<double>(ref_tokens);
}

const ScoreCell *ScoreReport::Find(const std::string &condition, const std::string &role) const {
  for (const ScoreCell &c : cells) {
    if (c.condition == condition && c.role == role) return &c;
  }
  return nullptr;
}

std::string ScoreReport::ToCsv() const {
  std::string out = "snr_db,role,frame_error_rate,token_error_rate,utterances\n";
  char line[256];
  for (const ScoreCell *c : [&] {
         std::vector<const ScoreCell *> rows;
         for (const ScoreCell &cell : cells) rows.push_back(&cell);
         rows.push_back(&total);
         return rows;
       }()) {
    std::snprintf(line, sizeof line, "%s,%s,%.6f,%.6f,%zu\n", c->condition.c_str(),
                  c->role.c_str(), c->FrameErrorRate(), c->TokenErrorRate(), c->utterances);
    out += line;
  }
  return out;
}

std::string SnrLabel(double snr_db) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", snr_db);
  return buf;
}

ScoreReport ScorePosteriors(std::span<const PosteriorStreams> posteriors,
                            std::span<const MixtureSample> samples, EvalMode mode,
                            std::span<const double> snrs) {
  if (posteriors.size() != samples.size()) {
    throw ValidationError("score: " + std::to_string(posteriors.size()) + " outputs for " +
                          std::to_string(samples.size()) + " samples");
  }
  ScoreReport report;
  if (mode == EvalMode::kSingleOnClean) {
    report.cells.push_back({kClean, kClean});
  } else {
    for (double snr : snrs) {
      report.cells.push_back({SnrLabel(snr), kHigh});
      report.cells.push_back({SnrLabel(snr), kLow});
    }
  }

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const MixtureSample &s = samples[i];
    const std::vector<IdSequence> hyps = FrameDecode(posteriors[i]);
    const std::vector<IdSequence> refs = References(s);
    if (mode == EvalMode::kSingleOnClean) {
      if (refs.size() != 1 || hyps.size() != 1) {
        throw ValidationError("single-on-clean scoring needs one stream per utterance");
      }
      const auto frame = PairwiseScore(hyps, refs, ScoreMetric::kFrame);
      const auto token = PairwiseScore(hyps, refs, ScoreMetric::kToken);
      ScoreCell &cell = CellFor(report, kClean, kClean);
      AddStream(cell, refs[0], frame.errors[0], token.errors[0]);
      ++cell.utterances;
      continue;
    }
    if (!s.snr_db) {
      throw ValidationError("score: sample " + s.features.utterance_id + " has no SNR");
    }
    const std::string condition = SnrLabel(*s.snr_db);
    std::vector<std::size_t> frame_errors(refs.size()), token_errors(refs.size());
    if (mode == EvalMode::kPit) {
      const auto frame = PairwiseScore(hyps, refs, ScoreMetric::kFrame);
      const auto token = PairwiseScore(hyps, refs, ScoreMetric::kToken);
      frame_errors = frame.errors;
      token_errors = token.errors;
    } else {
      if (hyps.size() != 1) {
        throw ValidationError("single-on-mixture scoring needs a one-stream model");
      }
      for (std::size_t r = 0; r < refs.size(); ++r) {
        frame_errors[r] = StreamErrors(hyps[0], refs[r], ScoreMetric::kFrame);
        token_errors[r] = StreamErrors(hyps[0], refs[r], ScoreMetric::kToken);
      }
    }
    for (std::size_t r = 0; r < refs.size(); ++r) {
      const bool high = static_cast<int>(r) == s.high_energy_speaker;
      ScoreCell &cell = CellFor(report, condition, high ? kHigh : kLow);
      AddStream(cell, refs[r], frame_errors[r], token_errors[r]);
      ++cell.utterances;
    }
  }

  report.total.condition = "all";
  report.total.role = "all";
  for (const ScoreCell &c : report.cells) {
    report.total.frame_errors += c.frame_errors;
    report.total.frames += c.frames;
    report.total.token_errors += c.token_errors;
    report.total.ref_tokens += c.ref_tokens;
  }
  report.total.utterances = samples.size();
  return report;
}

ScoreReport EvaluateCorpus(const ModelParams &params, std::span<const MixtureSample> samples,
                           EvalMode mode, std::span<const double> snrs, int workers) {
  const int streams = params.config.num_streams;
  if (mode != EvalMode::kPit && streams != 1) {
    throw ValidationError("single-head evaluation needs a one-stream model, got " +
                          std::to_string(streams));
  }
  for (const MixtureSample &s : samples) {
    if (mode == EvalMode::kPit && s.targets.size() != static_cast<std::size_t>(streams)) {
      throw ValidationError("utterance " + s.features.utterance_id + " has " +
                            std::to_string(s.targets.size()) + " references for a " +
                            std::to_string(streams) + "-stream model");
    }
  }
  std::vector<PosteriorStreams> outputs(samples.size());
  ParallelFor(samples.size(), workers,
              [&](std::size_t i) { outputs[i] = Forward(params, samples[i].features); });
  return ScorePosteriors(outputs, samples, mode, snrs);
}

}  // namespace pit
