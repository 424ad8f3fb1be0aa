// pit/pit-loss.cc

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

#include "pit/pit-loss.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pit/errors.h"

namespace pit {

namespace {

thread_local std::uint64_t sequence_ce_evaluations = 0;

void ValidateTargets(std::size_t streams, std::size_t frames,
                     std::span<const LabelSequence> targets) {
  if (targets.size() != streams) {
    throw ValidationError("pit loss: " + std::to_string(targets.size()) +
                          " target streams for " + std::to_string(streams) + " outputs");
  }
  for (std::size_t u = 0; u < targets.size(); ++u) {
    if (targets[u].Size() != frames) {
      throw ValidationError("pit loss: target stream " + std::to_string(u) + " has " +
                            std::to_string(targets[u].Size()) + " labels, posteriors have " +
                            std::to_string(frames) + " frames");
    }
  }
}

double SequenceCe(const Matrix &logits, const LabelSequence &target) {
  ++sequence_ce_evaluations;
  double total = 0.0;
  for (double v : SoftmaxCrossEntropyPerFrame(logits, target.senones)) total += v;
  return total;
}

}  // namespace

std::uint64_t SequenceCeEvaluations() { return sequence_ce_evaluations; }

CePairMatrix PairwiseCeMatrix(const PosteriorStreams &posteriors,
                              std::span<const LabelSequence> targets) {
  const std::size_t streams = posteriors.NumStreams();
  const std::size_t frames = posteriors.NumFrames();
  ValidateTargets(streams, frames, targets);
  CePairMatrix out;
  out.frame_count = frames;
  out.costs = Matrix(streams, streams);
  for (std::size_t s = 0; s < streams; ++s) {
    for (std::size_t u = 0; u < streams; ++u) {
      out.costs(s, u) = SequenceCe(posteriors.logits[s], targets[u]);
    }
  }
  return out;
}

double AssignmentCost(const Matrix &costs, std::span<const int> perm) {
  double total = 0.0;
  for (std::size_t s = 0; s < perm.size(); ++s) {
    total += costs(s, static_cast<std::size_t>(perm[s]));
  }
  return total;
}

Assignment BestAssignment(const Matrix &costs) {
  const std::size_t streams = costs.Rows();
  if (costs.Cols() != streams) {
    throw ShapeError("best_assignment: cost matrix must be square, got " + costs.ShapeString());
  }
  if (streams == 0) throw ValidationError("best_assignment: empty cost matrix");
  if (streams > kMaxStreams) {
    throw UnsupportedSizeError("best_assignment: " + std::to_string(streams) +
                               " streams exceeds the supported maximum of " +
                               std::to_string(kMaxStreams));
  }
  std::vector<int> perm(streams);
  std::iota(perm.begin(), perm.end(), 0);
  // next_permutation walks lexicographic order, so keeping only strict
  // improvements leaves the smallest permutation among ties.
  Assignment best{perm, AssignmentCost(costs, perm)};
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double c = AssignmentCost(costs, perm);
    if (c < best.cost) best = {perm, c};
  }
  return best;
}

LossResult PitLoss(const PosteriorStreams &posteriors, std::span<const LabelSequence> targets) {
  LossResult r;
  r.per_pair = PairwiseCeMatrix(posteriors, targets);
  r.assignment = BestAssignment(r.per_pair.costs);
  r.value = r.assignment.cost /
            static_cast<double>(posteriors.NumStreams() * r.per_pair.frame_count);
  return r;
}

PitLossNodes BuildPitLoss(Graph &graph, std::span<const NodeId> logits,
                          std::span<const LabelSequence> targets) {
  const std::size_t streams = logits.size();
  if (streams == 0) throw ValidationError("pit loss: no output streams");
  const std::size_t frames = graph.Value(logits[0]).Rows();
  ValidateTargets(streams, frames, targets);
  if (streams > kMaxStreams) {
    throw UnsupportedSizeError("pit loss: " + std::to_string(streams) + " streams");
  }

  PitLossNodes out;
  CePairMatrix &pairs = out.result.per_pair;
  pairs.frame_count = frames;
  pairs.costs = Matrix(streams, streams);
  std::vector<NodeId> pair_sums(streams * streams);
  for (std::size_t s = 0; s < streams; ++s) {
    for (std::size_t u = 0; u < streams; ++u) {
      ++sequence_ce_evaluations;
      const NodeId ce = graph.SoftmaxCrossEntropy(logits[s], targets[u].senones);
      const NodeId total = graph.Sum(ce);
      pair_sums[s * streams + u] = total;
      pairs.costs(s, u) = graph.Value(total)(0, 0);
    }
  }
  out.result.assignment = BestAssignment(pairs.costs);
  const auto &perm = out.result.assignment.perm;
  NodeId total = pair_sums[static_cast<std::size_t>(perm[0])];
  for (std::size_t s = 1; s < streams; ++s) {
    total = graph.Add(total, pair_sums[s * streams + static_cast<std::size_t>(perm[s])]);
  }
  const double norm = static_cast<double>(streams * frames);
  out.loss = graph.Scale(total, 1.0 / norm);
  out.result.value = out.result.assignment.cost / norm;
  if (!std::isfinite(out.result.value)) throw NumericError("pit loss: non-finite value");
  return out;
}

}  // namespace pit
