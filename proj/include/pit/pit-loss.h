// pit/pit-loss.h

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

#ifndef PIT_PIT_LOSS_H_
#define PIT_PIT_LOSS_H_

// Permutation invariant cross entropy.
//
// For S output heads and S target label streams over T frames:
//
//   costs[s][u] = sum_t CE(labels_u[t], O_s[t])
//   J = min over permutations p of sum_s costs[s][p[s]]  /  (S * T)
//
// The pairwise matrix is built once (S^2 sequence CE evaluations) and the
// minimum is taken by enumerating the S! permutations. Whole-sequence costs
// force every frame of one talker onto the same head. Only the winning
// (head, target) pairs receive gradient.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pit/matrix.h"
#include "pit/network.h"
#include "pit/tensor.h"

namespace pit {

/// Largest stream count accepted by the permutation search.
inline constexpr std::size_t kMaxStreams = 8;

struct LabelSequence {
  std::vector<std::int32_t> senones;
  int stream_tag = 0;

  std::size_t Size() const { return senones.size(); }
  friend bool operator==(const LabelSequence &, const LabelSequence &) = default;
};

struct CePairMatrix {
  Matrix costs;  // S x S; row = output head, column = target stream
  std::size_t frame_count = 0;
};

/// perm[s] is the target stream assigned to output head s.
struct Assignment {
  std::vector<int> perm;
  double cost = 0.0;
};

struct LossResult {
  double value = 0.0;
  Assignment assignment;
  CePairMatrix per_pair;
};

CePairMatrix PairwiseCeMatrix(const PosteriorStreams &posteriors,
                              std::span<const LabelSequence> targets);

/// Minimum-cost permutation by enumeration; ties go to the lexicographically
/// smallest permutation. Throws UnsupportedSizeError for S > kMaxStreams.
Assignment BestAssignment(const Matrix &costs);

/// Total cost of a fixed assignment, summed in head order.
double AssignmentCost(const Matrix &costs, std::span<const int> perm);

LossResult PitLoss(const PosteriorStreams &posteriors, std::span<const LabelSequence> targets);

struct PitLossNodes {
  NodeId loss;  // 1 x 1 root for Graph::Backward
  LossResult result;
};

/// Graph version used for training: builds the S^2 fused CE nodes, selects
/// the best assignment from their values and returns a root that depends on
/// the winning pairs only, scaled by 1 / (S * T).
PitLossNodes BuildPitLoss(Graph &graph, std::span<const NodeId> logits,
                          std::span<const LabelSequence> targets);

/// Number of sequence-level CE evaluations performed on this thread.
std::uint64_t SequenceCeEvaluations();

}  // namespace pit

#endif  // PIT_PIT_LOSS_H_
