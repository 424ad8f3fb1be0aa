// pit/tests/pit-loss-test.cc

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pit/errors.h"
#include "pit/random.h"
#include "pit/tensor.h"

namespace pit {
namespace {

Matrix Random(Rng &rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double &v : m.Data()) v = scale * rng.Normal();
  return m;
}

std::vector<LabelSequence> RandomTargets(Rng &rng, std::size_t s, std::size_t t, std::size_t k) {
  std::vector<LabelSequence> out(s);
  for (std::size_t u = 0; u < s; ++u) {
    out[u].stream_tag = static_cast<int>(u);
    for (std::size_t i = 0; i < t; ++i) out[u].senones.push_back(static_cast<std::int32_t>(rng.Index(k)));
  }
  return out;
}

LabelSequence Labels(std::vector<std::int32_t> ids) { return {std::move(ids), 0}; }

PosteriorStreams TwoByTwoExample() {
  return PosteriorStreams::FromPosteriors({Matrix{{0.8, 0.2}}, Matrix{{0.3, 0.7}}});
}

TEST(PairwiseCeTest, HandExample) {
  const std::vector<LabelSequence> targets = {Labels({0}), Labels({1})};
  const CePairMatrix m = PairwiseCeMatrix(TwoByTwoExample(), targets);
  // -log of the posterior at each reference label.
  EXPECT_NEAR(m.costs(0, 0), -std::log(0.8), 1e-12);
  EXPECT_NEAR(m.costs(0, 1), -std::log(0.2), 1e-12);
  EXPECT_NEAR(m.costs(1, 0), -std::log(0.3), 1e-12);
  EXPECT_NEAR(m.costs(1, 1), -std::log(0.7), 1e-12);
  EXPECT_NEAR(m.costs(0, 0), 0.2231, 5e-5);
  EXPECT_NEAR(m.costs(0, 1), 1.6094, 5e-5);
  EXPECT_NEAR(m.costs(1, 0), 1.2040, 5e-5);
  EXPECT_NEAR(m.costs(1, 1), 0.3567, 5e-5);
  EXPECT_EQ(m.frame_count, 1u);
}

TEST(PairwiseCeTest, IdenticalTargetsGiveIdenticalColumns) {
  Rng rng(1);
  const PosteriorStreams post = PosteriorStreams::FromLogits({Random(rng, 6, 4), Random(rng, 6, 4)});
  const LabelSequence l = RandomTargets(rng, 1, 6, 4)[0];
  const std::vector<LabelSequence> targets = {l, l};
  const CePairMatrix m = PairwiseCeMatrix(post, targets);
  EXPECT_EQ(m.costs(0, 0), m.costs(0, 1));
  EXPECT_EQ(m.costs(1, 0), m.costs(1, 1));
}

TEST(PairwiseCeTest, UniformPosteriors) {
  const std::size_t T = 7, K = 5;
  const PosteriorStreams post = PosteriorStreams::FromLogits({Matrix(T, K), Matrix(T, K)});
  Rng rng(2);
  const CePairMatrix m = PairwiseCeMatrix(post, RandomTargets(rng, 2, T, K));
  for (double c : m.costs.Data()) EXPECT_NEAR(c, T * std::log(static_cast<double>(K)), 1e-12);
}

TEST(PairwiseCeTest, LengthMismatch) {
  const std::vector<LabelSequence> targets = {Labels({0, 1}), Labels({1})};
  EXPECT_THROW(PairwiseCeMatrix(TwoByTwoExample(), targets), ValidationError);
  const std::vector<LabelSequence> one = {Labels({0})};
  EXPECT_THROW(PairwiseCeMatrix(TwoByTwoExample(), one), ValidationError);
}

TEST(PairwiseCeTest, EvaluationCount) {
  Rng rng(3);
  for (std::size_t s = 1; s <= 4; ++s) {
    std::vector<Matrix> logits;
    for (std::size_t i = 0; i < s; ++i) logits.push_back(Random(rng, 5, 3));
    const auto targets = RandomTargets(rng, s, 5, 3);
    const std::uint64_t before = SequenceCeEvaluations();
    PitLoss(PosteriorStreams::FromLogits(logits), targets);
    EXPECT_EQ(SequenceCeEvaluations() - before, s * s);

    Graph g;
    std::vector<NodeId> nodes;
    for (const Matrix &l : logits) nodes.push_back(g.Variable(l));
    const std::uint64_t mid = SequenceCeEvaluations();
    BuildPitLoss(g, nodes, targets);
    EXPECT_EQ(SequenceCeEvaluations() - mid, s * s);
  }
}

TEST(BestAssignmentTest, Examples) {
  const Assignment a = BestAssignment(Matrix{{1.0, 2.0}, {3.0, 0.5}});
  EXPECT_EQ(a.perm, (std::vector<int>{0, 1}));
  EXPECT_EQ(a.cost, 1.5);
  EXPECT_EQ(AssignmentCost(Matrix{{1.0, 2.0}, {3.0, 0.5}}, std::vector<int>{1, 0}), 5.0);

  const Assignment one = BestAssignment(Matrix{{4.2}});
  EXPECT_EQ(one.perm, std::vector<int>{0});
  EXPECT_EQ(one.cost, 4.2);

  const Assignment tie = BestAssignment(Matrix{{1.0, 2.0}, {2.0, 1.0}});
  EXPECT_EQ(tie.perm, (std::vector<int>{0, 1}));
  const Assignment swapped = BestAssignment(Matrix{{5.0, 1.0}, {1.0, 5.0}});
  EXPECT_EQ(swapped.perm, (std::vector<int>{1, 0}));

  // All-equal 3x3: every permutation ties, the smallest wins.
  EXPECT_EQ(BestAssignment(Matrix(3, 3, 1.0)).perm, (std::vector<int>{0, 1, 2}));
}

TEST(BestAssignmentTest, SizeGuard) {
  EXPECT_NO_THROW(BestAssignment(Matrix(8, 8, 1.0)));
  EXPECT_THROW(BestAssignment(Matrix(9, 9, 1.0)), UnsupportedSizeError);
}

TEST(BestAssignmentTest, MatchesExhaustiveMinimum) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t s = 1 + rng.Index(5);
    Matrix costs(s, s);
    // Small integers make ties common.
    for (double &c : costs.Data()) c = static_cast<double>(rng.Index(4));
    std::vector<int> perm(s);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    std::vector<int> best_perm;
    do {
      double c = 0.0;
      for (std::size_t i = 0; i < s; ++i) c += costs(i, static_cast<std::size_t>(perm[i]));
      if (c < best) {
        best = c;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    const Assignment a = BestAssignment(costs);
    EXPECT_EQ(a.cost, best);
    EXPECT_EQ(a.perm, best_perm);
  }
}

TEST(PitLossTest, HandExample) {
  const std::vector<LabelSequence> targets = {Labels({0}), Labels({1})};
  const LossResult r = PitLoss(TwoByTwoExample(), targets);
  EXPECT_EQ(r.assignment.perm, (std::vector<int>{0, 1}));
  EXPECT_NEAR(r.assignment.cost, -std::log(0.8) - std::log(0.7), 1e-12);
  EXPECT_NEAR(r.assignment.cost, 0.5798, 5e-5);
  EXPECT_NEAR(r.value, 0.2899, 5e-5);

  const std::vector<LabelSequence> swapped = {Labels({1}), Labels({0})};
  const LossResult s = PitLoss(TwoByTwoExample(), swapped);
  EXPECT_EQ(s.value, r.value);
  EXPECT_EQ(s.assignment.perm, (std::vector<int>{1, 0}));
}

TEST(PitLossTest, SingleStreamIsMeanCrossEntropy) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t T = 1 + rng.Index(30), K = 2 + rng.Index(8);
    const Matrix logits = Random(rng, T, K, 3.0);
    const auto targets = RandomTargets(rng, 1, T, K);
    EXPECT_EQ(PitLoss(PosteriorStreams::FromLogits({logits}), targets).value,
              MeanCrossEntropy(logits, targets[0].senones));
  }
}

TEST(PitLossTest, InvarianceAndOptimality) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t S = 1 + rng.Index(4), T = 1 + rng.Index(10), K = 2 + rng.Index(5);
    std::vector<Matrix> logits;
    for (std::size_t s = 0; s < S; ++s) logits.push_back(Random(rng, T, K, 2.0));
    const auto targets = RandomTargets(rng, S, T, K);
    const LossResult base = PitLoss(PosteriorStreams::FromLogits(logits), targets);
    std::vector<int> perm(S);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      std::vector<LabelSequence> t2;
      std::vector<Matrix> l2;
      for (int p : perm) {
        t2.push_back(targets[static_cast<std::size_t>(p)]);
        l2.push_back(logits[static_cast<std::size_t>(p)]);
      }
      EXPECT_NEAR(PitLoss(PosteriorStreams::FromLogits(logits), t2).value, base.value, 1e-12);
      EXPECT_NEAR(PitLoss(PosteriorStreams::FromLogits(l2), targets).value, base.value, 1e-12);
      EXPECT_LE(base.value * static_cast<double>(S * T),
                AssignmentCost(base.per_pair.costs, perm) * (1 + 1e-12));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

// Second-best assignment cost minus the best; 0 when tied.
double AssignmentGap(const Matrix &costs) {
  const std::size_t s = costs.Rows();
  std::vector<int> perm(s);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> totals;
  do {
    totals.push_back(AssignmentCost(costs, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::sort(totals.begin(), totals.end());
  return totals.size() < 2 ? 1.0 : totals[1] - totals[0];
}

TEST(PitLossTest, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t S = 1 + rng.Index(3), T = 1 + rng.Index(5), K = 2 + rng.Index(4);
    std::vector<double> theta(S * T * K);
    for (double &v : theta) v = 2.0 * rng.Normal();
    const auto targets = RandomTargets(rng, S, T, K);
    auto build = [&](std::span<const double> x, std::vector<double> *grad) {
      Graph g;
      std::vector<NodeId> nodes;
      for (std::size_t s = 0; s < S; ++s) {
        nodes.push_back(g.Variable(Matrix::FromRowMajor(T, K, x.subspan(s * T * K, T * K))));
      }
      const PitLossNodes loss = BuildPitLoss(g, nodes, targets);
      if (grad != nullptr) {
        g.Backward(loss.loss);
        grad->clear();
        for (NodeId n : nodes) grad->insert(grad->end(), g.Grad(n).Data().begin(), g.Grad(n).Data().end());
      }
      return std::make_pair(g.Value(loss.loss)(0, 0), loss.result.per_pair.costs);
    };
    if (AssignmentGap(build(theta, nullptr).second) < 1e-3) continue;
    const GradientFunction f = [&](std::span<const double> x, std::vector<double> *grad) {
      return build(x, grad).first;
    };
    EXPECT_LT(CheckGradients(f, theta), 1e-4);
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(PitLossTest, OnlyWinningPairsReceiveGradient) {
  const std::size_t T = 3, K = 4;
  const Matrix l0{{5, 0, 0, 0}, {0, 5, 0, 0}, {0, 0, 5, 0}};
  const Matrix l1{{0, 0, 0, 5}, {0, 0, 5, 0}, {0, 5, 0, 0}};
  // Targets listed in the opposite order of the heads.
  const std::vector<LabelSequence> targets = {Labels({3, 2, 1}), Labels({0, 1, 2})};
  Graph g;
  const std::vector<NodeId> nodes = {g.Variable(l0), g.Variable(l1)};
  const PitLossNodes loss = BuildPitLoss(g, nodes, targets);
  ASSERT_EQ(loss.result.assignment.perm, (std::vector<int>{1, 0}));
  g.Backward(loss.loss);
  for (std::size_t s = 0; s < 2; ++s) {
    const Matrix &logits = s == 0 ? l0 : l1;
    const Matrix p = SoftmaxRows(logits);
    const auto &lab = targets[static_cast<std::size_t>(loss.result.assignment.perm[s])].senones;
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t k = 0; k < K; ++k) {
        const double expect = (p(t, k) - (static_cast<std::int32_t>(k) == lab[t] ? 1.0 : 0.0)) / (2.0 * T);
        EXPECT_NEAR(g.Grad(nodes[s])(t, k), expect, 1e-15);
      }
    }
  }
  EXPECT_NEAR(g.Value(loss.loss)(0, 0), loss.result.value, 1e-15);
}

}  // namespace
}  // namespace pit
