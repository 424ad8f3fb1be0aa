// pit/tests/tensor-test.cc

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

#include "pit/tensor.h"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "pit/errors.h"
#include "pit/random.h"

namespace pit {
namespace {

// Builds a scalar root from leaf nodes.
using GraphFn = std::function<NodeId(Graph &, const std::vector<NodeId> &)>;

double EvalRoot(const GraphFn &fn, const std::vector<Matrix> &inputs) {
  Graph g;
  std::vector<NodeId> leaves;
  for (const Matrix &m : inputs) leaves.push_back(g.Variable(m));
  return g.Value(fn(g, leaves))(0, 0);
}

std::vector<Matrix> Analytic(const GraphFn &fn, const std::vector<Matrix> &inputs) {
  Graph g;
  std::vector<NodeId> leaves;
  for (const Matrix &m : inputs) leaves.push_back(g.Variable(m));
  g.Backward(fn(g, leaves));
  std::vector<Matrix> grads;
  for (NodeId id : leaves) grads.push_back(g.Grad(id));
  return grads;
}

// Independent central-difference oracle, h = 1e-5.
double MaxRelativeError(const GraphFn &fn, std::vector<Matrix> inputs) {
  const std::vector<Matrix> analytic = Analytic(fn, inputs);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].Size(); ++j) {
      const double saved = inputs[i].Data()[j];
      inputs[i].Data()[j] = saved + h;
      const double up = EvalRoot(fn, inputs);
      inputs[i].Data()[j] = saved - h;
      const double down = EvalRoot(fn, inputs);
      inputs[i].Data()[j] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[i].Data()[j];
      worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-8));
    }
  }
  return worst;
}

Matrix Random(Rng &rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double &v : m.Data()) v = scale * rng.Normal();
  return m;
}

// Weighted sum so that every output entry gets a distinct upstream gradient.
NodeId Project(Graph &g, NodeId x, Rng &rng) {
  const Matrix &v = g.Value(x);
  return g.Sum(g.Mul(x, g.Constant(Random(rng, v.Rows(), v.Cols()))));
}

TEST(TensorTest, MatMulExamples) {
  Graph g;
  const NodeId eye = g.Constant(Matrix{{1, 0}, {0, 1}});
  const NodeId m = g.Constant(Matrix{{3, 4}, {5, 6}});
  EXPECT_EQ(g.Value(g.MatMul(eye, m)), (Matrix{{3, 4}, {5, 6}}));

  Graph h;
  const NodeId a = h.Variable(Matrix{{1, 2}});
  const NodeId b = h.Variable(Matrix{{3}, {4}});
  const NodeId ab = h.MatMul(a, b);
  EXPECT_EQ(h.Value(ab), Matrix{{11}});
  h.Backward(ab);
  EXPECT_EQ(h.Grad(a), (Matrix{{3, 4}}));
  EXPECT_EQ(h.Grad(b), (Matrix{{1}, {2}}));
}

TEST(TensorTest, MatMulShapeErrorNamesShapes) {
  Graph g;
  const NodeId a = g.Constant(Matrix(2, 3));
  const NodeId b = g.Constant(Matrix(2, 3));
  try {
    g.MatMul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError &e) {
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos);
  }
}

TEST(TensorTest, ElementwiseExamples) {
  Graph g;
  const NodeId x = g.Variable(Matrix{{0}});
  EXPECT_EQ(g.Value(g.Sigmoid(x))(0, 0), 0.5);
  EXPECT_EQ(g.Value(g.Tanh(x))(0, 0), 0.0);
  EXPECT_THROW(g.Add(x, g.Constant(Matrix(1, 2))), ShapeError);
  EXPECT_THROW(g.Mul(x, g.Constant(Matrix(2, 1))), ShapeError);

  // Sigmoid slope at 0 against a central difference.
  const auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double numeric = (sigmoid(1e-5) - sigmoid(-1e-5)) / 2e-5;
  Graph h;
  const NodeId y = h.Variable(Matrix{{0}});
  h.Backward(h.Sum(h.Sigmoid(y)));
  EXPECT_NEAR(h.Grad(y)(0, 0), 0.25, 1e-12);
  EXPECT_NEAR(h.Grad(y)(0, 0), numeric, 1e-9);
}

TEST(TensorTest, ConcatColsExamples) {
  Graph g;
  const NodeId b = g.Variable(Matrix{{1, 2}, {3, 4}});
  const NodeId joined = g.ConcatCols(g.Constant(Matrix(2, 0)), b);
  EXPECT_EQ(g.Value(joined), g.Value(b));

  Graph h;
  const NodeId x = h.Variable(Matrix{{1}});
  const NodeId y = h.Variable(Matrix{{2}});
  const NodeId xy = h.ConcatCols(x, y);
  EXPECT_EQ(h.Value(xy), (Matrix{{1, 2}}));
  h.Backward(h.Sum(h.Mul(xy, h.Constant(Matrix{{5, 7}}))));
  EXPECT_EQ(h.Grad(x), Matrix{{5}});
  EXPECT_EQ(h.Grad(y), Matrix{{7}});
  EXPECT_THROW(h.ConcatCols(x, h.Constant(Matrix(2, 1))), ShapeError);
}

TEST(TensorTest, SoftmaxCrossEntropyExamples) {
  Graph g;
  const NodeId logits = g.Variable(Matrix{{0, 0}});
  const std::vector<std::int32_t> label = {0};
  const NodeId ce = g.SoftmaxCrossEntropy(logits, label);
  EXPECT_NEAR(g.Value(ce)(0, 0), std::log(2.0), 1e-15);
  g.Backward(g.Sum(ce));
  EXPECT_NEAR(g.Grad(logits)(0, 0), -0.5, 1e-15);
  EXPECT_NEAR(g.Grad(logits)(0, 1), 0.5, 1e-15);

  // Extended-precision log-sum-exp oracle for a large margin.
  const long double oracle = std::log1p(std::exp(-1000.0L));
  const std::vector<double> big = SoftmaxCrossEntropyPerFrame(Matrix{{1000, 0}}, label);
  EXPECT_TRUE(std::isfinite(big[0]));
  EXPECT_NEAR(big[0], static_cast<double>(oracle), 1e-300);
  const std::vector<double> wrong = SoftmaxCrossEntropyPerFrame(Matrix{{0, 1000}}, label);
  EXPECT_NEAR(wrong[0], 1000.0, 1e-9);

  EXPECT_THROW(SoftmaxCrossEntropyPerFrame(Matrix{{0, 0}}, std::vector<std::int32_t>{2}),
               ValidationError);
  EXPECT_THROW(SoftmaxCrossEntropyPerFrame(Matrix{{0, 0}}, std::vector<std::int32_t>{-1}),
               ValidationError);
  EXPECT_THROW(SoftmaxCrossEntropyPerFrame(Matrix(2, 2), label), ValidationError);
}

TEST(TensorTest, BackwardExamples) {
  Graph g;
  const NodeId x = g.Variable(Matrix{{4}});
  g.Backward(x);
  EXPECT_EQ(g.Grad(x)(0, 0), 1.0);

  Graph h;
  const NodeId a = h.Variable(Matrix{{2}});
  const NodeId b = h.Variable(Matrix{{3}});
  h.Backward(h.Mul(a, b));
  EXPECT_EQ(h.Grad(a)(0, 0), 3.0);
  EXPECT_EQ(h.Grad(b)(0, 0), 2.0);
}

TEST(TensorTest, SharedNodeAccumulates) {
  Graph g;
  const NodeId x = g.Variable(Matrix{{1.5}});
  g.Backward(g.Add(x, x));
  EXPECT_EQ(g.Grad(x)(0, 0), 2.0);
}

TEST(TensorTest, BackwardContract) {
  Graph g;
  const NodeId x = g.Variable(Matrix(2, 2, 1.0));
  EXPECT_THROW(g.Backward(x), ContractError);
  const NodeId s = g.Sum(x);
  g.Backward(s);
  EXPECT_THROW(g.Backward(s), ContractError);
}

TEST(TensorTest, ConstantsAndParametersHaveExpectedGrads) {
  Graph g;
  const Matrix w{{2, 3}};
  const NodeId p = g.Parameter(w);
  const NodeId c = g.Constant(Matrix{{1, 1}});
  EXPECT_EQ(&g.Value(p), &w);  // referenced, not copied
  g.Backward(g.Sum(g.Mul(p, c)));
  EXPECT_EQ(g.Grad(p), (Matrix{{1, 1}}));
  EXPECT_TRUE(g.Grad(c).Empty());
}

TEST(TensorTest, GradShapesMatchData) {
  Rng rng(8);
  Graph g;
  const NodeId a = g.Variable(Random(rng, 3, 4));
  const NodeId b = g.Variable(Random(rng, 4, 2));
  const NodeId y = g.Tanh(g.MatMul(a, b));
  g.Backward(g.Sum(y));
  for (std::size_t i = 0; i < g.NumNodes(); ++i) {
    const ValueNode &n = g.Node(NodeId{static_cast<std::uint32_t>(i)});
    if (n.requires_grad) EXPECT_TRUE(n.grad.SameShape(n.Value()));
    for (NodeId parent : n.parents) EXPECT_LT(parent.index, i);
  }
}

// Every differentiable primitive against finite differences, 20 random
// instances each.
TEST(TensorTest, PrimitivesMatchFiniteDifferences) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.Index(4), k = 1 + rng.Index(4), n = 1 + rng.Index(4);
    Rng proj(100 + trial);
    auto with_proj = [&](auto body) -> GraphFn {
      return [&, body](Graph &g, const std::vector<NodeId> &x) {
        Rng local(100 + trial);
        return Project(g, body(g, x), local);
      };
    };
    const std::vector<std::pair<const char *, std::pair<GraphFn, std::vector<Matrix>>>> cases = {
        {"matmul", {with_proj([](Graph &g, const auto &x) { return g.MatMul(x[0], x[1]); }),
                    {Random(rng, m, k), Random(rng, k, n)}}},
        {"add", {with_proj([](Graph &g, const auto &x) { return g.Add(x[0], x[1]); }),
                 {Random(rng, m, n), Random(rng, m, n)}}},
        {"mul", {with_proj([](Graph &g, const auto &x) { return g.Mul(x[0], x[1]); }),
                 {Random(rng, m, n), Random(rng, m, n)}}},
        {"sigmoid", {with_proj([](Graph &g, const auto &x) { return g.Sigmoid(x[0]); }),
                     {Random(rng, m, n, 2.0)}}},
        {"tanh", {with_proj([](Graph &g, const auto &x) { return g.Tanh(x[0]); }),
                  {Random(rng, m, n, 2.0)}}},
        {"concat", {with_proj([](Graph &g, const auto &x) { return g.ConcatCols(x[0], x[1]); }),
                    {Random(rng, m, k), Random(rng, m, n)}}},
        {"slice", {with_proj([](Graph &g, const auto &x) { return g.SliceCols(x[0], 1, 2); }),
                   {Random(rng, m, 4)}}},
        {"row", {with_proj([](Graph &g, const auto &x) { return g.RowAt(x[0], 1); }),
                 {Random(rng, 3, n)}}},
        {"stack",
         {with_proj([](Graph &g, const auto &x) {
            const std::vector<NodeId> rows = {x[0], x[1], x[0]};
            return g.StackRows(rows);
          }),
          {Random(rng, 1, n), Random(rng, 1, n)}}},
        {"broadcast",
         {with_proj([](Graph &g, const auto &x) { return g.AddRowBroadcast(x[0], x[1]); }),
          {Random(rng, m, n), Random(rng, 1, n)}}},
        {"scale", {with_proj([](Graph &g, const auto &x) { return g.Scale(x[0], -1.7); }),
                   {Random(rng, m, n)}}},
        {"softmax_ce",
         {with_proj([labels = std::vector<std::int32_t>{0, 2, 1}](Graph &g, const auto &x) {
            return g.SoftmaxCrossEntropy(x[0], labels);
          }),
          {Random(rng, 3, 3, 3.0)}}},
    };
    for (const auto &[name, c] : cases) {
      EXPECT_LT(MaxRelativeError(c.first, c.second), 1e-4) << name << " trial " << trial;
    }
  }
}

TEST(TensorTest, SoftmaxRowsSumToOne) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix logits = Random(rng, 5, 1 + rng.Index(9), std::pow(10.0, rng.Uniform(-2, 3)));
    const Matrix p = SoftmaxRows(logits);
    for (std::size_t t = 0; t < p.Rows(); ++t) {
      double s = 0.0;
      for (double v : p.Row(t)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(TensorTest, CrossEntropyFiniteForLargeLogits) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix logits(4, 5);
    for (double &v : logits.Data()) v = rng.Uniform(-1000.0, 1000.0);
    const std::vector<std::int32_t> labels = {0, 1, 2, 4};
    for (double ce : SoftmaxCrossEntropyPerFrame(logits, labels)) {
      EXPECT_TRUE(std::isfinite(ce));
      EXPECT_GE(ce, 0.0);
    }
  }
}

TEST(TensorTest, MeanCrossEntropySumsInOrder) {
  const Matrix logits{{1, 2, 3}, {0, 0, 0}};
  const std::vector<std::int32_t> labels = {2, 1};
  const std::vector<double> per = SoftmaxCrossEntropyPerFrame(logits, labels);
  EXPECT_EQ(MeanCrossEntropy(logits, labels), (per[0] + per[1]) / 2.0);
}

TEST(CheckGradientsTest, Quadratic) {
  const GradientFunction f = [](std::span<const double> x, std::vector<double> *g) {
    if (g != nullptr) *g = {2 * x[0]};
    return x[0] * x[0];
  };
  const std::vector<double> theta = {3.0};
  EXPECT_LT(CheckGradients(f, theta, 1e-5), 1e-9);
}

TEST(CheckGradientsTest, SoftmaxCrossEntropy) {
  Rng rng(12);
  const std::vector<std::int32_t> labels = {1, 2};
  const GradientFunction f = [&](std::span<const double> x, std::vector<double> *grad) {
    Graph g;
    const NodeId logits = g.Variable(Matrix::FromRowMajor(2, 3, x));
    const NodeId root = g.Sum(g.SoftmaxCrossEntropy(logits, labels));
    if (grad != nullptr) {
      g.Backward(root);
      const auto d = g.Grad(logits).Data();
      grad->assign(d.begin(), d.end());
    }
    return g.Value(root)(0, 0);
  };
  std::vector<double> theta(6);
  for (double &v : theta) v = rng.Normal();
  EXPECT_LT(CheckGradients(f, theta), 1e-6);
}

TEST(CheckGradientsTest, DetectsWrongGradient) {
  const GradientFunction f = [](std::span<const double> x, std::vector<double> *g) {
    if (g != nullptr) *g = {3 * x[0]};
    return x[0] * x[0];
  };
  const std::vector<double> theta = {1.0};
  EXPECT_GT(CheckGradients(f, theta), 0.1);
}

TEST(CheckGradientsTest, Errors) {
  const GradientFunction bad = [](std::span<const double>, std::vector<double> *g) {
    if (g != nullptr) *g = {0.0};
    return std::numeric_limits<double>::infinity();
  };
  const std::vector<double> theta = {1.0};
  EXPECT_THROW(CheckGradients(bad, theta), NumericError);
  const GradientFunction ok = [](std::span<const double> x, std::vector<double> *g) {
    if (g != nullptr) *g = {1.0};
    return x[0];
  };
  EXPECT_THROW(CheckGradients(ok, theta, 0.0), ValidationError);
}

}  // namespace
}  // namespace pit
