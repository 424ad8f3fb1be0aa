// pit/tests/network-test.cc

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

#include "pit/network.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "pit/errors.h"
#include "pit/gradcheck.h"
#include "pit/random.h"
#include "pit/tensor.h"

namespace pit {
namespace {

namespace fs = std::filesystem;

ModelConfig Tiny(int streams = 2) {
  ModelConfig c;
  c.feat_dim = 4;
  c.hidden_dim = 3;
  c.num_layers = 1;
  c.num_streams = streams;
  c.num_senones = 3;
  c.seed = 17;
  return c;
}

Matrix Random(Rng &rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double &v : m.Data()) v = scale * rng.Normal();
  return m;
}

LstmParams RandomLstm(Rng &rng, std::size_t d, std::size_t h, double scale) {
  return {Random(rng, d, 4 * h, scale), Random(rng, h, 4 * h, scale), Random(rng, 1, 4 * h, scale)};
}

LstmNodes AddLstm(Graph &g, const LstmParams &p) {
  return {g.Parameter(p.input_weights), g.Parameter(p.recurrent_weights), g.Parameter(p.bias),
          p.recurrent_weights.Rows()};
}

double Sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Plain-loop reference of one LSTM step, gate blocks i, f, g, o.
void ReferenceStep(const LstmParams &p, const std::vector<double> &x, std::vector<double> &h,
                   std::vector<double> &c) {
  const std::size_t H = h.size();
  std::vector<double> z(4 * H);
  for (std::size_t j = 0; j < 4 * H; ++j) {
    double s = p.bias(0, j);
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * p.input_weights(k, j);
    for (std::size_t k = 0; k < H; ++k) s += h[k] * p.recurrent_weights(k, j);
    z[j] = s;
  }
  for (std::size_t j = 0; j < H; ++j) {
    const double i = Sigmoid(z[j]), f = Sigmoid(z[H + j]);
    const double g = std::tanh(z[2 * H + j]), o = Sigmoid(z[3 * H + j]);
    c[j] = f * c[j] + i * g;
    h[j] = o * std::tanh(c[j]);
  }
}

TEST(NetworkTest, InitParamsShapesAndDeterminism) {
  ModelConfig c;  // F=40, hidden=64, N=2, S=2, K=8
  c.seed = 5;
  const ModelParams a = InitParams(c);
  const ModelParams b = InitParams(c);
  EXPECT_EQ(ParamChecksum(a), ParamChecksum(b));
  c.seed = 6;
  EXPECT_NE(ParamChecksum(a), ParamChecksum(InitParams(c)));

  ASSERT_EQ(a.heads.size(), 2u);
  EXPECT_EQ(a.heads[0].weights.Rows(), 128u);
  EXPECT_EQ(a.heads[0].weights.Cols(), 8u);
  EXPECT_EQ(a.layers[0].forward.input_weights.Rows(), 40u);
  EXPECT_EQ(a.layers[1].forward.input_weights.Rows(), 128u);
  EXPECT_EQ(a.layers[1].backward.recurrent_weights.Cols(), 256u);

  const std::vector<std::string> names = a.TensorNames();
  const std::vector<const Matrix *> tensors = a.Tensors();
  ASSERT_EQ(names.size(), tensors.size());
  std::size_t scalars = 0;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    scalars += tensors[i]->Size();
    const bool is_bias = names[i].ends_with("bias");
    const bool lstm = names[i].starts_with("layer");
    for (std::size_t j = 0; j < tensors[i]->Cols(); ++j) {
      for (std::size_t r = 0; r < tensors[i]->Rows(); ++r) {
        const double v = (*tensors[i])(r, j);
        if (!is_bias) {
          EXPECT_GT(v, -0.05);
          EXPECT_LT(v, 0.05);
        } else if (lstm && j >= 64 && j < 128) {
          EXPECT_EQ(v, 1.0) << names[i];  // forget gate
        } else {
          EXPECT_EQ(v, 0.0) << names[i];
        }
      }
    }
  }
  EXPECT_EQ(scalars, a.NumScalars());
}

TEST(NetworkTest, InitWithSingleFeature) {
  ModelConfig c = Tiny();
  c.feat_dim = 1;
  const ModelParams p = InitParams(c);
  bool nonzero = false;
  for (double v : p.layers[0].forward.input_weights.Data()) nonzero = nonzero || v != 0.0;
  EXPECT_TRUE(nonzero);
}

TEST(NetworkTest, ConfigValidation) {
  ModelConfig c = Tiny();
  c.num_senones = 1;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = Tiny();
  c.hidden_dim = 0;
  EXPECT_THROW(c.Validate(), ValidationError);
  const ModelConfig big = ModelConfig::PaperScale(8);
  EXPECT_EQ(big.num_layers, 4);
  EXPECT_EQ(big.hidden_dim, 768);
  EXPECT_NO_THROW(big.Validate());
}

TEST(LstmTest, ZeroWeightsForgetBias) {
  const std::size_t H = 3;
  LstmParams p{Matrix(2, 4 * H), Matrix(H, 4 * H), Matrix(1, 4 * H)};
  for (std::size_t j = H; j < 2 * H; ++j) p.bias(0, j) = 1.0;
  Graph g;
  const LstmNodes lstm = AddLstm(g, p);
  const NodeId x = g.Constant(Matrix{{0.3, -0.7}});

  const LstmState zero{g.Constant(Matrix(1, H)), g.Constant(Matrix(1, H))};
  const LstmState s0 = LstmCellStep(g, lstm, x, zero);
  EXPECT_EQ(g.Value(s0.c), Matrix(1, H));
  EXPECT_EQ(g.Value(s0.h), Matrix(1, H));

  const LstmState prev{g.Constant(Matrix(1, H)), g.Constant(Matrix{{1.0, -2.0, 0.5}})};
  const LstmState s1 = LstmCellStep(g, lstm, x, prev);
  const double f = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_NEAR(f, 0.7311, 1e-4);
  EXPECT_NEAR(g.Value(s1.c)(0, 0), f * 1.0, 1e-15);
  EXPECT_NEAR(g.Value(s1.c)(0, 1), f * -2.0, 1e-15);
  EXPECT_NEAR(g.Value(s1.c)(0, 2), f * 0.5, 1e-15);
}

TEST(LstmTest, MatchesReferenceStep) {
  Rng rng(2);
  const std::size_t d = 4, H = 5;
  const LstmParams p = RandomLstm(rng, d, H, 0.5);
  std::vector<double> h(H), c(H);
  for (double &v : h) v = rng.Normal() * 0.5;
  for (double &v : c) v = rng.Normal();
  std::vector<double> x(d);
  for (double &v : x) v = rng.Normal();

  Graph g;
  const LstmNodes lstm = AddLstm(g, p);
  const LstmState prev{g.Constant(Matrix::FromRowMajor(1, H, h)),
                       g.Constant(Matrix::FromRowMajor(1, H, c))};
  const LstmState next = LstmCellStep(g, lstm, g.Constant(Matrix::FromRowMajor(1, d, x)), prev);
  ReferenceStep(p, x, h, c);
  for (std::size_t j = 0; j < H; ++j) {
    EXPECT_NEAR(g.Value(next.h)(0, j), h[j], 1e-14);
    EXPECT_NEAR(g.Value(next.c)(0, j), c[j], 1e-14);
  }
}

TEST(LstmTest, ShapeMismatch) {
  Rng rng(1);
  const LstmParams p = RandomLstm(rng, 4, 3, 0.1);
  Graph g;
  const LstmNodes lstm = AddLstm(g, p);
  const LstmState zero{g.Constant(Matrix(1, 3)), g.Constant(Matrix(1, 3))};
  EXPECT_THROW(LstmCellStep(g, lstm, g.Constant(Matrix(1, 5)), zero), ShapeError);
}

// Loss of a chain of LSTM steps (or one LSTM over a sequence) as a function
// of the flattened LSTM parameters.
GradientFunction LstmChainLoss(const LstmParams &shape, const Matrix &inputs, bool blstm) {
  return [=](std::span<const double> theta, std::vector<double> *grad) {
    LstmParams p = shape;
    std::size_t k = 0;
    for (Matrix *m : {&p.input_weights, &p.recurrent_weights, &p.bias}) {
      for (double &v : m->Data()) v = theta[k++];
    }
    Graph g;
    const LstmNodes lstm = AddLstm(g, p);
    const std::size_t H = lstm.hidden;
    Rng proj(99);
    NodeId root;
    if (blstm) {
      const NodeId out = BlstmLayer(g, lstm, lstm, g.Constant(inputs));
      root = g.Sum(g.Mul(out, g.Constant(Random(proj, inputs.Rows(), 2 * H))));
    } else {
      LstmState s{g.Constant(Matrix(1, H)), g.Constant(Matrix(1, H))};
      const NodeId x = g.Constant(inputs);
      for (std::size_t t = 0; t < inputs.Rows(); ++t) s = LstmCellStep(g, lstm, g.RowAt(x, t), s);
      root = g.Sum(g.Mul(g.ConcatCols(s.h, s.c), g.Constant(Random(proj, 1, 2 * H))));
    }
    if (grad != nullptr) {
      g.Backward(root);
      grad->clear();
      for (NodeId id : {lstm.input_weights, lstm.recurrent_weights, lstm.bias}) {
        const auto d = g.Grad(id).Data();
        grad->insert(grad->end(), d.begin(), d.end());
      }
    }
    return g.Value(root)(0, 0);
  };
}

std::vector<double> Flatten(const LstmParams &p) {
  std::vector<double> theta;
  for (const Matrix *m : {&p.input_weights, &p.recurrent_weights, &p.bias}) {
    theta.insert(theta.end(), m->Data().begin(), m->Data().end());
  }
  return theta;
}

TEST(LstmTest, FiveChainedStepsGradient) {
  Rng rng(4);
  const LstmParams p = RandomLstm(rng, 3, 4, 0.5);
  const Matrix x = Random(rng, 5, 3);
  EXPECT_LT(CheckGradients(LstmChainLoss(p, x, false), Flatten(p)), 1e-4);
}

TEST(LstmTest, OneLayerTenFramesGradient) {
  Rng rng(5);
  const LstmParams p = RandomLstm(rng, 3, 4, 0.5);
  const Matrix x = Random(rng, 10, 3);
  EXPECT_LT(CheckGradients(LstmChainLoss(p, x, true), Flatten(p)), 1e-4);
}

TEST(BlstmTest, SingleFrame) {
  Rng rng(6);
  const LstmParams fwd = RandomLstm(rng, 2, 3, 0.5), bwd = RandomLstm(rng, 2, 3, 0.5);
  Graph g;
  const NodeId out = BlstmLayer(g, AddLstm(g, fwd), AddLstm(g, bwd), g.Constant(Matrix{{1, -1}}));
  ASSERT_EQ(g.Value(out).Rows(), 1u);
  ASSERT_EQ(g.Value(out).Cols(), 6u);

  // Each half equals one step from the zero state.
  Graph h;
  const LstmState zero{h.Constant(Matrix(1, 3)), h.Constant(Matrix(1, 3))};
  const NodeId x = h.Constant(Matrix{{1, -1}});
  const LstmState f = LstmCellStep(h, AddLstm(h, fwd), x, zero);
  const LstmState b = LstmCellStep(h, AddLstm(h, bwd), x, zero);
  const Matrix got = g.Value(out);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(got(0, j), h.Value(f.h)(0, j), 1e-15);
    EXPECT_NEAR(got(0, 3 + j), h.Value(b.h)(0, j), 1e-15);
  }
}

TEST(BlstmTest, TimeReversalSwapsHalves) {
  Rng rng(7);
  const LstmParams p = RandomLstm(rng, 3, 4, 0.5);
  const Matrix x = Random(rng, 6, 3);
  Matrix reversed(6, 3);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t j = 0; j < 3; ++j) reversed(t, j) = x(5 - t, j);

  Graph g;
  const LstmNodes a = AddLstm(g, p), b = AddLstm(g, p);
  const NodeId out = BlstmLayer(g, a, b, g.Constant(x));
  const NodeId rev = BlstmLayer(g, a, b, g.Constant(reversed));
  const Matrix &o = g.Value(out);
  const Matrix &r = g.Value(rev);
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_NEAR(r(t, j), o(5 - t, 4 + j), 1e-14);
      EXPECT_NEAR(r(t, 4 + j), o(5 - t, j), 1e-14);
    }
  }
}

TEST(BlstmTest, ZeroWeightsGiveZeroOutput) {
  const LstmParams zero{Matrix(3, 8), Matrix(2, 8), Matrix(1, 8)};
  Rng rng(8);
  Graph g;
  const NodeId out = BlstmLayer(g, AddLstm(g, zero), AddLstm(g, zero), g.Constant(Random(rng, 5, 3)));
  EXPECT_EQ(g.Value(out), Matrix(5, 4));
}

TEST(ForwardTest, ShapesAndNormalization) {
  ModelConfig c;
  c.hidden_dim = 8;
  c.seed = 3;
  const ModelParams p = InitParams(c);
  Rng rng(9);
  const FeatureSequence feats{Random(rng, 5, 40), "u"};
  const PosteriorStreams out = Forward(p, feats);
  ASSERT_EQ(out.NumStreams(), 2u);
  EXPECT_EQ(out.NumFrames(), 5u);
  for (const Matrix &post : out.posteriors) {
    ASSERT_EQ(post.Cols(), 8u);
    for (std::size_t t = 0; t < 5; ++t) {
      double s = 0.0;
      for (double v : post.Row(t)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
  EXPECT_EQ(Forward(p, feats).posteriors, out.posteriors);

  c.num_streams = 1;
  EXPECT_EQ(Forward(InitParams(c), feats).NumStreams(), 1u);
  EXPECT_THROW(Forward(p, FeatureSequence{Matrix(5, 39), "bad"}), ValidationError);
}

TEST(ForwardTest, HeadSwapSwapsStreams) {
  ModelConfig c = Tiny();
  c.num_senones = 5;
  ModelParams p = InitParams(c);
  Rng rng(10);
  for (auto &head : p.heads)
    for (double &v : head.weights.Data()) v = rng.Normal();
  const FeatureSequence feats{Random(rng, 7, 4), "u"};
  const PosteriorStreams a = Forward(p, feats);
  std::swap(p.heads[0], p.heads[1]);
  const PosteriorStreams b = Forward(p, feats);
  EXPECT_EQ(a.posteriors[0], b.posteriors[1]);
  EXPECT_EQ(a.posteriors[1], b.posteriors[0]);
  EXPECT_EQ(a.logits[0], b.logits[1]);
}

TEST(ForwardTest, TinyPitModelGradient) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const GradCheckResult r = CheckTinyPitModel(seed);
    EXPECT_LT(r.max_rel_err, 1e-4) << "seed " << seed;
    EXPECT_EQ(r.num_params, InitParams(Tiny()).NumScalars());
  }
  ModelConfig two_layer = Tiny();
  two_layer.num_layers = 2;
  EXPECT_LT(CheckModelGradients(two_layer, 5, 4).max_rel_err, 1e-4);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pit-ckpt-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string ReadBytes(const fs::path &p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  }
  void WriteBytes(const fs::path &p, const std::string &bytes) {
    std::ofstream os(p, std::ios::binary);
    os << bytes;
  }
  fs::path dir_;
};

TEST_F(CheckpointTest, RoundTrip) {
  ModelConfig c = Tiny();
  c.seed = 0xfeedbeefcafeULL;
  const ModelParams p = InitParams(c);
  SaveCheckpoint(p, dir_ / "m.pitm");
  const ModelParams q = LoadCheckpoint(dir_ / "m.pitm");
  EXPECT_EQ(q.config, p.config);
  EXPECT_EQ(ParamChecksum(q), ParamChecksum(p));
  const auto a = p.Tensors();
  const auto b = q.Tensors();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i], *b[i]);

  const std::string bytes = ReadBytes(dir_ / "m.pitm");
  EXPECT_EQ(bytes.substr(0, 4), "PITM");
  EXPECT_EQ(bytes.size(), 4 + 4 + 5 * 4 + 8 + 8 * p.NumScalars());
}

TEST_F(CheckpointTest, RejectsDamagedFiles) {
  const ModelParams p = InitParams(Tiny());
  SaveCheckpoint(p, dir_ / "m.pitm");
  const std::string good = ReadBytes(dir_ / "m.pitm");

  std::string bad = good;
  bad[0] = 'X';
  WriteBytes(dir_ / "magic.pitm", bad);
  EXPECT_THROW(LoadCheckpoint(dir_ / "magic.pitm"), IoError);

  bad = good;
  bad[4] = 9;
  WriteBytes(dir_ / "version.pitm", bad);
  EXPECT_THROW(LoadCheckpoint(dir_ / "version.pitm"), IoError);

  WriteBytes(dir_ / "short.pitm", good.substr(0, good.size() - 3));
  EXPECT_THROW(LoadCheckpoint(dir_ / "short.pitm"), IoError);

  WriteBytes(dir_ / "long.pitm", good + "x");
  EXPECT_THROW(LoadCheckpoint(dir_ / "long.pitm"), IoError);

  EXPECT_THROW(LoadCheckpoint(dir_ / "missing.pitm"), IoError);
}

}  // namespace
}  // namespace pit
