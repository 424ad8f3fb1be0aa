// pit/network.cc

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

#include <cmath>
#include <cstring>
#include <fstream>

#include "pit/binary-io.h"
#include "pit/errors.h"
#include "pit/random.h"

namespace pit {

namespace {

constexpr char kMagic[4] = {'P', 'I', 'T', 'M'};

// Gate inputs z (1 x 4H) -> new state.
LstmState GatesToState(Graph &g, NodeId z, NodeId c_prev, std::size_t hidden) {
  const NodeId i = g.Sigmoid(g.SliceCols(z, 0, hidden));
  const NodeId f = g.Sigmoid(g.SliceCols(z, hidden, hidden));
  const NodeId cand = g.Tanh(g.SliceCols(z, 2 * hidden, hidden));
  const NodeId o = g.Sigmoid(g.SliceCols(z, 3 * hidden, hidden));
  const NodeId c = g.Add(g.Mul(f, c_prev), g.Mul(i, cand));
  const NodeId h = g.Mul(o, g.Tanh(c));
  return {h, c};
}

// Runs one direction over precomputed input projections (T x 4H, bias
// included). Returns the per-frame hidden rows in time order.
std::vector<NodeId> RunDirection(Graph &g, const LstmNodes &lstm, NodeId projected,
                                 std::size_t frames, bool reverse) {
  const std::size_t hidden = lstm.hidden;
  LstmState state{g.Constant(Matrix(1, hidden)), g.Constant(Matrix(1, hidden))};
  std::vector<NodeId> rows(frames);
  for (std::size_t step = 0; step < frames; ++step) {
    const std::size_t t = reverse ? frames - 1 - step : step;
    const NodeId x_proj = g.RowAt(projected, t);
    const NodeId z = step == 0 ? x_proj
                               : g.Add(x_proj, g.MatMul(state.h, lstm.recurrent_weights));
    state = GatesToState(g, z, state.c, hidden);
    rows[t] = state.h;
  }
  return rows;
}

}  // namespace

ModelConfig ModelConfig::PaperScale(int num_senones) {
  ModelConfig c;
  c.feat_dim = 40;
  c.hidden_dim = 768;
  c.num_layers = 4;
  c.num_streams = 2;
  c.num_senones = num_senones;
  return c;
}

void ModelConfig::Validate() const {
  if (feat_dim < 1 || hidden_dim < 1 || num_layers < 1 || num_streams < 1) {
    throw ValidationError("model config: feat_dim, hidden_dim, num_layers and "
                          "num_streams must all be >= 1");
  }
  if (num_senones < 2) {
    throw ValidationError("model config: num_senones must be >= 2 (silence plus one)");
  }
}

std::vector<Matrix *> ModelParams::Tensors() {
  std::vector<Matrix *> out;
  for (auto &layer : layers) {
    for (LstmParams *dir : {&layer.forward, &layer.backward}) {
      out.push_back(&dir->input_weights);
      out.push_back(&dir->recurrent_weights);
      out.push_back(&dir->bias);
    }
  }
  for (auto &head : heads) {
    out.push_back(&head.weights);
    out.push_back(&head.bias);
  }
  return out;
}

std::vector<const Matrix *> ModelParams::Tensors() const {
  auto mutable_view = const_cast<ModelParams *>(this)->Tensors();
  return {mutable_view.begin(), mutable_view.end()};
}

std::vector<std::string> ModelParams::TensorNames() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (const char *dir : {"fwd", "bwd"}) {
      const std::string prefix = "layer" + std::to_string(l) + "." + dir + ".";
      names.push_back(prefix + "input_weights");
      names.push_back(prefix + "recurrent_weights");
      names.push_back(prefix + "bias");
    }
  }
  for (std::size_t s = 0; s < heads.size(); ++s) {
    names.push_back("head" + std::to_string(s) + ".weights");
    names.push_back("head" + std::to_string(s) + ".bias");
  }
  return names;
}

std::size_t ModelParams::NumScalars() const {
  std::size_t n = 0;
  for (const Matrix *m : Tensors()) n += m->Size();
  return n;
}

ModelParams InitParams(const ModelConfig &config) {
  config.Validate();
  const auto hidden = static_cast<std::size_t>(config.hidden_dim);
  const auto senones = static_cast<std::size_t>(config.num_senones);
  ModelParams p;
  p.config = config;
  std::size_t input_dim = static_cast<std::size_t>(config.feat_dim);
  p.layers.resize(static_cast<std::size_t>(config.num_layers));
  for (auto &layer : p.layers) {
    for (LstmParams *dir : {&layer.forward, &layer.backward}) {
      dir->input_weights = Matrix(input_dim, 4 * hidden);
      dir->recurrent_weights = Matrix(hidden, 4 * hidden);
      dir->bias = Matrix(1, 4 * hidden);
      for (std::size_t c = hidden; c < 2 * hidden; ++c) dir->bias(0, c) = 1.0;
    }
    input_dim = 2 * hidden;
  }
  p.heads.resize(static_cast<std::size_t>(config.num_streams));
  for (auto &head : p.heads) {
    head.weights = Matrix(2 * hidden, senones);
    head.bias = Matrix(1, senones);
  }
  Rng rng(config.seed);
  const auto names = p.TensorNames();
  const auto tensors = p.Tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (names[i].ends_with("bias")) continue;
    for (double &v : tensors[i]->Data()) v = rng.Uniform(-0.05, 0.05);
  }
  return p;
}

std::uint64_t ParamChecksum(const ModelParams &params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Matrix *m : params.Tensors()) {
    for (double v : m->Data()) {
      // Hash the little-endian byte image so checksums agree across hosts.
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      unsigned char bytes[8];
      for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
      h = Fnv1a(bytes, 8, h);
    }
  }
  return h;
}

PosteriorStreams PosteriorStreams::FromLogits(std::vector<Matrix> logits) {
  PosteriorStreams out;
  out.posteriors.reserve(logits.size());
  for (const Matrix &l : logits) out.posteriors.push_back(SoftmaxRows(l));
  out.logits = std::move(logits);
  return out;
}

PosteriorStreams PosteriorStreams::FromPosteriors(std::vector<Matrix> posteriors) {
  PosteriorStreams out;
  out.logits = posteriors;
  for (Matrix &m : out.logits) {
    for (double &v : m.Data()) v = std::log(v);
  }
  out.posteriors = std::move(posteriors);
  return out;
}

std::vector<NodeId> AddParameters(Graph &graph, const ModelParams &params) {
  std::vector<NodeId> ids;
  for (const Matrix *m : params.Tensors()) ids.push_back(graph.Parameter(*m));
  return ids;
}

LstmState LstmCellStep(Graph &graph, const LstmNodes &lstm, NodeId x_t, LstmState prev) {
  const NodeId z = graph.Add(
      graph.Add(graph.MatMul(x_t, lstm.input_weights),
                graph.MatMul(prev.h, lstm.recurrent_weights)),
      lstm.bias);
  return GatesToState(graph, z, prev.c, lstm.hidden);
}

NodeId BlstmLayer(Graph &graph, const LstmNodes &forward, const LstmNodes &backward,
                  NodeId input) {
  const std::size_t frames = graph.Value(input).Rows();
  if (frames == 0) throw ValidationError("blstm_layer: empty input sequence");
  auto project = [&](const LstmNodes &lstm) {
    return graph.AddRowBroadcast(graph.MatMul(input, lstm.input_weights), lstm.bias);
  };
  const std::vector<NodeId> fwd = RunDirection(graph, forward, project(forward), frames, false);
  const std::vector<NodeId> bwd = RunDirection(graph, backward, project(backward), frames, true);
  return graph.ConcatCols(graph.StackRows(fwd), graph.StackRows(bwd));
}

ModelNodes BuildForward(Graph &graph, const ModelParams &params, const Matrix &features) {
  const ModelConfig &cfg = params.config;
  if (features.Cols() != static_cast<std::size_t>(cfg.feat_dim)) {
    throw ValidationError("forward: feature dimension " + std::to_string(features.Cols()) +
                          " does not match model feat_dim " + std::to_string(cfg.feat_dim));
  }
  if (features.Rows() == 0) throw ValidationError("forward: empty feature sequence");
  ModelNodes nodes;
  nodes.params = AddParameters(graph, params);
  const auto hidden = static_cast<std::size_t>(cfg.hidden_dim);
  std::size_t next = 0;
  auto take_lstm = [&]() {
    LstmNodes l;
    l.input_weights = nodes.params[next++];
    l.recurrent_weights = nodes.params[next++];
    l.bias = nodes.params[next++];
    l.hidden = hidden;
    return l;
  };
  NodeId h = graph.Constant(features);
  for (std::size_t layer = 0; layer < params.layers.size(); ++layer) {
    const LstmNodes fwd = take_lstm();
    const LstmNodes bwd = take_lstm();
    h = BlstmLayer(graph, fwd, bwd, h);
  }
  for (std::size_t s = 0; s < params.heads.size(); ++s) {
    const NodeId w = nodes.params[next++];
    const NodeId b = nodes.params[next++];
    nodes.logits.push_back(graph.AddRowBroadcast(graph.MatMul(h, w), b));
  }
  return nodes;
}

PosteriorStreams Forward(const ModelParams &params, const FeatureSequence &features) {
  Graph graph;
  const ModelNodes nodes = BuildForward(graph, params, features.frames);
  std::vector<Matrix> logits;
  for (NodeId id : nodes.logits) logits.push_back(graph.Value(id));
  return PosteriorStreams::FromLogits(std::move(logits));
}

std::vector<Matrix> CollectGradients(const Graph &graph, const ModelNodes &nodes) {
  std::vector<Matrix> grads;
  grads.reserve(nodes.params.size());
  for (NodeId id : nodes.params) grads.push_back(graph.Grad(id));
  return grads;
}

void SaveCheckpoint(const ModelParams &params, const std::filesystem::path &path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  const ModelConfig &c = params.config;
  os.write(kMagic, 4);
  WriteLe<std::uint32_t>(os, kCheckpointVersion);
  for (int v : {c.feat_dim, c.hidden_dim, c.num_layers, c.num_streams, c.num_senones}) {
    WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(v));
  }
  WriteLe<std::uint64_t>(os, c.seed);
  for (const Matrix *m : params.Tensors()) {
    for (double v : m->Data()) WriteLe<double>(os, v);
  }
  if (!os) throw IoError("failed writing checkpoint: " + path.string());
}

ModelParams LoadCheckpoint(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a PITM checkpoint: " + path.string());
  }
  std::uint32_t version = 0;
  if (!ReadLe(is, &version) || version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version in " + path.string());
  }
  std::uint32_t fields[5];
  for (auto &f : fields) {
    if (!ReadLe(is, &f)) throw IoError("truncated checkpoint header: " + path.string());
  }
  ModelConfig c;
  c.feat_dim = static_cast<int>(fields[0]);
  c.hidden_dim = static_cast<int>(fields[1]);
  c.num_layers = static_cast<int>(fields[2]);
  c.num_streams = static_cast<int>(fields[3]);
  c.num_senones = static_cast<int>(fields[4]);
  if (!ReadLe(is, &c.seed)) throw IoError("truncated checkpoint header: " + path.string());
  c.Validate();
  ModelParams params = InitParams(c);
  auto names = params.TensorNames();
  auto tensors = params.Tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    for (double &v : tensors[i]->Data()) {
      if (!ReadLe(is, &v)) {
        throw IoError("truncated checkpoint at " + names[i] + ": " + path.string());
      }
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw IoError("trailing bytes in checkpoint: " + path.string());
  }
  return params;
}

}  // namespace pit
