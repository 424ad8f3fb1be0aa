// pit/network.h

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

#ifndef PIT_NETWORK_H_
#define PIT_NETWORK_H_

// Multi-head bidirectional LSTM acoustic model.
//
//   H_0 = Y
//   H_i = [ LSTM_fwd(H_{i-1}) | LSTM_bwd(H_{i-1}) ],   i = 1..N
//   logits_s = H_N * W_s + b_s,  O_s = softmax(logits_s),  s = 1..S
//
// LSTM cells are the standard variant without peepholes or projection. The
// four gate blocks inside every 4H-wide weight/bias are ordered
// input, forget, cell candidate, output.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pit/matrix.h"
#include "pit/tensor.h"

namespace pit {

struct ModelConfig {
  int feat_dim = 40;
  int hidden_dim = 64;
  int num_layers = 2;
  int num_streams = 2;
  int num_senones = 8;
  std::uint64_t seed = 0;

  /// 4 layers of 768 cells per direction, two streams.
  static ModelConfig PaperScale(int num_senones);
  /// Throws ValidationError unless every count is >= 1 and K >= 2.
  void Validate() const;
  friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

struct LstmParams {
  Matrix input_weights;      // d x 4H
  Matrix recurrent_weights;  // H x 4H
  Matrix bias;               // 1 x 4H
};

struct BlstmLayerParams {
  LstmParams forward;
  LstmParams backward;
};

struct OutputHeadParams {
  Matrix weights;  // 2H x K
  Matrix bias;     // 1 x K
};

struct ModelParams {
  ModelConfig config;
  std::vector<BlstmLayerParams> layers;
  std::vector<OutputHeadParams> heads;

  /// All parameter matrices in declaration order: per layer forward then
  /// backward (input weights, recurrent weights, bias), then per head
  /// (weights, bias). Checkpoints and gradient vectors use this order.
  std::vector<Matrix *> Tensors();
  std::vector<const Matrix *> Tensors() const;
  std::vector<std::string> TensorNames() const;
  std::size_t NumScalars() const;
};

/// Weights uniform in (-0.05, 0.05) from `config.seed`; biases zero except the
/// LSTM forget gate, which starts at 1.
ModelParams InitParams(const ModelConfig &config);

/// FNV-1a over the little-endian bytes of all parameters.
std::uint64_t ParamChecksum(const ModelParams &params);

struct FeatureSequence {
  Matrix frames;  // T x F
  std::string utterance_id;
};

struct PosteriorStreams {
  std::vector<Matrix> logits;      // S matrices, T x K
  std::vector<Matrix> posteriors;  // row-softmax of logits

  std::size_t NumStreams() const { return posteriors.size(); }
  std::size_t NumFrames() const { return posteriors.empty() ? 0 : posteriors[0].Rows(); }

  static PosteriorStreams FromLogits(std::vector<Matrix> logits);
  /// Wraps given posteriors; logits are set to their natural log.
  static PosteriorStreams FromPosteriors(std::vector<Matrix> posteriors);
};

// Graph-level building blocks, exposed for tests and gradient checks.

struct LstmNodes {
  NodeId input_weights;
  NodeId recurrent_weights;
  NodeId bias;
  std::size_t hidden = 0;
};

struct LstmState {
  NodeId h;  // 1 x H
  NodeId c;  // 1 x H
};

struct ModelNodes {
  std::vector<NodeId> params;  // declaration order, as ModelParams::Tensors()
  std::vector<NodeId> logits;  // one T x K node per stream
};

/// Registers every parameter of `params` as a Parameter leaf of `graph`.
std::vector<NodeId> AddParameters(Graph &graph, const ModelParams &params);

/// One LSTM step: x_t is 1 x d.
///   c_t = f * c_prev + i * g,  h_t = o * tanh(c_t)
LstmState LstmCellStep(Graph &graph, const LstmNodes &lstm, NodeId x_t, LstmState prev);

/// Runs the forward-in-time and backward-in-time LSTMs from zero states over
/// a T x d input and returns the T x 2H column stack [fwd | bwd].
NodeId BlstmLayer(Graph &graph, const LstmNodes &forward, const LstmNodes &backward,
                  NodeId input);

/// Builds the full model on `graph`. Throws ValidationError if the feature
/// dimension does not match the model.
ModelNodes BuildForward(Graph &graph, const ModelParams &params, const Matrix &features);

/// Inference-only forward pass.
PosteriorStreams Forward(const ModelParams &params, const FeatureSequence &features);

/// Reads parameter gradients off a graph after Backward(), declaration order.
std::vector<Matrix> CollectGradients(const Graph &graph, const ModelNodes &nodes);

/// Versioned binary container: "PITM", u32 version, config as fixed-width
/// little-endian integers, then every parameter as little-endian f64,
/// row-major, in declaration order.
void SaveCheckpoint(const ModelParams &params, const std::filesystem::path &path);
ModelParams LoadCheckpoint(const std::filesystem::path &path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace pit

#endif  // PIT_NETWORK_H_
