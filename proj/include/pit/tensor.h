// pit/tensor.h

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

#ifndef PIT_TENSOR_H_
#define PIT_TENSOR_H_

// Minimal reverse-mode automatic differentiation over dense 2-D matrices.
//
// A Graph is an append-only tape of ValueNodes. Every operation appends one
// node whose parents were created earlier, so construction order is a
// topological order and Backward() is a single reverse sweep. Gradients
// accumulate (sum) into every node that requires them; nothing is zeroed
// automatically. One Graph per utterance; a Graph must not be shared between
// threads, but several graphs may reference the same Parameter matrices
// concurrently since parameters are only read.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pit/matrix.h"

namespace pit {

/// Handle of a node inside one Graph.
struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class OpKind {
  kConstant,
  kVariable,
  kParameter,
  kMatMul,
  kAdd,
  kMul,
  kSigmoid,
  kTanh,
  kConcatCols,
  kSliceCols,
  kRowAt,
  kStackRows,
  kAddRowBroadcast,
  kSum,
  kScale,
  kSoftmaxCrossEntropy,
};

enum class ElementwiseKind { kSigmoid, kTanh, kAdd, kMul };

struct ValueNode {
  OpKind op = OpKind::kConstant;
  std::vector<NodeId> parents;
  Matrix data;
  // kParameter nodes read their value from caller-owned storage.
  const Matrix *external = nullptr;
  Matrix grad;
  bool requires_grad = false;
  bool grad_touched = false;
  // Op-specific attributes.
  std::size_t offset = 0;
  double scalar = 0.0;
  std::vector<std::int32_t> labels;
  Matrix cache;  // softmax probabilities for kSoftmaxCrossEntropy

  const Matrix &Value() const { return external != nullptr ? *external : data; }
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;
  Graph(Graph &&) = default;
  Graph &operator=(Graph &&) = default;

  // Leaves.
  NodeId Constant(Matrix value);
  NodeId Variable(Matrix value);
  /// References `value` without copying; it must outlive the graph.
  NodeId Parameter(const Matrix &value);

  NodeId MatMul(NodeId a, NodeId b);
  NodeId Elementwise(ElementwiseKind kind, std::span<const NodeId> args);
  NodeId Add(NodeId a, NodeId b);
  NodeId Mul(NodeId a, NodeId b);
  NodeId Sigmoid(NodeId a);
  NodeId Tanh(NodeId a);
  NodeId ConcatCols(NodeId a, NodeId b);
  /// Columns [offset, offset + width) of `a`.
  NodeId SliceCols(NodeId a, std::size_t offset, std::size_t width);
  /// Row `row` of `a` as a 1 x cols node.
  NodeId RowAt(NodeId a, std::size_t row);
  /// Stacks 1 x d row nodes into a rows.size() x d node.
  NodeId StackRows(std::span<const NodeId> rows);
  /// a (m x n) plus the 1 x n row vector added to every row.
  NodeId AddRowBroadcast(NodeId a, NodeId row);
  /// Sum of all entries, 1 x 1.
  NodeId Sum(NodeId a);
  NodeId Scale(NodeId a, double factor);
  /// Fused row softmax + cross entropy. Returns a T x 1 node of per-frame
  /// -log softmax(logits[t])[labels[t]]; backward yields
  /// upstream[t] * (softmax(logits[t]) - onehot(labels[t])).
  NodeId SoftmaxCrossEntropy(NodeId logits, std::span<const std::int32_t> labels);

  /// Reverse sweep from a 1 x 1 root. May be called once per graph.
  void Backward(NodeId root);

  // References stay valid only until the next node is appended.
  const Matrix &Value(NodeId id) const { return nodes_[id.index].Value(); }
  const Matrix &Grad(NodeId id) const { return nodes_[id.index].grad; }
  const ValueNode &Node(NodeId id) const { return nodes_[id.index]; }
  std::size_t NumNodes() const { return nodes_.size(); }

 private:
  NodeId Append(ValueNode node);
  ValueNode &At(NodeId id) { return nodes_[id.index]; }
  Matrix &GradFor(NodeId id);
  void Propagate(ValueNode &node);

  std::vector<ValueNode> nodes_;
  bool backward_done_ = false;
};

/// Row-wise softmax with max shift.
Matrix SoftmaxRows(const Matrix &logits);

/// Per-frame -log softmax(logits[t])[labels[t]] via max-shifted log-sum-exp.
/// Throws ValidationError on labels outside [0, cols) or a length mismatch.
std::vector<double> SoftmaxCrossEntropyPerFrame(
    const Matrix &logits, std::span<const std::int32_t> labels);

/// Mean of SoftmaxCrossEntropyPerFrame, summed in frame order then divided.
double MeanCrossEntropy(const Matrix &logits, std::span<const std::int32_t> labels);

/// Scalar objective with optional analytic gradient output. When `grad` is
/// non-null it must be resized to theta.size() and filled.
using GradientFunction =
    std::function<double(std::span<const double> theta, std::vector<double> *grad)>;

/// Compares the analytic gradient of `f` at `theta` with central differences
/// of step `h`. Returns max_i |g_a - g_c| / max(|g_a| + |g_c|, 1e-8).
double CheckGradients(const GradientFunction &f, std::span<const double> theta,
                      double h = 1e-5);

}  // namespace pit

#endif  // PIT_TENSOR_H_
