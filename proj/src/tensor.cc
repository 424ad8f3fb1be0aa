// pit/tensor.cc

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

#include <algorithm>
#include <cmath>
#include <string>

#include "pit/errors.h"

namespace pit {

namespace {

double SigmoidScalar(double x) {
  // Split by sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void RequireSameShape(const Matrix &a, const Matrix &b, const char *op) {
  if (!a.SameShape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.ShapeString() +
                     " vs " + b.ShapeString());
  }
}

void AddInto(const Matrix &src, Matrix *dst) {
  auto s = src.Data();
  auto d = dst->Data();
  for (std::size_t i = 0; i < s.size(); ++i) d[i] += s[i];
}

}  // namespace

NodeId Graph::Append(ValueNode node) {
  if (node.requires_grad) node.grad = Matrix(node.Value().Rows(), node.Value().Cols());
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Matrix &Graph::GradFor(NodeId id) {
  ValueNode &n = At(id);
  n.grad_touched = true;
  return n.grad;
}

NodeId Graph::Constant(Matrix value) {
  ValueNode n;
  n.op = OpKind::kConstant;
  n.data = std::move(value);
  return Append(std::move(n));
}

NodeId Graph::Variable(Matrix value) {
  ValueNode n;
  n.op = OpKind::kVariable;
  n.data = std::move(value);
  n.requires_grad = true;
  return Append(std::move(n));
}

NodeId Graph::Parameter(const Matrix &value) {
  ValueNode n;
  n.op = OpKind::kParameter;
  n.external = &value;
  n.requires_grad = true;
  return Append(std::move(n));
}

NodeId Graph::MatMul(NodeId a, NodeId b) {
  const Matrix &va = Value(a);
  const Matrix &vb = Value(b);
  if (va.Cols() != vb.Rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + va.ShapeString() +
                     " * " + vb.ShapeString());
  }
  ValueNode n;
  n.op = OpKind::kMatMul;
  n.parents = {a, b};
  n.data = Matrix(va.Rows(), vb.Cols());
  GemmAccumulate(va, vb, &n.data);
  n.requires_grad = Node(a).requires_grad || Node(b).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::Elementwise(ElementwiseKind kind, std::span<const NodeId> args) {
  const bool unary = kind == ElementwiseKind::kSigmoid || kind == ElementwiseKind::kTanh;
  if (args.size() != (unary ? 1u : 2u)) {
    throw ShapeError("elementwise: wrong operand count " + std::to_string(args.size()));
  }
  switch (kind) {
    case ElementwiseKind::kSigmoid: return Sigmoid(args[0]);
    case ElementwiseKind::kTanh: return Tanh(args[0]);
    case ElementwiseKind::kAdd: return Add(args[0], args[1]);
    case ElementwiseKind::kMul: return Mul(args[0], args[1]);
  }
  throw ContractError("elementwise: unknown kind");
}

NodeId Graph::Add(NodeId a, NodeId b) {
  const Matrix &va = Value(a);
  const Matrix &vb = Value(b);
  RequireSameShape(va, vb, "add");
  ValueNode n;
  n.op = OpKind::kAdd;
  n.parents = {a, b};
  n.data = va;
  AddInto(vb, &n.data);
  n.requires_grad = Node(a).requires_grad || Node(b).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::Mul(NodeId a, NodeId b) {
  const Matrix &va = Value(a);
  const Matrix &vb = Value(b);
  RequireSameShape(va, vb, "mul");
  ValueNode n;
  n.op = OpKind::kMul;
  n.parents = {a, b};
  n.data = va;
  auto d = n.data.Data();
  auto s = vb.Data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= s[i];
  n.requires_grad = Node(a).requires_grad || Node(b).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::Sigmoid(NodeId a) {
  ValueNode n;
  n.op = OpKind::kSigmoid;
  n.parents = {a};
  n.data = Value(a);
  for (double &v : n.data.Data()) v = SigmoidScalar(v);
  n.requires_grad = Node(a).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::Tanh(NodeId a) {
  ValueNode n;
  n.op = OpKind::kTanh;
  n.parents = {a};
  n.data = Value(a);
  for (double &v : n.data.Data()) v = std::tanh(v);
  n.requires_grad = Node(a).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::ConcatCols(NodeId a, NodeId b) {
  const Matrix &va = Value(a);
  const Matrix &vb = Value(b);
  if (va.Rows() != vb.Rows()) {
    throw ShapeError("concat_cols: row counts differ, " + va.ShapeString() + " vs " +
                     vb.ShapeString());
  }
  ValueNode n;
  n.op = OpKind::kConcatCols;
  n.parents = {a, b};
  n.offset = va.Cols();
  n.data = Matrix(va.Rows(), va.Cols() + vb.Cols());
  for (std::size_t r = 0; r < va.Rows(); ++r) {
    auto out = n.data.Row(r);
    std::copy(va.Row(r).begin(), va.Row(r).end(), out.begin());
    std::copy(vb.Row(r).begin(), vb.Row(r).end(), out.begin() + va.Cols());
  }
  n.requires_grad = Node(a).requires_grad || Node(b).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::SliceCols(NodeId a, std::size_t offset, std::size_t width) {
  const Matrix &va = Value(a);
  if (offset + width > va.Cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(offset) + ", " +
                     std::to_string(offset + width) + ") outside " + va.ShapeString());
  }
  ValueNode n;
  n.op = OpKind::kSliceCols;
  n.parents = {a};
  n.offset = offset;
  n.data = Matrix(va.Rows(), width);
  for (std::size_t r = 0; r < va.Rows(); ++r) {
    auto src = va.Row(r).subspan(offset, width);
    std::copy(src.begin(), src.end(), n.data.Row(r).begin());
  }
  n.requires_grad = Node(a).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::RowAt(NodeId a, std::size_t row) {
  const Matrix &va = Value(a);
  if (row >= va.Rows()) {
    throw ShapeError("row_at: row " + std::to_string(row) + " outside " + va.ShapeString());
  }
  ValueNode n;
  n.op = OpKind::kRowAt;
  n.parents = {a};
  n.offset = row;
  n.data = Matrix::FromRowMajor(1, va.Cols(), va.Row(row));
  n.requires_grad = Node(a).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::StackRows(std::span<const NodeId> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const std::size_t width = Value(rows[0]).Cols();
  ValueNode n;
  n.op = OpKind::kStackRows;
  n.parents.assign(rows.begin(), rows.end());
  n.data = Matrix(rows.size(), width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Matrix &v = Value(rows[r]);
    if (v.Rows() != 1 || v.Cols() != width) {
      throw ShapeError("stack_rows: expected 1x" + std::to_string(width) + ", got " +
                       v.ShapeString());
    }
    std::copy(v.Data().begin(), v.Data().end(), n.data.Row(r).begin());
    n.requires_grad = n.requires_grad || Node(rows[r]).requires_grad;
  }
  return Append(std::move(n));
}

NodeId Graph::AddRowBroadcast(NodeId a, NodeId row) {
  const Matrix &va = Value(a);
  const Matrix &vr = Value(row);
  if (vr.Rows() != 1 || vr.Cols() != va.Cols()) {
    throw ShapeError("add_row_broadcast: " + va.ShapeString() + " + " + vr.ShapeString());
  }
  ValueNode n;
  n.op = OpKind::kAddRowBroadcast;
  n.parents = {a, row};
  n.data = va;
  for (std::size_t r = 0; r < va.Rows(); ++r) {
    auto out = n.data.Row(r);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += vr(0, c);
  }
  n.requires_grad = Node(a).requires_grad || Node(row).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::Sum(NodeId a) {
  double total = 0.0;
  for (double v : Value(a).Data()) total += v;
  ValueNode n;
  n.op = OpKind::kSum;
  n.parents = {a};
  n.data = Matrix(1, 1, total);
  n.requires_grad = Node(a).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::Scale(NodeId a, double factor) {
  ValueNode n;
  n.op = OpKind::kScale;
  n.parents = {a};
  n.scalar = factor;
  n.data = Value(a);
  for (double &v : n.data.Data()) v *= factor;
  n.requires_grad = Node(a).requires_grad;
  return Append(std::move(n));
}

NodeId Graph::SoftmaxCrossEntropy(NodeId logits, std::span<const std::int32_t> labels) {
  const Matrix &v = Value(logits);
  std::vector<double> ce = SoftmaxCrossEntropyPerFrame(v, labels);
  ValueNode n;
  n.op = OpKind::kSoftmaxCrossEntropy;
  n.parents = {logits};
  n.labels.assign(labels.begin(), labels.end());
  n.data = Matrix::FromRowMajor(ce.size(), 1, ce);
  n.requires_grad = Node(logits).requires_grad;
  if (n.requires_grad) n.cache = SoftmaxRows(v);
  return Append(std::move(n));
}

void Graph::Backward(NodeId root) {
  if (backward_done_) throw ContractError("backward: already run on this graph");
  const Matrix &rv = Value(root);
  if (rv.Rows() != 1 || rv.Cols() != 1) {
    throw ContractError("backward: root must be 1x1, got " + rv.ShapeString());
  }
  backward_done_ = true;
  if (!Node(root).requires_grad) return;
  GradFor(root)(0, 0) += 1.0;
  for (std::size_t i = root.index + 1; i-- > 0;) {
    ValueNode &n = nodes_[i];
    if (!n.requires_grad || !n.grad_touched || n.parents.empty()) continue;
    Propagate(n);
  }
}

void Graph::Propagate(ValueNode &node) {
  const Matrix &g = node.grad;
  auto wants = [this](NodeId p) { return Node(p).requires_grad; };
  switch (node.op) {
    case OpKind::kConstant:
    case OpKind::kVariable:
    case OpKind::kParameter:
      return;
    case OpKind::kMatMul: {
      const NodeId a = node.parents[0], b = node.parents[1];
      if (wants(a)) GemmAccumulateNT(g, Value(b), &GradFor(a));
      if (wants(b)) GemmAccumulateTN(Value(a), g, &GradFor(b));
      return;
    }
    case OpKind::kAdd: {
      for (NodeId p : node.parents) {
        if (wants(p)) AddInto(g, &GradFor(p));
      }
      return;
    }
    case OpKind::kMul: {
      const NodeId a = node.parents[0], b = node.parents[1];
      auto gs = g.Data();
      if (wants(a)) {
        auto vb = Value(b).Data();
        auto ga = GradFor(a).Data();
        for (std::size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] * vb[i];
      }
      if (wants(b)) {
        auto va = Value(a).Data();
        auto gb = GradFor(b).Data();
        for (std::size_t i = 0; i < gs.size(); ++i) gb[i] += gs[i] * va[i];
      }
      return;
    }
    case OpKind::kSigmoid: {
      const NodeId a = node.parents[0];
      if (!wants(a)) return;
      auto y = node.data.Data();
      auto gs = g.Data();
      auto ga = GradFor(a).Data();
      for (std::size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] * y[i] * (1.0 - y[i]);
      return;
    }
    case OpKind::kTanh: {
      const NodeId a = node.parents[0];
      if (!wants(a)) return;
      auto y = node.data.Data();
      auto gs = g.Data();
      auto ga = GradFor(a).Data();
      for (std::size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] * (1.0 - y[i] * y[i]);
      return;
    }
    case OpKind::kConcatCols: {
      const NodeId a = node.parents[0], b = node.parents[1];
      const std::size_t split = node.offset;
      const std::size_t rest = g.Cols() - split;
      for (std::size_t r = 0; r < g.Rows(); ++r) {
        auto row = g.Row(r);
        if (wants(a)) {
          auto ga = GradFor(a).Row(r);
          for (std::size_t c = 0; c < split; ++c) ga[c] += row[c];
        }
        if (wants(b)) {
          auto gb = GradFor(b).Row(r);
          for (std::size_t c = 0; c < rest; ++c) gb[c] += row[split + c];
        }
      }
      return;
    }
    case OpKind::kSliceCols: {
      const NodeId a = node.parents[0];
      if (!wants(a)) return;
      Matrix &ga = GradFor(a);
      for (std::size_t r = 0; r < g.Rows(); ++r) {
        auto src = g.Row(r);
        auto dst = ga.Row(r).subspan(node.offset, g.Cols());
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      }
      return;
    }
    case OpKind::kRowAt: {
      const NodeId a = node.parents[0];
      if (!wants(a)) return;
      auto dst = GradFor(a).Row(node.offset);
      auto src = g.Row(0);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      return;
    }
    case OpKind::kStackRows: {
      for (std::size_t r = 0; r < node.parents.size(); ++r) {
        const NodeId p = node.parents[r];
        if (!wants(p)) continue;
        auto dst = GradFor(p).Row(0);
        auto src = g.Row(r);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      }
      return;
    }
    case OpKind::kAddRowBroadcast: {
      const NodeId a = node.parents[0], row = node.parents[1];
      if (wants(a)) AddInto(g, &GradFor(a));
      if (wants(row)) {
        auto dst = GradFor(row).Row(0);
        for (std::size_t r = 0; r < g.Rows(); ++r) {
          auto src = g.Row(r);
          for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
        }
      }
      return;
    }
    case OpKind::kSum: {
      const NodeId a = node.parents[0];
      if (!wants(a)) return;
      const double up = g(0, 0);
      for (double &v : GradFor(a).Data()) v += up;
      return;
    }
    case OpKind::kScale: {
      const NodeId a = node.parents[0];
      if (!wants(a)) return;
      auto gs = g.Data();
      auto ga = GradFor(a).Data();
      for (std::size_t i = 0; i < gs.size(); ++i) ga[i] += gs[i] * node.scalar;
      return;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      const NodeId a = node.parents[0];
      if (!wants(a)) return;
      Matrix &ga = GradFor(a);
      for (std::size_t t = 0; t < node.cache.Rows(); ++t) {
        const double up = g(t, 0);
        if (up == 0.0) continue;
        auto p = node.cache.Row(t);
        auto dst = ga.Row(t);
        for (std::size_t k = 0; k < p.size(); ++k) dst[k] += up * p[k];
        dst[node.labels[t]] -= up;
      }
      return;
    }
  }
}

Matrix SoftmaxRows(const Matrix &logits) {
  Matrix out(logits.Rows(), logits.Cols());
  for (std::size_t r = 0; r < logits.Rows(); ++r) {
    auto in = logits.Row(r);
    auto o = out.Row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      o[k] = std::exp(in[k] - mx);
      z += o[k];
    }
    for (double &v : o) v /= z;
  }
  return out;
}

std::vector<double> SoftmaxCrossEntropyPerFrame(const Matrix &logits,
                                                std::span<const std::int32_t> labels) {
  if (labels.size() != logits.Rows()) {
    throw ValidationError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(logits.Rows()) + " frames");
  }
  std::vector<double> ce(logits.Rows());
  for (std::size_t t = 0; t < logits.Rows(); ++t) {
    const std::int32_t label = labels[t];
    if (label < 0 || static_cast<std::size_t>(label) >= logits.Cols()) {
      throw ValidationError("softmax_cross_entropy: label " + std::to_string(label) +
                            " at frame " + std::to_string(t) + " outside [0, " +
                            std::to_string(logits.Cols()) + ")");
    }
    auto in = logits.Row(t);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (double v : in) z += std::exp(v - mx);
    ce[t] = std::log(z) + mx - in[label];
  }
  return ce;
}

double MeanCrossEntropy(const Matrix &logits, std::span<const std::int32_t> labels) {
  const std::vector<double> ce = SoftmaxCrossEntropyPerFrame(logits, labels);
  double total = 0.0;
  for (double v : ce) total += v;
  return total / static_cast<double>(ce.size());
}

double CheckGradients(const GradientFunction &f, std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw ValidationError("check_gradients: step must be positive");
  std::vector<double> analytic;
  const double f0 = f(theta, &analytic);
  if (!std::isfinite(f0)) throw NumericError("check_gradients: f(theta) is not finite");
  if (analytic.size() != theta.size()) {
    throw ShapeError("check_gradients: gradient has " + std::to_string(analytic.size()) +
                     " entries for " + std::to_string(theta.size()) + " parameters");
  }
  std::vector<double> probe(theta.begin(), theta.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double fp = f(probe, nullptr);
    probe[i] = saved - h;
    const double fm = f(probe, nullptr);
    probe[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("check_gradients: non-finite value perturbing coordinate " +
                         std::to_string(i));
    }
    const double central = (fp - fm) / (2.0 * h);
    const double denom = std::max(std::abs(analytic[i]) + std::abs(central), 1e-8);
    worst = std::max(worst, std::abs(analytic[i] - central) / denom);
  }
  return worst;
}

}  // namespace pit
