#include "alignbench/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace alignbench {
namespace {

enum class Broadcast { Full, Row, Col, Scalar };

Broadcast broadcast_kind(const RealMatrix& a, const RealMatrix& b, const char* op) {
  if (a.same_shape(b)) return Broadcast::Full;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::Col;
  throw DimensionError(fmt::format("{}: cannot broadcast {} onto {}", op, b.shape_string(),
                                   a.shape_string()));
}

double broadcast_at(const RealMatrix& b, Broadcast kind, std::size_t r, std::size_t c) {
  switch (kind) {
    case Broadcast::Full: return b(r, c);
    case Broadcast::Row: return b(0, c);
    case Broadcast::Col: return b(r, 0);
    case Broadcast::Scalar: return b(0, 0);
  }
  return 0.0;
}

double& reduce_at(RealMatrix& b, Broadcast kind, std::size_t r, std::size_t c) {
  switch (kind) {
    case Broadcast::Full: return b(r, c);
    case Broadcast::Row: return b(0, c);
    case Broadcast::Col: return b(r, 0);
    case Broadcast::Scalar: break;
  }
  return b(0, 0);
}

void accumulate(RealMatrix& dst, const RealMatrix& src) {
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

NodeId CompGraph::push(Node node) {
  nodes_.push_back(std::move(node));
  return NodeId{nodes_.size() - 1};
}

const CompGraph::Node& CompGraph::at(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw ContractError(fmt::format("node {} does not exist in a graph of {} nodes", id.index,
                                    nodes_.size()));
  }
  return nodes_[id.index];
}

NodeId CompGraph::constant(RealMatrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId CompGraph::parameter(RealMatrix value) {
  Node n;
  n.value = std::move(value);
  n.trainable = true;
  return push(std::move(n));
}

NodeId CompGraph::matmul(NodeId a, NodeId b) {
  Node n;
  n.op = OpTag::Matmul;
  n.value = alignbench::matmul(at(a).value, at(b).value);
  n.parents = {a.index, b.index};
  return push(std::move(n));
}

NodeId CompGraph::transpose(NodeId a) {
  Node n;
  n.op = OpTag::Transpose;
  n.value = alignbench::transpose(at(a).value);
  n.parents = {a.index};
  return push(std::move(n));
}

NodeId CompGraph::add(NodeId a, NodeId b) {
  const RealMatrix& x = at(a).value;
  const RealMatrix& y = at(b).value;
  const Broadcast kind = broadcast_kind(x, y, "add");
  Node n;
  n.op = OpTag::Add;
  n.value = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) n.value(r, c) += broadcast_at(y, kind, r, c);
  n.parents = {a.index, b.index};
  return push(std::move(n));
}

NodeId CompGraph::mul(NodeId a, NodeId b) {
  const RealMatrix& x = at(a).value;
  const RealMatrix& y = at(b).value;
  const Broadcast kind = broadcast_kind(x, y, "mul");
  Node n;
  n.op = OpTag::Mul;
  n.value = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) n.value(r, c) *= broadcast_at(y, kind, r, c);
  n.parents = {a.index, b.index};
  return push(std::move(n));
}

NodeId CompGraph::row_softmax(NodeId a) {
  Node n;
  n.op = OpTag::RowSoftmax;
  n.value = alignbench::row_softmax(at(a).value);
  n.parents = {a.index};
  return push(std::move(n));
}

NodeId CompGraph::relu(NodeId a) {
  Node n;
  n.op = OpTag::Relu;
  n.value = alignbench::relu(at(a).value);
  n.parents = {a.index};
  return push(std::move(n));
}

NodeId CompGraph::layer_norm(NodeId x, NodeId gain, NodeId shift, double eps) {
  const RealMatrix& in = at(x).value;
  Node n;
  n.op = OpTag::LayerNorm;
  n.value = alignbench::layer_norm(in, at(gain).value, at(shift).value, eps);
  n.parents = {x.index, gain.index, shift.index};
  n.scalar = eps;
  // Cache the normalized input and per-row inverse std for the sweep.
  n.cache = RealMatrix(in.rows(), in.cols());
  n.row_cache.resize(in.rows());
  const double cols = static_cast<double>(in.cols());
  for (std::size_t r = 0; r < in.rows(); ++r) {
    auto row = in.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= cols;
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= cols;
    const double inv = 1.0 / std::sqrt(var + eps);
    n.row_cache[r] = inv;
    for (std::size_t c = 0; c < in.cols(); ++c) n.cache(r, c) = (row[c] - mean) * inv;
  }
  return push(std::move(n));
}

NodeId CompGraph::concat_cols(std::span<const NodeId> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t rows = at(parts.front()).value.rows();
  std::size_t cols = 0;
  for (NodeId p : parts) {
    if (at(p).value.rows() != rows) {
      throw DimensionError(fmt::format("concat_cols: row count mismatch {} vs {}",
                                       at(p).value.shape_string(), rows));
    }
    cols += at(p).value.cols();
  }
  Node n;
  n.op = OpTag::ConcatCols;
  n.value = RealMatrix(rows, cols);
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const RealMatrix& v = at(p).value;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) n.value(r, offset + c) = v(r, c);
    offset += v.cols();
    n.parents.push_back(p.index);
  }
  return push(std::move(n));
}

NodeId CompGraph::split_cols(NodeId a, std::size_t begin, std::size_t count) {
  const RealMatrix& v = at(a).value;
  if (count == 0 || begin + count > v.cols()) {
    throw DimensionError(fmt::format("split_cols: columns [{}, {}) out of range for {}", begin,
                                     begin + count, v.shape_string()));
  }
  Node n;
  n.op = OpTag::SplitCols;
  n.value = RealMatrix(v.rows(), count);
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) n.value(r, c) = v(r, begin + c);
  n.parents = {a.index};
  n.offset = begin;
  return push(std::move(n));
}

NodeId CompGraph::sum(NodeId a) {
  double total = 0.0;
  for (double v : at(a).value.values()) total += v;
  Node n;
  n.op = OpTag::Sum;
  n.value = RealMatrix(1, 1, total);
  n.parents = {a.index};
  return push(std::move(n));
}

NodeId CompGraph::normalize_rows(NodeId a) {
  const RealMatrix& v = at(a).value;
  Node n;
  n.op = OpTag::NormalizeRows;
  n.value = v;
  n.row_cache.resize(v.rows());
  for (std::size_t r = 0; r < v.rows(); ++r) {
    double sq = 0.0;
    for (double x : v.row(r)) sq += x * x;
    const double norm = std::sqrt(sq);
    n.row_cache[r] = norm;
    if (norm > 0.0) {
      for (double& x : n.value.row(r)) x /= norm;
    }
  }
  n.parents = {a.index};
  return push(std::move(n));
}

NodeId CompGraph::hinge(NodeId a, double margin) {
  Node n;
  n.op = OpTag::Hinge;
  n.value = at(a).value;
  for (double& x : n.value.values()) x = std::max(0.0, margin + x);
  n.scalar = margin;
  n.parents = {a.index};
  return push(std::move(n));
}

NodeId CompGraph::softmax_cross_entropy(NodeId logits, std::vector<std::size_t> targets) {
  const RealMatrix& z = at(logits).value;
  if (targets.size() != z.rows()) {
    throw DimensionError(fmt::format("softmax_cross_entropy: {} targets for {} logits",
                                     targets.size(), z.shape_string()));
  }
  Node n;
  n.op = OpTag::SoftmaxCrossEntropy;
  n.cache = alignbench::row_softmax(z);
  double loss = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    if (targets[r] >= z.cols()) {
      throw ContractError(fmt::format("softmax_cross_entropy: target {} out of range for {} classes",
                                      targets[r], z.cols()));
    }
    auto row = z.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) total += std::exp(v - peak);
    loss += peak + std::log(total) - row[targets[r]];
  }
  n.value = RealMatrix(1, 1, loss);
  n.targets = std::move(targets);
  n.parents = {logits.index};
  return push(std::move(n));
}

GradientMap CompGraph::reverse_sweep(NodeId loss) {
  const Node& top = at(loss);
  if (top.value.rows() != 1 || top.value.cols() != 1) {
    throw ContractError(
        fmt::format("reverse_sweep: loss must be 1x1, got {}", top.value.shape_string()));
  }
  for (Node& n : nodes_) n.adjoint = RealMatrix(n.value.rows(), n.value.cols());
  nodes_[loss.index].adjoint(0, 0) = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) backprop_node(i);

  GradientMap grads;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].trainable) grads.emplace(NodeId{i}, nodes_[i].adjoint);
  }
  return grads;
}

void CompGraph::backprop_node(std::size_t index) {
  Node& n = nodes_[index];
  const RealMatrix& dy = n.adjoint;
  switch (n.op) {
    case OpTag::Leaf:
      return;
    case OpTag::Matmul: {
      Node& a = nodes_[n.parents[0]];
      Node& b = nodes_[n.parents[1]];
      accumulate(a.adjoint, alignbench::matmul(dy, alignbench::transpose(b.value)));
      accumulate(b.adjoint, alignbench::matmul(alignbench::transpose(a.value), dy));
      return;
    }
    case OpTag::Transpose:
      accumulate(nodes_[n.parents[0]].adjoint, alignbench::transpose(dy));
      return;
    case OpTag::Add: {
      Node& a = nodes_[n.parents[0]];
      Node& b = nodes_[n.parents[1]];
      const Broadcast kind = broadcast_kind(a.value, b.value, "add");
      accumulate(a.adjoint, dy);
      for (std::size_t r = 0; r < dy.rows(); ++r)
        for (std::size_t c = 0; c < dy.cols(); ++c) reduce_at(b.adjoint, kind, r, c) += dy(r, c);
      return;
    }
    case OpTag::Mul: {
      Node& a = nodes_[n.parents[0]];
      Node& b = nodes_[n.parents[1]];
      const Broadcast kind = broadcast_kind(a.value, b.value, "mul");
      for (std::size_t r = 0; r < dy.rows(); ++r) {
        for (std::size_t c = 0; c < dy.cols(); ++c) {
          a.adjoint(r, c) += dy(r, c) * broadcast_at(b.value, kind, r, c);
          reduce_at(b.adjoint, kind, r, c) += dy(r, c) * a.value(r, c);
        }
      }
      return;
    }
    case OpTag::RowSoftmax: {
      Node& a = nodes_[n.parents[0]];
      for (std::size_t r = 0; r < dy.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dy.cols(); ++c) dot += dy(r, c) * n.value(r, c);
        for (std::size_t c = 0; c < dy.cols(); ++c)
          a.adjoint(r, c) += n.value(r, c) * (dy(r, c) - dot);
      }
      return;
    }
    case OpTag::Relu: {
      Node& a = nodes_[n.parents[0]];
      for (std::size_t i = 0; i < dy.size(); ++i)
        if (a.value.values()[i] > 0.0) a.adjoint.values()[i] += dy.values()[i];
      return;
    }
    case OpTag::LayerNorm: {
      Node& x = nodes_[n.parents[0]];
      Node& gain = nodes_[n.parents[1]];
      Node& shift = nodes_[n.parents[2]];
      const std::size_t cols = dy.cols();
      std::vector<double> dxhat(cols);
      for (std::size_t r = 0; r < dy.rows(); ++r) {
        double mean_d = 0.0;
        double mean_dx = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          gain.adjoint(0, c) += dy(r, c) * n.cache(r, c);
          shift.adjoint(0, c) += dy(r, c);
          dxhat[c] = dy(r, c) * gain.value(0, c);
          mean_d += dxhat[c];
          mean_dx += dxhat[c] * n.cache(r, c);
        }
        mean_d /= static_cast<double>(cols);
        mean_dx /= static_cast<double>(cols);
        for (std::size_t c = 0; c < cols; ++c) {
          x.adjoint(r, c) += n.row_cache[r] * (dxhat[c] - mean_d - n.cache(r, c) * mean_dx);
        }
      }
      return;
    }
    case OpTag::ConcatCols: {
      std::size_t offset = 0;
      for (std::size_t p : n.parents) {
        Node& part = nodes_[p];
        for (std::size_t r = 0; r < dy.rows(); ++r)
          for (std::size_t c = 0; c < part.value.cols(); ++c)
            part.adjoint(r, c) += dy(r, offset + c);
        offset += part.value.cols();
      }
      return;
    }
    case OpTag::SplitCols: {
      Node& a = nodes_[n.parents[0]];
      for (std::size_t r = 0; r < dy.rows(); ++r)
        for (std::size_t c = 0; c < dy.cols(); ++c) a.adjoint(r, n.offset + c) += dy(r, c);
      return;
    }
    case OpTag::Sum: {
      Node& a = nodes_[n.parents[0]];
      for (double& v : a.adjoint.values()) v += dy(0, 0);
      return;
    }
    case OpTag::NormalizeRows: {
      // d(x/|x|) = (dy - y (y . dy)) / |x|
      Node& a = nodes_[n.parents[0]];
      for (std::size_t r = 0; r < dy.rows(); ++r) {
        const double norm = n.row_cache[r];
        if (norm == 0.0) continue;
        double dot = 0.0;
        for (std::size_t c = 0; c < dy.cols(); ++c) dot += dy(r, c) * n.value(r, c);
        for (std::size_t c = 0; c < dy.cols(); ++c)
          a.adjoint(r, c) += (dy(r, c) - n.value(r, c) * dot) / norm;
      }
      return;
    }
    case OpTag::Hinge: {
      Node& a = nodes_[n.parents[0]];
      for (std::size_t i = 0; i < dy.size(); ++i)
        if (n.scalar + a.value.values()[i] > 0.0) a.adjoint.values()[i] += dy.values()[i];
      return;
    }
    case OpTag::SoftmaxCrossEntropy: {
      Node& z = nodes_[n.parents[0]];
      const double g = dy(0, 0);
      for (std::size_t r = 0; r < z.value.rows(); ++r) {
        for (std::size_t c = 0; c < z.value.cols(); ++c) {
          const double target = c == n.targets[r] ? 1.0 : 0.0;
          z.adjoint(r, c) += g * (n.cache(r, c) - target);
        }
      }
      return;
    }
  }
}

NodeId scale(CompGraph& g, NodeId x, double c) { return g.mul(x, g.scalar(c)); }

NodeId select_rows(CompGraph& g, NodeId x, std::span<const std::size_t> indices) {
  const std::size_t rows = g.value(x).rows();
  RealMatrix selector(indices.size(), rows);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) {
      throw DimensionError(
          fmt::format("select_rows: row {} out of range for {} rows", indices[i], rows));
    }
    selector(i, indices[i]) = 1.0;
  }
  return g.matmul(g.constant(std::move(selector)), x);
}

NodeId row_sums(CompGraph& g, NodeId x) {
  return g.matmul(x, g.constant(RealMatrix(g.value(x).cols(), 1, 1.0)));
}

NodeId sigmoid(CompGraph& g, NodeId x) {
  const RealMatrix& v = g.value(x);
  const NodeId zeros = g.constant(RealMatrix(v.rows(), 1));
  std::vector<NodeId> columns;
  columns.reserve(v.cols());
  for (std::size_t c = 0; c < v.cols(); ++c) {
    const NodeId col = v.cols() == 1 ? x : g.split_cols(x, c, 1);
    const std::vector<NodeId> pair = {col, zeros};
    columns.push_back(g.split_cols(g.row_softmax(g.concat_cols(pair)), 0, 1));
  }
  return columns.size() == 1 ? columns.front() : g.concat_cols(columns);
}

NodeId cosine_pairwise(CompGraph& g, NodeId a, NodeId b) {
  return g.matmul(g.normalize_rows(a), g.transpose(g.normalize_rows(b)));
}

NodeId cosine_rowwise(CompGraph& g, NodeId a, NodeId b) {
  if (!g.value(a).same_shape(g.value(b))) {
    throw DimensionError(fmt::format("cosine_rowwise: shape mismatch {} vs {}",
                                     g.value(a).shape_string(), g.value(b).shape_string()));
  }
  return row_sums(g, g.mul(g.normalize_rows(a), g.normalize_rows(b)));
}

}  // namespace alignbench
