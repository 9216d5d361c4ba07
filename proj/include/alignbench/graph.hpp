#pragma once

#include <compare>
#include <deque>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "alignbench/matrix.hpp"

namespace alignbench {

struct NodeId {
  std::size_t index = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class OpTag {
  Leaf,
  Matmul,
  Transpose,
  Add,
  Mul,
  RowSoftmax,
  Relu,
  LayerNorm,
  ConcatCols,
  SplitCols,
  Sum,
  NormalizeRows,
  Hinge,
  SoftmaxCrossEntropy,
};

using GradientMap = std::map<NodeId, RealMatrix>;

// Eagerly evaluated computation graph with a reverse sweep.
//
// Every builder method computes the node's value immediately, so a graph is
// both the forward pass and the tape. Parents always precede children, and
// the node list is append-only. A graph is meant to be built, swept once (or
// a few times) and discarded; it is not thread-safe.
//
// Broadcasting (add, mul): the right operand may match the left operand's
// shape exactly, be a 1 x cols row, an rows x 1 column, or a 1 x 1 scalar.
// The result always has the left operand's shape.
class CompGraph {
 public:
  NodeId constant(RealMatrix value);
  NodeId parameter(RealMatrix value);
  NodeId scalar(double value) { return constant(RealMatrix(1, 1, value)); }

  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId row_softmax(NodeId a);
  NodeId relu(NodeId a);
  NodeId layer_norm(NodeId x, NodeId gain, NodeId shift, double eps = kLayerNormEps);
  NodeId concat_cols(std::span<const NodeId> parts);
  NodeId split_cols(NodeId a, std::size_t begin, std::size_t count);
  // Sum of all entries, 1 x 1.
  NodeId sum(NodeId a);
  // Each row divided by its Euclidean norm; all-zero rows stay zero.
  NodeId normalize_rows(NodeId a);
  // max(0, margin + x) elementwise.
  NodeId hinge(NodeId a, double margin);
  // Sum over rows r of -log softmax(logits_r)[targets[r]], 1 x 1.
  NodeId softmax_cross_entropy(NodeId logits, std::vector<std::size_t> targets);

  const RealMatrix& value(NodeId id) const { return nodes_.at(id.index).value; }
  const RealMatrix& adjoint(NodeId id) const { return nodes_.at(id.index).adjoint; }
  OpTag op(NodeId id) const { return nodes_.at(id.index).op; }
  std::span<const std::size_t> parents(NodeId id) const { return nodes_.at(id.index).parents; }
  bool is_parameter(NodeId id) const { return nodes_.at(id.index).trainable; }
  std::size_t size() const { return nodes_.size(); }

  // Backpropagates from a 1 x 1 loss node. Populates adjoints of every node
  // (zero where the loss does not depend on it) and returns the gradient of
  // each parameter node.
  GradientMap reverse_sweep(NodeId loss);

 private:
  struct Node {
    OpTag op = OpTag::Leaf;
    std::vector<std::size_t> parents;
    RealMatrix value;
    RealMatrix adjoint;
    bool trainable = false;
    double scalar = 0.0;
    std::size_t offset = 0;
    std::vector<std::size_t> targets;
    // Per-row cached statistics (layer-norm inverse std, row norms).
    std::vector<double> row_cache;
    RealMatrix cache;
  };

  NodeId push(Node node);
  const Node& at(NodeId id) const;
  void backprop_node(std::size_t index);

  // deque keeps references returned by value() valid while nodes are appended.
  std::deque<Node> nodes_;
};

// Helpers composed from the primitive ops.

// x * c elementwise.
NodeId scale(CompGraph& g, NodeId x, double c);
// Rows of x picked by `indices`, as a constant selection matrix times x.
NodeId select_rows(CompGraph& g, NodeId x, std::span<const std::size_t> indices);
// Column of row sums, x * ones(cols x 1).
NodeId row_sums(CompGraph& g, NodeId x);
// Elementwise logistic sigmoid: softmax over [x, 0] keeping the first column.
// The result has x's shape.
NodeId sigmoid(CompGraph& g, NodeId x);
// Pairwise cosine between rows of a and rows of b, a.rows x b.rows.
NodeId cosine_pairwise(CompGraph& g, NodeId a, NodeId b);
// Cosine between row r of a and row r of b, rows x 1.
NodeId cosine_rowwise(CompGraph& g, NodeId a, NodeId b);

}  // namespace alignbench
