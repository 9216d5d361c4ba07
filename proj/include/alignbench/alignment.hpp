#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "alignbench/graph.hpp"
#include "alignbench/matrix.hpp"

namespace alignbench {

enum class AlignmentKind { Dot, ScaledDot, General, BiasedGeneral, ActivatedGeneral, Cosine };

// The only activation; kept as an enumeration so the slot is explicit.
enum class Activation { Relu };

// Alignment score function f(Q, K) with its learnable parameters.
//
// swap selects which side the learnable transform W is applied to:
//   swap = false (dagger): entry (x, y) = q_x . (W k_y [+ b])
//   swap = true  (star):   entry (x, y) = k_y . (W q_x [+ b])
// The score matrix is n_Q x n_K either way. Dot, ScaledDot and Cosine have
// no transform, so swap must be false for them.
struct AlignmentSpec {
  AlignmentKind kind = AlignmentKind::Dot;
  bool swap = false;
  std::optional<RealMatrix> weight;  // d x d
  std::optional<RealMatrix> bias;    // 1 x d
  Activation activation = Activation::Relu;

  // Checks parameter presence and shapes against feature dimension d.
  void validate(std::size_t d) const;
  std::string name() const;
};

bool has_weight(AlignmentKind kind);
bool has_bias(AlignmentKind kind);
bool is_swappable(AlignmentKind kind);

// CLI/config vocabulary: dot, scaled_dot, general_star, general_dagger,
// biased_general_star, biased_general_dagger, activated_general, cosine.
// activated_general is the dagger form; activated_general_star is also
// accepted.
inline constexpr std::array<std::string_view, 8> kAlignmentNames = {
    "dot",
    "scaled_dot",
    "general_star",
    "general_dagger",
    "biased_general_star",
    "biased_general_dagger",
    "activated_general",
    "cosine",
};

struct AlignmentChoice {
  AlignmentKind kind;
  bool swap;
};

std::optional<AlignmentChoice> parse_alignment_name(std::string_view name);
std::string alignment_name(AlignmentKind kind, bool swap);
// "star", "dagger" or "none" (for kinds without a transform).
std::string_view variant_name(AlignmentKind kind, bool swap);

struct AlignmentParams {
  std::optional<RealMatrix> weight;
  std::optional<RealMatrix> bias;
};

// W ~ N(0, 1/d) entrywise, b = 0; only the parameters the kind uses are set.
AlignmentParams init_params(AlignmentKind kind, std::size_t d, std::uint64_t seed);

// Builds a validated spec with initialized parameters.
AlignmentSpec make_alignment(AlignmentKind kind, bool swap, std::size_t d, std::uint64_t seed);

// Score matrix a_xy = f(q_x, k_y), shape rows(Q) x rows(K).
RealMatrix score(const AlignmentSpec& spec, const RealMatrix& queries, const RealMatrix& keys);

// Elementwise form used by the MAC read unit: row y is the d-dimensional
// similarity vector between the single query row e and key row k_y, i.e.
// e (.) k_y for Dot, scaled by 1/sqrt(d) for ScaledDot, e (.) (W k_y [+ b])
// or (W e [+ b]) (.) k_y for the transform kinds, ReLU of the biased vector
// for ActivatedGeneral, and (e/|e|) (.) (k_y/|k_y|) for Cosine. Summing a
// row gives score() for every kind except ActivatedGeneral.
// The graph form also accepts one query row per key (row y pairs e_y with
// k_y), which lets a batch of read units share one node.
RealMatrix elementwise_similarity(const AlignmentSpec& spec, const RealMatrix& query,
                                  const RealMatrix& keys);

// Graph binding of a spec: its parameters become nodes.
struct AlignmentNodes {
  AlignmentKind kind = AlignmentKind::Dot;
  bool swap = false;
  std::optional<NodeId> weight;
  std::optional<NodeId> bias;
};

// Adds the spec's parameters to the graph, trainable unless `frozen`.
AlignmentNodes bind_alignment(CompGraph& g, const AlignmentSpec& spec, bool frozen = false);

NodeId score(CompGraph& g, const AlignmentNodes& f, NodeId queries, NodeId keys);
NodeId elementwise_similarity(CompGraph& g, const AlignmentNodes& f, NodeId query, NodeId keys);

}  // namespace alignbench
