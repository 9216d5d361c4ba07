#include "alignbench/alignment.hpp"

#include <cmath>
#include <fmt/format.h>

#include "alignbench/rng.hpp"

namespace alignbench {

bool has_weight(AlignmentKind kind) {
  return kind == AlignmentKind::General || kind == AlignmentKind::BiasedGeneral ||
         kind == AlignmentKind::ActivatedGeneral;
}

bool has_bias(AlignmentKind kind) {
  return kind == AlignmentKind::BiasedGeneral || kind == AlignmentKind::ActivatedGeneral;
}

bool is_swappable(AlignmentKind kind) { return has_weight(kind); }

namespace {

void validate_parts(AlignmentKind kind, bool swap, const RealMatrix* weight,
                    const RealMatrix* bias, std::size_t d) {
  const std::string name = alignment_name(kind, swap);
  if (swap && !is_swappable(kind)) {
    throw ContractError(fmt::format("alignment {}: swap is only defined for transform kinds",
                                    alignment_name(kind, false)));
  }
  if (has_weight(kind) != (weight != nullptr)) {
    throw ContractError(fmt::format("alignment {}: weight must be {}", name,
                                    has_weight(kind) ? "present" : "absent"));
  }
  if (has_bias(kind) != (bias != nullptr)) {
    throw ContractError(fmt::format("alignment {}: bias must be {}", name,
                                    has_bias(kind) ? "present" : "absent"));
  }
  if (weight && (weight->rows() != d || weight->cols() != d)) {
    throw DimensionError(fmt::format("alignment {}: weight is {}, expected {}x{}", name,
                                     weight->shape_string(), d, d));
  }
  if (bias && (bias->rows() != 1 || bias->cols() != d)) {
    throw DimensionError(fmt::format("alignment {}: bias is {}, expected 1x{}", name,
                                     bias->shape_string(), d));
  }
}

}  // namespace

void AlignmentSpec::validate(std::size_t d) const {
  validate_parts(kind, swap, weight ? &*weight : nullptr, bias ? &*bias : nullptr, d);
}

std::string AlignmentSpec::name() const { return alignment_name(kind, swap); }

std::optional<AlignmentChoice> parse_alignment_name(std::string_view name) {
  using K = AlignmentKind;
  if (name == "dot") return AlignmentChoice{K::Dot, false};
  if (name == "scaled_dot") return AlignmentChoice{K::ScaledDot, false};
  if (name == "general_star") return AlignmentChoice{K::General, true};
  if (name == "general_dagger") return AlignmentChoice{K::General, false};
  if (name == "biased_general_star") return AlignmentChoice{K::BiasedGeneral, true};
  if (name == "biased_general_dagger") return AlignmentChoice{K::BiasedGeneral, false};
  if (name == "activated_general") return AlignmentChoice{K::ActivatedGeneral, false};
  if (name == "activated_general_star") return AlignmentChoice{K::ActivatedGeneral, true};
  if (name == "cosine") return AlignmentChoice{K::Cosine, false};
  return std::nullopt;
}

std::string alignment_name(AlignmentKind kind, bool swap) {
  switch (kind) {
    case AlignmentKind::Dot: return "dot";
    case AlignmentKind::ScaledDot: return "scaled_dot";
    case AlignmentKind::General: return swap ? "general_star" : "general_dagger";
    case AlignmentKind::BiasedGeneral:
      return swap ? "biased_general_star" : "biased_general_dagger";
    case AlignmentKind::ActivatedGeneral:
      return swap ? "activated_general_star" : "activated_general";
    case AlignmentKind::Cosine: return "cosine";
  }
  return "unknown";
}

std::string_view variant_name(AlignmentKind kind, bool swap) {
  if (!is_swappable(kind)) return "none";
  return swap ? "star" : "dagger";
}

AlignmentParams init_params(AlignmentKind kind, std::size_t d, std::uint64_t seed) {
  if (d == 0) throw ContractError("init_params: dimension must be at least 1");
  AlignmentParams params;
  Rng64 rng(seed);
  if (has_weight(kind)) params.weight = rng.gaussian_matrix(d, d, 1.0 / std::sqrt(double(d)));
  if (has_bias(kind)) params.bias = RealMatrix(1, d);
  return params;
}

AlignmentSpec make_alignment(AlignmentKind kind, bool swap, std::size_t d, std::uint64_t seed) {
  AlignmentParams params = init_params(kind, d, seed);
  AlignmentSpec spec{kind, swap, std::move(params.weight), std::move(params.bias)};
  spec.validate(d);
  return spec;
}

AlignmentNodes bind_alignment(CompGraph& g, const AlignmentSpec& spec, bool frozen) {
  AlignmentNodes nodes{spec.kind, spec.swap, std::nullopt, std::nullopt};
  auto add = [&](const RealMatrix& m) { return frozen ? g.constant(m) : g.parameter(m); };
  if (spec.weight) nodes.weight = add(*spec.weight);
  if (spec.bias) nodes.bias = add(*spec.bias);
  return nodes;
}

namespace {

void check_feature_dims(const RealMatrix& q, const RealMatrix& k, const char* what) {
  if (q.cols() != k.cols()) {
    throw DimensionError(fmt::format("{}: query {} and key {} disagree on feature dimension",
                                     what, q.shape_string(), k.shape_string()));
  }
}

void check_nodes(const CompGraph& g, const AlignmentNodes& f, std::size_t d) {
  validate_parts(f.kind, f.swap, f.weight ? &g.value(*f.weight) : nullptr,
                 f.bias ? &g.value(*f.bias) : nullptr, d);
}

// Rows of the transformed side: row y holds (W x_y + b)^T = x_y W^T + b.
NodeId transformed_rows(CompGraph& g, const AlignmentNodes& f, NodeId x) {
  NodeId out = g.matmul(x, g.transpose(*f.weight));
  if (f.bias) out = g.add(out, *f.bias);
  return out;
}

}  // namespace

NodeId score(CompGraph& g, const AlignmentNodes& f, NodeId queries, NodeId keys) {
  const RealMatrix& q = g.value(queries);
  check_feature_dims(q, g.value(keys), "score");
  const std::size_t d = q.cols();
  check_nodes(g, f, d);
  switch (f.kind) {
    case AlignmentKind::Dot:
      return g.matmul(queries, g.transpose(keys));
    case AlignmentKind::ScaledDot:
      return scale(g, g.matmul(queries, g.transpose(keys)), 1.0 / std::sqrt(double(d)));
    case AlignmentKind::General:
    case AlignmentKind::BiasedGeneral:
    case AlignmentKind::ActivatedGeneral: {
      const NodeId bilinear =
          f.swap ? g.matmul(transformed_rows(g, f, queries), g.transpose(keys))
                 : g.matmul(queries, g.transpose(transformed_rows(g, f, keys)));
      return f.kind == AlignmentKind::ActivatedGeneral ? g.relu(bilinear) : bilinear;
    }
    case AlignmentKind::Cosine:
      return cosine_pairwise(g, queries, keys);
  }
  throw ContractError("score: unknown alignment kind");
}

NodeId elementwise_similarity(CompGraph& g, const AlignmentNodes& f, NodeId query, NodeId keys) {
  const RealMatrix& e = g.value(query);
  if (e.rows() != 1 && e.rows() != g.value(keys).rows()) {
    throw ContractError(fmt::format(
        "elementwise_similarity: query must be a single row or one row per key, got {} for {} keys",
        e.shape_string(), g.value(keys).rows()));
  }
  check_feature_dims(e, g.value(keys), "elementwise_similarity");
  const std::size_t d = e.cols();
  check_nodes(g, f, d);
  switch (f.kind) {
    case AlignmentKind::Dot:
      return g.mul(keys, query);
    case AlignmentKind::ScaledDot:
      return scale(g, g.mul(keys, query), 1.0 / std::sqrt(double(d)));
    case AlignmentKind::General:
    case AlignmentKind::BiasedGeneral:
    case AlignmentKind::ActivatedGeneral: {
      const NodeId vec = f.swap ? g.mul(keys, transformed_rows(g, f, query))
                                : g.mul(transformed_rows(g, f, keys), query);
      return f.kind == AlignmentKind::ActivatedGeneral ? g.relu(vec) : vec;
    }
    case AlignmentKind::Cosine:
      return g.mul(g.normalize_rows(keys), g.normalize_rows(query));
  }
  throw ContractError("elementwise_similarity: unknown alignment kind");
}

RealMatrix score(const AlignmentSpec& spec, const RealMatrix& queries, const RealMatrix& keys) {
  CompGraph g;
  const AlignmentNodes f = bind_alignment(g, spec, true);
  return g.value(score(g, f, g.constant(queries), g.constant(keys)));
}

RealMatrix elementwise_similarity(const AlignmentSpec& spec, const RealMatrix& query,
                                  const RealMatrix& keys) {
  CompGraph g;
  const AlignmentNodes f = bind_alignment(g, spec, true);
  return g.value(elementwise_similarity(g, f, g.constant(query), g.constant(keys)));
}

}  // namespace alignbench
