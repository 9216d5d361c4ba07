#include "alignbench/attention.hpp"

#include <cmath>
#include <fmt/format.h>
#include <vector>

#include "alignbench/rng.hpp"

namespace alignbench {

CrossAttentionNodes cross_attend(CompGraph& g, const AlignmentNodes& f, NodeId queries,
                                 NodeId keys) {
  const NodeId scores = score(g, f, queries, keys);
  const NodeId weights = g.row_softmax(scores);
  return {scores, weights, g.matmul(weights, keys)};
}

CrossAttentionOutput cross_attend(const AlignmentSpec& spec, const RealMatrix& queries,
                                  const RealMatrix& keys) {
  CompGraph g;
  const AlignmentNodes f = bind_alignment(g, spec, true);
  const CrossAttentionNodes out = cross_attend(g, f, g.constant(queries), g.constant(keys));
  return {g.value(out.scores), g.value(out.weights), g.value(out.contexts)};
}

MacScoreNodes bind_mac(CompGraph& g, const MacScoreParams& p, bool frozen) {
  RealMatrix bias(1, 1, p.bias);
  if (frozen) return {g.constant(p.row_map), g.constant(std::move(bias))};
  return {g.parameter(p.row_map), g.parameter(std::move(bias))};
}

NodeId mac_score(CompGraph& g, const AlignmentNodes& similarity, NodeId control, NodeId keys,
                 const MacScoreNodes& p) {
  const RealMatrix& e = g.value(control);
  if (e.rows() != 1) {
    throw ContractError(
        fmt::format("mac_score: control state must be a single row, got {}", e.shape_string()));
  }
  const RealMatrix& map = g.value(p.row_map);
  if (map.rows() != 1 || map.cols() != e.cols()) {
    throw DimensionError(fmt::format("mac_score: row map is {}, expected 1x{}",
                                     map.shape_string(), e.cols()));
  }
  const NodeId vectors = elementwise_similarity(g, similarity, control, keys);  // n x d
  const NodeId column = g.add(g.matmul(vectors, g.transpose(p.row_map)), p.bias);
  return g.transpose(column);
}

RealMatrix mac_score(const AlignmentSpec& similarity, const RealMatrix& control,
                     const RealMatrix& keys, const MacScoreParams& p) {
  CompGraph g;
  const AlignmentNodes f = bind_alignment(g, similarity, true);
  return g.value(
      mac_score(g, f, g.constant(control), g.constant(keys), bind_mac(g, p, true)));
}

void MultiHeadConfig::validate() const {
  if (heads == 0 || model_dim == 0 || model_dim % heads != 0) {
    throw ContractError(fmt::format("multi-head: model dimension {} is not divisible by {} heads",
                                    model_dim, heads));
  }
  for (const RealMatrix* m : {&query_proj, &key_proj, &value_proj, &output_proj}) {
    if (m->rows() != model_dim || m->cols() != model_dim) {
      throw DimensionError(fmt::format("multi-head: projection is {}, expected {}x{}",
                                       m->shape_string(), model_dim, model_dim));
    }
  }
}

MultiHeadConfig MultiHeadConfig::random(std::size_t heads, std::size_t model_dim,
                                        std::uint64_t seed) {
  Rng64 rng(seed);
  const double sd = 1.0 / std::sqrt(double(model_dim));
  MultiHeadConfig cfg{heads,
                      model_dim,
                      rng.gaussian_matrix(model_dim, model_dim, sd),
                      rng.gaussian_matrix(model_dim, model_dim, sd),
                      rng.gaussian_matrix(model_dim, model_dim, sd),
                      rng.gaussian_matrix(model_dim, model_dim, sd)};
  cfg.validate();
  return cfg;
}

MultiHeadConfig MultiHeadConfig::identity(std::size_t heads, std::size_t model_dim) {
  MultiHeadConfig cfg{heads,
                      model_dim,
                      RealMatrix::identity(model_dim),
                      RealMatrix::identity(model_dim),
                      RealMatrix::identity(model_dim),
                      RealMatrix::identity(model_dim)};
  cfg.validate();
  return cfg;
}

void EncoderBlockParams::validate() const {
  attention.validate();
  const std::size_t d = attention.model_dim;
  if (ffn_in.rows() != d || ffn_out.cols() != d || ffn_in.cols() != ffn_out.rows()) {
    throw DimensionError(fmt::format("encoder block: feed-forward maps {} and {} do not fit d={}",
                                     ffn_in.shape_string(), ffn_out.shape_string(), d));
  }
  for (const RealMatrix* m : {&norm1_gain, &norm1_shift, &norm2_gain, &norm2_shift}) {
    if (m->rows() != 1 || m->cols() != d) {
      throw DimensionError(fmt::format("encoder block: layer-norm parameter is {}, expected 1x{}",
                                       m->shape_string(), d));
    }
  }
}

EncoderBlockParams EncoderBlockParams::random(std::size_t heads, std::size_t model_dim,
                                              std::size_t ffn_dim, std::uint64_t seed) {
  Rng64 rng(seed);
  EncoderBlockParams p{
      MultiHeadConfig::random(heads, model_dim, rng.next()),
      rng.gaussian_matrix(model_dim, ffn_dim, 1.0 / std::sqrt(double(model_dim))),
      rng.gaussian_matrix(ffn_dim, model_dim, 1.0 / std::sqrt(double(ffn_dim))),
      RealMatrix(1, model_dim, 1.0),
      RealMatrix(1, model_dim, 0.0),
      RealMatrix(1, model_dim, 1.0),
      RealMatrix(1, model_dim, 0.0),
  };
  p.validate();
  return p;
}

MultiHeadNodes bind_multi_head(CompGraph& g, const MultiHeadConfig& cfg, bool frozen) {
  cfg.validate();
  auto add = [&](const RealMatrix& m) { return frozen ? g.constant(m) : g.parameter(m); };
  return {cfg.heads, add(cfg.query_proj), add(cfg.key_proj), add(cfg.value_proj),
          add(cfg.output_proj)};
}

EncoderBlockNodes bind_encoder_block(CompGraph& g, const EncoderBlockParams& p, bool frozen) {
  p.validate();
  auto add = [&](const RealMatrix& m) { return frozen ? g.constant(m) : g.parameter(m); };
  MultiHeadNodes attention = bind_multi_head(g, p.attention, frozen);
  return {attention,           add(p.ffn_in),      add(p.ffn_out),     add(p.norm1_gain),
          add(p.norm1_shift),  add(p.norm2_gain),  add(p.norm2_shift)};
}

NodeId self_attend(CompGraph& g, const MultiHeadNodes& cfg, const AlignmentNodes& f,
                   NodeId sequence) {
  if (f.kind == AlignmentKind::Cosine) {
    throw UnsupportedError("self_attend: cosine alignment is not supported in self attention");
  }
  const std::size_t d = g.value(cfg.query_proj).rows();
  if (g.value(sequence).cols() != d) {
    throw DimensionError(fmt::format("self_attend: sequence is {}, model dimension is {}",
                                     g.value(sequence).shape_string(), d));
  }
  const std::size_t head_dim = d / cfg.heads;
  const NodeId q = g.matmul(sequence, cfg.query_proj);
  const NodeId k = g.matmul(sequence, cfg.key_proj);
  const NodeId v = g.matmul(sequence, cfg.value_proj);
  std::vector<NodeId> heads;
  heads.reserve(cfg.heads);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const std::size_t begin = h * head_dim;
    const NodeId qh = cfg.heads == 1 ? q : g.split_cols(q, begin, head_dim);
    const NodeId kh = cfg.heads == 1 ? k : g.split_cols(k, begin, head_dim);
    const NodeId vh = cfg.heads == 1 ? v : g.split_cols(v, begin, head_dim);
    const NodeId weights = g.row_softmax(score(g, f, qh, kh));
    heads.push_back(g.matmul(weights, vh));
  }
  const NodeId joined = heads.size() == 1 ? heads.front() : g.concat_cols(heads);
  return g.matmul(joined, cfg.output_proj);
}

RealMatrix self_attend(const MultiHeadConfig& cfg, const AlignmentSpec& spec,
                       const RealMatrix& sequence) {
  CompGraph g;
  const MultiHeadNodes nodes = bind_multi_head(g, cfg, true);
  const AlignmentNodes f = bind_alignment(g, spec, true);
  return g.value(self_attend(g, nodes, f, g.constant(sequence)));
}

NodeId encoder_block(CompGraph& g, const EncoderBlockNodes& p, const AlignmentNodes& f,
                     NodeId sequence) {
  const NodeId attended = self_attend(g, p.attention, f, sequence);
  const NodeId h = g.layer_norm(g.add(sequence, attended), p.norm1_gain, p.norm1_shift);
  const NodeId ffn = g.matmul(g.relu(g.matmul(h, p.ffn_in)), p.ffn_out);
  return g.layer_norm(g.add(h, ffn), p.norm2_gain, p.norm2_shift);
}

RealMatrix encoder_block(const EncoderBlockParams& p, const AlignmentSpec& spec,
                         const RealMatrix& sequence) {
  CompGraph g;
  const EncoderBlockNodes nodes = bind_encoder_block(g, p, true);
  const AlignmentNodes f = bind_alignment(g, spec, true);
  return g.value(encoder_block(g, nodes, f, g.constant(sequence)));
}

}  // namespace alignbench
