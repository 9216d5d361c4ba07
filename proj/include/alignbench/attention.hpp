#pragma once

#include <cstdint>

#include "alignbench/alignment.hpp"
#include "alignbench/graph.hpp"
#include "alignbench/matrix.hpp"

namespace alignbench {

// Scores a_xy, weights alpha = row_softmax(a) and contexts c = alpha K.
struct CrossAttentionOutput {
  RealMatrix scores;
  RealMatrix weights;
  RealMatrix contexts;
};

struct CrossAttentionNodes {
  NodeId scores;
  NodeId weights;
  NodeId contexts;
};

CrossAttentionOutput cross_attend(const AlignmentSpec& spec, const RealMatrix& queries,
                                  const RealMatrix& keys);
CrossAttentionNodes cross_attend(CompGraph& g, const AlignmentNodes& f, NodeId queries,
                                 NodeId keys);

// Read-unit scoring: a_y = row_map . sim(e, k_y) + bias, where sim is the
// elementwise form of the alignment function.
struct MacScoreParams {
  RealMatrix row_map;  // 1 x d
  double bias = 0.0;
};

struct MacScoreNodes {
  NodeId row_map;
  NodeId bias;  // 1 x 1
};

MacScoreNodes bind_mac(CompGraph& g, const MacScoreParams& p, bool frozen = false);

// Returns the 1 x n score row.
RealMatrix mac_score(const AlignmentSpec& similarity, const RealMatrix& control,
                     const RealMatrix& keys, const MacScoreParams& p);
NodeId mac_score(CompGraph& g, const AlignmentNodes& similarity, NodeId control, NodeId keys,
                 const MacScoreNodes& p);

// Multi-head self attention. Projections are right-multiplied: Q = S Wq.
// The alignment spec is shared by all heads, so its W and b are sized to the
// per-head dimension.
struct MultiHeadConfig {
  std::size_t heads = 1;
  std::size_t model_dim = 0;
  RealMatrix query_proj;
  RealMatrix key_proj;
  RealMatrix value_proj;
  RealMatrix output_proj;

  std::size_t per_head_dim() const { return model_dim / heads; }
  void validate() const;
  // Gaussian projections with standard deviation 1/sqrt(d).
  static MultiHeadConfig random(std::size_t heads, std::size_t model_dim, std::uint64_t seed);
  static MultiHeadConfig identity(std::size_t heads, std::size_t model_dim);
};

struct EncoderBlockParams {
  MultiHeadConfig attention;
  RealMatrix ffn_in;   // d x d_ff
  RealMatrix ffn_out;  // d_ff x d
  RealMatrix norm1_gain, norm1_shift;
  RealMatrix norm2_gain, norm2_shift;

  void validate() const;
  static EncoderBlockParams random(std::size_t heads, std::size_t model_dim, std::size_t ffn_dim,
                                   std::uint64_t seed);
};

struct MultiHeadNodes {
  std::size_t heads;
  NodeId query_proj, key_proj, value_proj, output_proj;
};

struct EncoderBlockNodes {
  MultiHeadNodes attention;
  NodeId ffn_in, ffn_out;
  NodeId norm1_gain, norm1_shift, norm2_gain, norm2_shift;
};

MultiHeadNodes bind_multi_head(CompGraph& g, const MultiHeadConfig& cfg, bool frozen = false);
EncoderBlockNodes bind_encoder_block(CompGraph& g, const EncoderBlockParams& p,
                                     bool frozen = false);

// Cosine is rejected with UnsupportedError.
RealMatrix self_attend(const MultiHeadConfig& cfg, const AlignmentSpec& spec,
                       const RealMatrix& sequence);
NodeId self_attend(CompGraph& g, const MultiHeadNodes& cfg, const AlignmentNodes& f,
                   NodeId sequence);

// Post-norm block: h = LN(S + SelfAttn(S)); out = LN(h + relu(h W1) W2).
RealMatrix encoder_block(const EncoderBlockParams& p, const AlignmentSpec& spec,
                         const RealMatrix& sequence);
NodeId encoder_block(CompGraph& g, const EncoderBlockNodes& p, const AlignmentNodes& f,
                     NodeId sequence);

}  // namespace alignbench
