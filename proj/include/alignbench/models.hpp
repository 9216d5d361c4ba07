#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "alignbench/alignment.hpp"
#include "alignbench/attention.hpp"
#include "alignbench/graph.hpp"
#include "alignbench/matrix.hpp"
#include "alignbench/tasks.hpp"

namespace alignbench {

inline constexpr double kTripletMargin = 0.2;

// Named view of one trainable matrix inside a model. Order is fixed per
// model and shared by binding, optimization and checkpoints.
struct ParamRef {
  std::string name;
  RealMatrix* value;
};

// ------------------------------------------------------------ optimizer

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<RealMatrix> first;
  std::vector<RealMatrix> second;
  std::uint64_t step = 0;
};

// Bias-corrected Adam update in place. Moments are created on the first
// step; gradient, parameter and moment shapes must agree.
void adam_step(AdamState& state, std::span<const ParamRef> params, std::span<const RealMatrix> grads);

// ------------------------------------------------------------- training

struct TrainOptions {
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;  // minibatch order
};

struct TrainResult {
  std::vector<double> epoch_losses;  // mean loss per example
  bool diverged = false;
};

// ------------------------------------------------------------ retrieval

struct RetrievalModel {
  RealMatrix token_proj;   // d_in x d
  RealMatrix region_proj;  // d_in x d
  AlignmentSpec alignment;

  // Projections N(0, 1/d_in); alignment parameters from init_params.
  static RetrievalModel init(AlignmentChoice choice, std::size_t input_dim, std::size_t dim,
                             std::uint64_t seed);
  std::vector<ParamRef> parameters();
  std::vector<RealMatrix> parameter_values() const;

  struct Nodes {
    NodeId token_proj;
    NodeId region_proj;
    AlignmentNodes alignment;
  };
  Nodes nodes_from(std::span<const NodeId> ids) const;
  Nodes bind(CompGraph& g, bool frozen = false) const;
};

// Caption-by-image similarity. `tokens` stacks the captions (M rows each)
// and `regions` stacks the images (N rows each). Entry (c, i) projects both
// sides, cross-attends caption c's tokens over image i's regions, takes the
// cosine between each token and its context and averages over tokens.
NodeId scan_similarity_matrix(CompGraph& g, const RetrievalModel::Nodes& m, NodeId tokens,
                              NodeId regions, std::size_t tokens_per_caption,
                              std::size_t regions_per_image);
double scan_similarity(const RetrievalModel& m, const RealMatrix& tokens, const RealMatrix& regions);
RealMatrix scan_similarity_matrix(const RetrievalModel& m, std::span<const RetrievalInstance> pairs);

// Hardest-negative hinge summed over both directions of a square matrix
// whose diagonal holds the matched pairs. Ties in the hardest negative go
// to the lower index.
NodeId triplet_loss(CompGraph& g, NodeId sims, double margin = kTripletMargin);
double triplet_loss(const RealMatrix& sims, double margin = kTripletMargin);

TrainResult train_retrieval(RetrievalModel& m, std::span<const RetrievalInstance> train,
                            const TrainOptions& opt);

// ------------------------------------------------------------- counting

struct CountingModel {
  RealMatrix control_proj;  // 8 x d
  RealMatrix control_bias;  // 1 x d
  RealMatrix mac_row_map;   // 1 x d
  RealMatrix mac_bias;      // 1 x 1
  AlignmentSpec alignment;
  RealMatrix count_head;  // (d + 1) x (N + 1)
  RealMatrix head_bias;   // 1 x (N + 1)

  // d equals the attribute width: the read unit attends over raw objects.
  static CountingModel init(AlignmentChoice choice, std::size_t max_count, std::uint64_t seed);
  std::size_t classes() const { return count_head.cols(); }
  MacScoreParams mac() const { return {mac_row_map, mac_bias(0, 0)}; }
  std::vector<ParamRef> parameters();
  std::vector<RealMatrix> parameter_values() const;

  struct Nodes {
    NodeId control_proj, control_bias;
    MacScoreNodes mac;
    AlignmentNodes alignment;
    NodeId count_head, head_bias;
  };
  Nodes nodes_from(std::span<const NodeId> ids) const;
  Nodes bind(CompGraph& g, bool frozen = false) const;
};

// Count logits for a batch of instances, batch x (N + 1).
NodeId counting_logits(CompGraph& g, const CountingModel::Nodes& m,
                       std::span<const CountingInstance* const> batch);
// Softmax distribution over counts 0..N, 1 x (N + 1).
RealMatrix counting_forward(const CountingModel& m, const CountingInstance& inst);

TrainResult train_counting(CountingModel& m, std::span<const CountingInstance> train,
                           const TrainOptions& opt);

// -------------------------------------------------------------- pointer

struct PointerModel {
  RealMatrix input_proj;       // d_in x d
  RealMatrix type_embeddings;  // 3 x d
  EncoderBlockParams block;
  AlignmentSpec alignment;     // sized to the per-head dimension

  // Cosine is rejected with ConfigError.
  static PointerModel init(AlignmentChoice choice, std::size_t input_dim, std::size_t dim,
                           std::size_t heads, std::size_t ffn_dim, std::uint64_t seed);
  std::vector<ParamRef> parameters();
  std::vector<RealMatrix> parameter_values() const;

  struct Nodes {
    NodeId input_proj, type_embeddings;
    EncoderBlockNodes block;
    AlignmentNodes alignment;
  };
  Nodes nodes_from(std::span<const NodeId> ids) const;
  Nodes bind(CompGraph& g, bool frozen = false) const;
};

// Pointer logits over the OCR segment, 1 x O: the first question row's
// output state dotted with each OCR output state.
NodeId pointer_logits(CompGraph& g, const PointerModel::Nodes& m, const PointerInstance& inst);
RealMatrix pointer_forward(const PointerModel& m, const PointerInstance& inst);

TrainResult train_pointer(PointerModel& m, std::span<const PointerInstance> train,
                          const TrainOptions& opt);

// ---------------------------------------------------------- checkpoints

// Text format:
//   alignbench-checkpoint v1
//   <count>
//   then per parameter: "<name> <rows> <cols>" followed by one line of
//   row-major values printed with 17 significant digits.
void save_checkpoint(std::ostream& out, std::span<const ParamRef> params);
// Names and shapes must match the model's parameters; throws IoError on a
// malformed stream and ContractError on a mismatch.
void load_checkpoint(std::istream& in, std::span<const ParamRef> params);

}  // namespace alignbench
