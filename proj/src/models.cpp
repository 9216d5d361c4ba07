#include "alignbench/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace alignbench {
namespace {

constexpr std::uint64_t kProjSalt = 11;
constexpr std::uint64_t kAlignSalt = 12;
constexpr std::uint64_t kHeadSalt = 13;
constexpr std::uint64_t kBlockSalt = 14;

// Walks a flat list of parameter nodes in declaration order.
class Cursor {
 public:
  explicit Cursor(std::span<const NodeId> ids) : ids_(ids) {}
  NodeId next() {
    if (pos_ >= ids_.size()) throw ContractError("model binding: too few parameter nodes");
    return ids_[pos_++];
  }
  void finish() const {
    if (pos_ != ids_.size()) {
      throw ContractError(fmt::format("model binding: {} parameter nodes left over", ids_.size() - pos_));
    }
  }

 private:
  std::span<const NodeId> ids_;
  std::size_t pos_ = 0;
};

AlignmentNodes alignment_from(const AlignmentSpec& spec, Cursor& c) {
  AlignmentNodes f{spec.kind, spec.swap, std::nullopt, std::nullopt};
  if (spec.weight) f.weight = c.next();
  if (spec.bias) f.bias = c.next();
  return f;
}

void push_alignment(std::vector<ParamRef>& out, AlignmentSpec& spec) {
  if (spec.weight) out.push_back({"alignment.weight", &*spec.weight});
  if (spec.bias) out.push_back({"alignment.bias", &*spec.bias});
}

std::vector<RealMatrix> values_of(std::vector<ParamRef> refs) {
  std::vector<RealMatrix> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back(*r.value);
  return out;
}

std::vector<NodeId> bind_values(CompGraph& g, const std::vector<RealMatrix>& values, bool frozen) {
  std::vector<NodeId> ids;
  ids.reserve(values.size());
  for (const auto& v : values) ids.push_back(frozen ? g.constant(v) : g.parameter(v));
  return ids;
}

RealMatrix stack_rows(std::span<const RealMatrix* const> parts) {
  std::size_t rows = 0;
  for (const auto* p : parts) rows += p->rows();
  RealMatrix out(rows, parts.front()->cols());
  std::size_t r = 0;
  for (const auto* p : parts) {
    if (p->cols() != out.cols()) {
      throw DimensionError(fmt::format("stack_rows: {} does not have {} columns", p->shape_string(), out.cols()));
    }
    std::copy(p->values().begin(), p->values().end(), out.row(r).begin());
    r += p->rows();
  }
  return out;
}

// Generic minibatch loop. loss_of builds the summed loss of one batch; the
// optimizer sees its mean. Batches smaller than min_batch are dropped.
template <typename Model, typename Instance, typename LossFn>
TrainResult train_loop(Model& m, std::span<const Instance> data, const TrainOptions& opt,
                       std::size_t min_batch, LossFn loss_of) {
  if (opt.batch_size < min_batch) {
    throw ContractError(fmt::format("training: batch size must be at least {}", min_batch));
  }
  if (data.size() < min_batch) {
    throw ContractError(fmt::format("training: need at least {} examples, got {}", min_batch, data.size()));
  }
  AdamState state;
  state.config.learning_rate = opt.learning_rate;
  Rng64 rng(opt.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    shuffle(order, rng);
    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      if (end - start < min_batch) continue;
      std::vector<const Instance*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&data[order[i]]);

      CompGraph g;
      const std::vector<NodeId> ids = bind_values(g, m.parameter_values(), false);
      const auto nodes = m.nodes_from(ids);
      const NodeId summed = loss_of(g, nodes, std::span<const Instance* const>(batch));
      const NodeId loss = scale(g, summed, 1.0 / static_cast<double>(batch.size()));
      const double value = g.value(summed)(0, 0);
      if (!std::isfinite(value)) {
        result.diverged = true;
        return result;
      }
      GradientMap grads = g.reverse_sweep(loss);
      std::vector<RealMatrix> ordered;
      ordered.reserve(ids.size());
      for (NodeId id : ids) ordered.push_back(std::move(grads.at(id)));
      adam_step(state, m.parameters(), ordered);
      total += value;
      seen += batch.size();
    }
    result.epoch_losses.push_back(seen == 0 ? 0.0 : total / static_cast<double>(seen));
  }
  for (const auto& p : m.parameters()) {
    if (!p.value->all_finite()) result.diverged = true;
  }
  return result;
}

}  // namespace

// ------------------------------------------------------------- optimizer

void adam_step(AdamState& state, std::span<const ParamRef> params, std::span<const RealMatrix> grads) {
  if (params.size() != grads.size()) {
    throw ContractError(fmt::format("adam_step: {} gradients for {} parameters", grads.size(), params.size()));
  }
  if (state.first.empty()) {
    for (const auto& p : params) {
      state.first.emplace_back(p.value->rows(), p.value->cols());
      state.second.emplace_back(p.value->rows(), p.value->cols());
    }
  }
  if (state.first.size() != params.size()) {
    throw ContractError("adam_step: parameter list changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const RealMatrix& p = *params[i].value;
    if (!p.same_shape(grads[i]) || !p.same_shape(state.first[i])) {
      throw ContractError(fmt::format("adam_step: parameter '{}' is {} but gradient is {}", params[i].name,
                                      p.shape_string(), grads[i].shape_string()));
    }
  }

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].value->values();
    auto g = grads[i].values();
    auto m = state.first[i].values();
    auto v = state.second[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      p[j] -= c.learning_rate * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + c.epsilon);
    }
  }
}

// ------------------------------------------------------------- retrieval

RetrievalModel RetrievalModel::init(AlignmentChoice choice, std::size_t input_dim, std::size_t dim,
                                    std::uint64_t seed) {
  Rng64 rng(seed);
  Rng64 proj = rng.fork(kProjSalt);
  const double sd = 1.0 / std::sqrt(static_cast<double>(input_dim));
  RetrievalModel m;
  m.token_proj = proj.gaussian_matrix(input_dim, dim, sd);
  m.region_proj = proj.gaussian_matrix(input_dim, dim, sd);
  m.alignment = make_alignment(choice.kind, choice.swap, dim, rng.fork(kAlignSalt).next());
  return m;
}

std::vector<ParamRef> RetrievalModel::parameters() {
  std::vector<ParamRef> out{{"token_proj", &token_proj}, {"region_proj", &region_proj}};
  push_alignment(out, alignment);
  return out;
}

std::vector<RealMatrix> RetrievalModel::parameter_values() const {
  return values_of(const_cast<RetrievalModel*>(this)->parameters());
}

RetrievalModel::Nodes RetrievalModel::nodes_from(std::span<const NodeId> ids) const {
  Cursor c(ids);
  Nodes n{c.next(), c.next(), {}};
  n.alignment = alignment_from(alignment, c);
  c.finish();
  return n;
}

RetrievalModel::Nodes RetrievalModel::bind(CompGraph& g, bool frozen) const {
  return nodes_from(bind_values(g, parameter_values(), frozen));
}

NodeId scan_similarity_matrix(CompGraph& g, const RetrievalModel::Nodes& m, NodeId tokens,
                              NodeId regions, std::size_t tokens_per_caption,
                              std::size_t regions_per_image) {
  const std::size_t token_rows = g.value(tokens).rows();
  const std::size_t region_rows = g.value(regions).rows();
  if (tokens_per_caption == 0 || regions_per_image == 0 || token_rows % tokens_per_caption != 0 ||
      region_rows % regions_per_image != 0) {
    throw DimensionError(fmt::format("scan_similarity: cannot split {} token rows by {} and {} region rows by {}",
                                     token_rows, tokens_per_caption, region_rows, regions_per_image));
  }
  const std::size_t captions = token_rows / tokens_per_caption;
  const std::size_t images = region_rows / regions_per_image;

  const NodeId t = g.matmul(tokens, m.token_proj);
  const NodeId r = g.matmul(regions, m.region_proj);
  const NodeId scores = score(g, m.alignment, t, r);
  const NodeId t_unit = g.normalize_rows(t);

  RealMatrix pool(captions, token_rows);
  for (std::size_t c = 0; c < captions; ++c) {
    for (std::size_t k = 0; k < tokens_per_caption; ++k) {
      pool(c, c * tokens_per_caption + k) = 1.0 / static_cast<double>(tokens_per_caption);
    }
  }
  const NodeId pool_node = g.constant(std::move(pool));

  std::vector<NodeId> columns;
  columns.reserve(images);
  std::vector<std::size_t> picked(regions_per_image);
  for (std::size_t i = 0; i < images; ++i) {
    std::iota(picked.begin(), picked.end(), i * regions_per_image);
    const NodeId weights = g.row_softmax(g.split_cols(scores, i * regions_per_image, regions_per_image));
    const NodeId contexts = g.matmul(weights, select_rows(g, r, picked));
    const NodeId cosines = row_sums(g, g.mul(t_unit, g.normalize_rows(contexts)));
    columns.push_back(g.matmul(pool_node, cosines));
  }
  return g.concat_cols(columns);
}

double scan_similarity(const RetrievalModel& m, const RealMatrix& tokens, const RealMatrix& regions) {
  CompGraph g;
  const auto nodes = m.bind(g, true);
  const NodeId s = scan_similarity_matrix(g, nodes, g.constant(tokens), g.constant(regions), tokens.rows(),
                                          regions.rows());
  return g.value(s)(0, 0);
}

RealMatrix scan_similarity_matrix(const RetrievalModel& m, std::span<const RetrievalInstance> pairs) {
  if (pairs.empty()) throw ContractError("scan_similarity_matrix: no pairs");
  std::vector<const RealMatrix*> tokens;
  std::vector<const RealMatrix*> regions;
  for (const auto& p : pairs) {
    tokens.push_back(&p.tokens);
    regions.push_back(&p.regions);
  }
  CompGraph g;
  const auto nodes = m.bind(g, true);
  const NodeId s = scan_similarity_matrix(g, nodes, g.constant(stack_rows(tokens)), g.constant(stack_rows(regions)),
                                          pairs.front().tokens.rows(), pairs.front().regions.rows());
  return g.value(s);
}

NodeId triplet_loss(CompGraph& g, NodeId sims, double margin) {
  const RealMatrix& s = g.value(sims);
  if (s.rows() != s.cols()) {
    throw DimensionError(fmt::format("triplet_loss: similarity matrix {} is not square", s.shape_string()));
  }
  const std::size_t n = s.rows();
  if (n < 2) throw ContractError("triplet_loss: a batch needs at least 2 pairs");
  const NodeId eye = g.constant(RealMatrix::identity(n));

  auto direction = [&](NodeId rows) {
    const RealMatrix& v = g.value(rows);
    RealMatrix mask(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t best = r == 0 ? 1 : 0;
      for (std::size_t c = 0; c < n; ++c) {
        if (c != r && v(r, c) > v(r, best)) best = c;
      }
      mask(r, best) = 1.0;
    }
    const NodeId positive = row_sums(g, g.mul(rows, eye));
    const NodeId hardest = row_sums(g, g.mul(rows, g.constant(std::move(mask))));
    return g.sum(g.hinge(g.add(hardest, scale(g, positive, -1.0)), margin));
  };
  return g.add(direction(sims), direction(g.transpose(sims)));
}

double triplet_loss(const RealMatrix& sims, double margin) {
  CompGraph g;
  return g.value(triplet_loss(g, g.constant(sims), margin))(0, 0);
}

TrainResult train_retrieval(RetrievalModel& m, std::span<const RetrievalInstance> train,
                            const TrainOptions& opt) {
  return train_loop(m, train, opt, 2,
                    [](CompGraph& g, const RetrievalModel::Nodes& n,
                       std::span<const RetrievalInstance* const> batch) {
                      std::vector<const RealMatrix*> tokens;
                      std::vector<const RealMatrix*> regions;
                      for (const auto* p : batch) {
                        tokens.push_back(&p->tokens);
                        regions.push_back(&p->regions);
                      }
                      const NodeId sims = scan_similarity_matrix(
                          g, n, g.constant(stack_rows(tokens)), g.constant(stack_rows(regions)),
                          batch.front()->tokens.rows(), batch.front()->regions.rows());
                      return triplet_loss(g, sims);
                    });
}

// -------------------------------------------------------------- counting

CountingModel CountingModel::init(AlignmentChoice choice, std::size_t max_count, std::uint64_t seed) {
  constexpr std::size_t d = kAttributeDim;
  Rng64 rng(seed);
  Rng64 proj = rng.fork(kProjSalt);
  Rng64 head = rng.fork(kHeadSalt);
  CountingModel m;
  m.control_proj = proj.gaussian_matrix(kAttributeDim, d, 1.0 / std::sqrt(double(kAttributeDim)));
  m.control_bias = RealMatrix(1, d);
  // a unit row map starts the read unit at the plain alignment score
  m.mac_row_map = RealMatrix(1, d, 1.0);
  m.mac_bias = RealMatrix(1, 1);
  m.alignment = make_alignment(choice.kind, choice.swap, d, rng.fork(kAlignSalt).next());
  m.count_head = head.gaussian_matrix(d + 1, max_count + 1, 1.0 / std::sqrt(double(d + 1)));
  m.head_bias = RealMatrix(1, max_count + 1);
  return m;
}

std::vector<ParamRef> CountingModel::parameters() {
  std::vector<ParamRef> out{{"control_proj", &control_proj},
                            {"control_bias", &control_bias},
                            {"mac.row_map", &mac_row_map},
                            {"mac.bias", &mac_bias}};
  push_alignment(out, alignment);
  out.push_back({"count_head", &count_head});
  out.push_back({"head_bias", &head_bias});
  return out;
}

std::vector<RealMatrix> CountingModel::parameter_values() const {
  return values_of(const_cast<CountingModel*>(this)->parameters());
}

CountingModel::Nodes CountingModel::nodes_from(std::span<const NodeId> ids) const {
  Cursor c(ids);
  Nodes n;
  n.control_proj = c.next();
  n.control_bias = c.next();
  n.mac.row_map = c.next();
  n.mac.bias = c.next();
  n.alignment = alignment_from(alignment, c);
  n.count_head = c.next();
  n.head_bias = c.next();
  c.finish();
  return n;
}

CountingModel::Nodes CountingModel::bind(CompGraph& g, bool frozen) const {
  return nodes_from(bind_values(g, parameter_values(), frozen));
}

NodeId counting_logits(CompGraph& g, const CountingModel::Nodes& m,
                       std::span<const CountingInstance* const> batch) {
  if (batch.empty()) throw ContractError("counting_logits: empty batch");
  const std::size_t objects = batch.front()->objects.rows();
  const std::size_t b = batch.size();
  std::vector<const RealMatrix*> queries;
  for (const auto* inst : batch) {
    if (inst->objects.rows() != objects || inst->objects.cols() != kAttributeDim) {
      throw DimensionError(fmt::format("counting_logits: objects {} do not match {}x{}",
                                       inst->objects.shape_string(), objects, kAttributeDim));
    }
    queries.push_back(&inst->query);
  }
  // control state e, one row per instance
  const NodeId control = g.add(g.matmul(g.constant(stack_rows(queries)), m.control_proj), m.control_bias);
  const NodeId map_column = g.transpose(m.mac.row_map);

  std::vector<NodeId> key_nodes;
  std::vector<NodeId> score_columns;
  for (std::size_t y = 0; y < objects; ++y) {
    RealMatrix keys(b, kAttributeDim);
    for (std::size_t i = 0; i < b; ++i) {
      auto src = batch[i]->objects.row(y);
      std::copy(src.begin(), src.end(), keys.row(i).begin());
    }
    key_nodes.push_back(g.constant(std::move(keys)));
    const NodeId sim = elementwise_similarity(g, m.alignment, control, key_nodes.back());
    score_columns.push_back(g.add(g.matmul(sim, map_column), m.mac.bias));
  }
  const NodeId scores = g.concat_cols(score_columns);  // b x N
  const NodeId weights = g.row_softmax(scores);

  NodeId context = g.mul(key_nodes[0], g.split_cols(weights, 0, 1));
  for (std::size_t y = 1; y < objects; ++y) {
    context = g.add(context, g.mul(key_nodes[y], g.split_cols(weights, y, 1)));
  }
  const NodeId soft_count = row_sums(g, sigmoid(g, scores));
  const NodeId parts[] = {context, soft_count};
  return g.add(g.matmul(g.concat_cols(parts), m.count_head), m.head_bias);
}

RealMatrix counting_forward(const CountingModel& m, const CountingInstance& inst) {
  CompGraph g;
  const auto nodes = m.bind(g, true);
  const CountingInstance* batch[] = {&inst};
  return row_softmax(g.value(counting_logits(g, nodes, batch)));
}

TrainResult train_counting(CountingModel& m, std::span<const CountingInstance> train,
                           const TrainOptions& opt) {
  return train_loop(m, train, opt, 1,
                    [](CompGraph& g, const CountingModel::Nodes& n,
                       std::span<const CountingInstance* const> batch) {
                      std::vector<std::size_t> targets;
                      for (const auto* inst : batch) targets.push_back(inst->count);
                      return g.softmax_cross_entropy(counting_logits(g, n, batch), std::move(targets));
                    });
}

// --------------------------------------------------------------- pointer

PointerModel PointerModel::init(AlignmentChoice choice, std::size_t input_dim, std::size_t dim,
                                std::size_t heads, std::size_t ffn_dim, std::uint64_t seed) {
  if (choice.kind == AlignmentKind::Cosine) {
    throw ConfigError("pointer model: cosine alignment is not supported in self attention");
  }
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError(fmt::format("pointer model: dimension {} is not divisible by {} heads", dim, heads));
  }
  Rng64 rng(seed);
  Rng64 proj = rng.fork(kProjSalt);
  PointerModel m;
  m.input_proj = proj.gaussian_matrix(input_dim, dim, 1.0 / std::sqrt(double(input_dim)));
  m.type_embeddings = proj.gaussian_matrix(3, dim, 1.0 / std::sqrt(double(dim)));
  m.block = EncoderBlockParams::random(heads, dim, ffn_dim, rng.fork(kBlockSalt).next());
  m.alignment = make_alignment(choice.kind, choice.swap, dim / heads, rng.fork(kAlignSalt).next());
  return m;
}

std::vector<ParamRef> PointerModel::parameters() {
  std::vector<ParamRef> out{{"input_proj", &input_proj},
                            {"type_embeddings", &type_embeddings},
                            {"block.query_proj", &block.attention.query_proj},
                            {"block.key_proj", &block.attention.key_proj},
                            {"block.value_proj", &block.attention.value_proj},
                            {"block.output_proj", &block.attention.output_proj},
                            {"block.ffn_in", &block.ffn_in},
                            {"block.ffn_out", &block.ffn_out},
                            {"block.norm1_gain", &block.norm1_gain},
                            {"block.norm1_shift", &block.norm1_shift},
                            {"block.norm2_gain", &block.norm2_gain},
                            {"block.norm2_shift", &block.norm2_shift}};
  push_alignment(out, alignment);
  return out;
}

std::vector<RealMatrix> PointerModel::parameter_values() const {
  return values_of(const_cast<PointerModel*>(this)->parameters());
}

PointerModel::Nodes PointerModel::nodes_from(std::span<const NodeId> ids) const {
  Cursor c(ids);
  Nodes n;
  n.input_proj = c.next();
  n.type_embeddings = c.next();
  n.block.attention.heads = block.attention.heads;
  n.block.attention.query_proj = c.next();
  n.block.attention.key_proj = c.next();
  n.block.attention.value_proj = c.next();
  n.block.attention.output_proj = c.next();
  n.block.ffn_in = c.next();
  n.block.ffn_out = c.next();
  n.block.norm1_gain = c.next();
  n.block.norm1_shift = c.next();
  n.block.norm2_gain = c.next();
  n.block.norm2_shift = c.next();
  n.alignment = alignment_from(alignment, c);
  c.finish();
  return n;
}

PointerModel::Nodes PointerModel::bind(CompGraph& g, bool frozen) const {
  return nodes_from(bind_values(g, parameter_values(), frozen));
}

NodeId pointer_logits(CompGraph& g, const PointerModel::Nodes& m, const PointerInstance& inst) {
  const std::size_t rows = inst.sequence.rows();
  if (inst.types.size() != rows || inst.ocr_concepts.empty() || inst.ocr_count() > rows) {
    throw DimensionError(fmt::format("pointer_logits: {} type tags and {} OCR rows for a {} sequence",
                                     inst.types.size(), inst.ocr_count(), inst.sequence.shape_string()));
  }
  if (inst.types.front() != SegmentType::Question) {
    throw ContractError("pointer_logits: sequence must start with a question row");
  }
  RealMatrix one_hot(rows, 3);
  for (std::size_t r = 0; r < rows; ++r) one_hot(r, static_cast<std::size_t>(inst.types[r])) = 1.0;
  const NodeId x = g.add(g.matmul(g.constant(inst.sequence), m.input_proj),
                         g.matmul(g.constant(std::move(one_hot)), m.type_embeddings));
  const NodeId h = encoder_block(g, m.block, m.alignment, x);

  const std::size_t first_question[] = {0};
  std::vector<std::size_t> ocr(inst.ocr_count());
  std::iota(ocr.begin(), ocr.end(), inst.ocr_offset());
  return g.matmul(select_rows(g, h, first_question), g.transpose(select_rows(g, h, ocr)));
}

RealMatrix pointer_forward(const PointerModel& m, const PointerInstance& inst) {
  CompGraph g;
  const auto nodes = m.bind(g, true);
  return row_softmax(g.value(pointer_logits(g, nodes, inst)));
}

TrainResult train_pointer(PointerModel& m, std::span<const PointerInstance> train, const TrainOptions& opt) {
  return train_loop(m, train, opt, 1,
                    [](CompGraph& g, const PointerModel::Nodes& n, std::span<const PointerInstance* const> batch) {
                      NodeId total = g.softmax_cross_entropy(pointer_logits(g, n, *batch[0]), {batch[0]->answer_index});
                      for (std::size_t i = 1; i < batch.size(); ++i) {
                        total = g.add(total, g.softmax_cross_entropy(pointer_logits(g, n, *batch[i]),
                                                                     {batch[i]->answer_index}));
                      }
                      return total;
                    });
}

// ----------------------------------------------------------- checkpoints

void save_checkpoint(std::ostream& out, std::span<const ParamRef> params) {
  out << "alignbench-checkpoint v1\n" << params.size() << '\n';
  for (const auto& p : params) {
    out << p.name << ' ' << p.value->rows() << ' ' << p.value->cols() << '\n';
    bool first = true;
    for (double v : p.value->values()) {
      out << (first ? "" : " ") << fmt::format("{:.17g}", v);
      first = false;
    }
    out << '\n';
  }
  if (!out) throw IoError("save_checkpoint: write failed");
}

void load_checkpoint(std::istream& in, std::span<const ParamRef> params) {
  std::string magic;
  std::getline(in, magic);
  if (magic != "alignbench-checkpoint v1") throw IoError("load_checkpoint: missing checkpoint header");
  std::size_t count = 0;
  if (!(in >> count)) throw IoError("load_checkpoint: missing parameter count");
  if (count != params.size()) {
    throw ContractError(fmt::format("load_checkpoint: file has {} parameters, model has {}", count, params.size()));
  }
  // Parse everything before touching the model.
  std::vector<RealMatrix> loaded;
  for (const auto& p : params) {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(in >> name >> rows >> cols)) throw IoError("load_checkpoint: truncated parameter header");
    if (name != p.name || rows != p.value->rows() || cols != p.value->cols()) {
      throw ContractError(fmt::format("load_checkpoint: found {} {}x{}, expected {} {}", name, rows, cols, p.name,
                                      p.value->shape_string()));
    }
    RealMatrix m(rows, cols);
    for (double& v : m.values()) {
      if (!(in >> v)) throw IoError(fmt::format("load_checkpoint: truncated values for {}", name));
    }
    loaded.push_back(std::move(m));
  }
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = std::move(loaded[i]);
}

}  // namespace alignbench
