#include "alignbench/check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string_view>

#include <fmt/format.h>

#include "alignbench/alignment.hpp"
#include "alignbench/attention.hpp"
#include "alignbench/gradcheck.hpp"
#include "alignbench/metrics.hpp"
#include "alignbench/models.hpp"
#include "alignbench/rng.hpp"

namespace alignbench {
namespace {

// Worst error seen plus the first violation.
class Tally {
 public:
  void within(double err, double tol, std::string_view what) {
    worst_ = std::max(worst_, err);
    if (!(err <= tol) && failure_.empty()) failure_ = fmt::format("{}: {:.3g} > {:.3g}", what, err, tol);
  }
  void expect(bool ok, std::string_view what) {
    if (!ok && failure_.empty()) failure_ = std::string(what);
  }
  CheckResult result(std::string name) const {
    CheckResult r{std::move(name), failure_.empty(), failure_, 0.0};
    if (r.passed) r.detail = fmt::format("worst error {:.3g}", worst_);
    return r;
  }

 private:
  double worst_ = 0.0;
  std::string failure_;
};

AlignmentSpec spec_of(AlignmentKind kind, bool swap, std::optional<RealMatrix> w = std::nullopt,
                      std::optional<RealMatrix> b = std::nullopt) {
  AlignmentSpec s;
  s.kind = kind;
  s.swap = swap;
  s.weight = std::move(w);
  s.bias = std::move(b);
  return s;
}

std::vector<AlignmentChoice> every_alignment() {
  std::vector<AlignmentChoice> out;
  for (auto name : kAlignmentNames) out.push_back(*parse_alignment_name(name));
  return out;
}

std::vector<std::size_t> descending_order(std::span<const double> row) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  return idx;
}

double row_sum_error(const RealMatrix& w) {
  double worst = 0.0;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    auto row = w.row(r);
    worst = std::max(worst, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
  }
  return worst;
}

// --------------------------------------------------------------- checks

Tally alignment_algebra() {
  Tally t;
  Rng64 rng(101);
  const std::size_t dims[] = {3, 8, 16};
  for (std::size_t draw = 0; draw < 200; ++draw) {
    const std::size_t d = dims[draw % 3];
    const RealMatrix q = rng.gaussian_matrix(1 + rng.below(5), d, 1.0);
    const RealMatrix k = rng.gaussian_matrix(1 + rng.below(6), d, 1.0);
    const RealMatrix w = rng.gaussian_matrix(d, d, 1.0 / std::sqrt(static_cast<double>(d)));
    const RealMatrix zero(1, d);

    const RealMatrix dot = score(spec_of(AlignmentKind::Dot, false), q, k);
    const RealMatrix general_star = score(spec_of(AlignmentKind::General, true, w), q, k);
    t.within(max_abs_diff(general_star, score(spec_of(AlignmentKind::General, false, transpose(w)), q, k)), 1e-10,
             "general* W vs general-dagger W^T");
    t.within(max_abs_diff(score(spec_of(AlignmentKind::General, false, RealMatrix::identity(d)), q, k), dot), 1e-12,
             "general-dagger I vs dot");
    for (bool swap : {false, true}) {
      const RealMatrix general = score(spec_of(AlignmentKind::General, swap, w), q, k);
      t.within(max_abs_diff(score(spec_of(AlignmentKind::BiasedGeneral, swap, w, zero), q, k), general), 1e-12,
               "biased general with b = 0 vs general");
    }
    const RealMatrix scaled = score(spec_of(AlignmentKind::ScaledDot, false), q, k);
    RealMatrix expected = dot;
    for (double& v : expected.values()) v /= std::sqrt(static_cast<double>(d));
    t.within(max_abs_diff(scaled, expected), 1e-12, "scaled dot vs dot / sqrt(d)");
    for (std::size_t r = 0; r < q.rows(); ++r) {
      t.expect(descending_order(scaled.row(r)) == descending_order(dot.row(r)), "scaled dot changed a row order");
    }
  }
  return t;
}

Tally softmax_normalization() {
  Tally t;
  Rng64 rng(202);
  for (auto choice : every_alignment()) {
    for (std::size_t draw = 0; draw < 25; ++draw) {
      const std::size_t d = 2 + rng.below(7);
      AlignmentSpec spec = make_alignment(choice.kind, choice.swap, d, rng.next());
      if (spec.bias) spec.bias = rng.gaussian_matrix(1, d, 1.0);
      const RealMatrix q = rng.gaussian_matrix(1 + rng.below(4), d, 2.0);
      const RealMatrix k = rng.gaussian_matrix(1 + rng.below(6), d, 2.0);
      t.within(row_sum_error(cross_attend(spec, q, k).weights), 1e-9, "weight row sum");
    }
  }

  // Every activated score clipped to zero: rows must come out uniform.
  {
    const std::size_t d = 4;
    RealMatrix q = rng.gaussian_matrix(3, d, 1.0);
    RealMatrix k = rng.gaussian_matrix(5, d, 1.0);
    for (double& v : q.values()) v = std::abs(v);
    for (double& v : k.values()) v = std::abs(v);
    RealMatrix minus_identity = RealMatrix::identity(d);
    for (double& v : minus_identity.values()) v = -v;
    const auto out = cross_attend(spec_of(AlignmentKind::ActivatedGeneral, false, minus_identity, RealMatrix(1, d)),
                                  q, k);
    t.within(max_abs_diff(out.scores, RealMatrix(3, 5)), 0.0, "activated scores not clipped");
    t.within(max_abs_diff(out.weights, RealMatrix(3, 5, 0.2)), 1e-12, "all-zero activated row not uniform");
    t.within(row_sum_error(out.weights), 1e-9, "all-zero activated row sum");
  }

  // Dagger bias shifts whole rows; softmax removes it.
  for (std::size_t draw = 0; draw < 50; ++draw) {
    const std::size_t d = 3 + rng.below(6);
    const RealMatrix w = rng.gaussian_matrix(d, d, 1.0);
    const RealMatrix b = rng.gaussian_matrix(1, d, 2.0);
    const RealMatrix q = rng.gaussian_matrix(3, d, 1.0);
    const RealMatrix k = rng.gaussian_matrix(4, d, 1.0);
    t.within(max_abs_diff(row_softmax(score(spec_of(AlignmentKind::BiasedGeneral, false, w, b), q, k)),
                          row_softmax(score(spec_of(AlignmentKind::General, false, w), q, k))),
             1e-9, "biased-dagger vs general-dagger weights");
  }

  // Star bias varies along the row, so the weights change.
  const RealMatrix q = RealMatrix::from_rows({{0.0, 0.0}});
  const RealMatrix k = RealMatrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  const RealMatrix b = RealMatrix::from_rows({{5.0, 0.0}});
  const double diff =
      max_abs_diff(row_softmax(score(spec_of(AlignmentKind::BiasedGeneral, true, RealMatrix::identity(2), b), q, k)),
                   row_softmax(score(spec_of(AlignmentKind::General, true, RealMatrix::identity(2)), q, k)));
  t.expect(diff > 1e-3, fmt::format("biased-star counterexample differs by only {:.3g}", diff));
  return t;
}

// Checks every parameter of a model. The biased dagger bias has a
// structurally zero gradient whose finite differences are rounding noise, so
// it is held fixed and its analytic gradient must vanish instead. The
// activated dagger bias is zero-gradient too unless some softmax row is only
// partly clipped by the ReLU, so it is redrawn until its gradient is live.
template <typename Model, typename Loss>
void model_gradients(Tally& t, Model m, Loss loss, Rng64& rng, std::string_view label) {
  std::size_t bias_index = 0;
  const auto refs = m.parameters();
  for (std::size_t i = 0; i < refs.size(); ++i)
    if (refs[i].name == "alignment.bias") bias_index = i;
  // Analytic gradient of the alignment bias.
  auto analytic = [&] {
    CompGraph g;
    std::vector<NodeId> ids;
    for (const auto& v : m.parameter_values()) ids.push_back(g.parameter(v));
    GradientMap grads = g.reverse_sweep(loss(g, m.nodes_from(ids)));
    return grads.at(ids[bias_index]);
  };
  if (m.alignment.kind == AlignmentKind::ActivatedGeneral && !m.alignment.swap) {
    const std::size_t d = m.alignment.bias->cols();
    for (int attempt = 0; attempt < 50 && max_abs_diff(analytic(), RealMatrix(1, d)) <= 1e-8; ++attempt) {
      m.alignment.bias = rng.gaussian_matrix(1, d, 1.0);
    }
    t.expect(max_abs_diff(analytic(), RealMatrix(1, d)) > 1e-8,
             fmt::format("{}: no bias draw with a live gradient", label));
  }

  std::vector<RealMatrix> values = m.parameter_values();
  // Only where scores feed a softmax directly; the counting read unit keeps
  // the bias inside an elementwise vector.
  const bool dagger_bias = m.alignment.kind == AlignmentKind::BiasedGeneral && !m.alignment.swap &&
                           bias_index + 1 == refs.size();
  if (!dagger_bias) {
    auto build = [&](CompGraph& g, std::span<const NodeId> ids) { return loss(g, m.nodes_from(ids)); };
    t.within(check_gradients(build, values).max_relative_error, kGradientTolerance, label);
    return;
  }
  const RealMatrix bias = values.back();
  values.pop_back();
  auto build = [&](CompGraph& g, std::span<const NodeId> ids) {
    std::vector<NodeId> all(ids.begin(), ids.end());
    all.push_back(g.constant(bias));
    return loss(g, m.nodes_from(all));
  };
  t.within(check_gradients(build, values).max_relative_error, kGradientTolerance, label);

  t.within(max_abs_diff(analytic(), RealMatrix(bias.rows(), bias.cols())), 1e-12,
           fmt::format("{} dagger bias gradient", label));
}

Tally gradients() {
  Tally t;
  Rng64 rng(303);
  const std::size_t d = 3;

  for (auto choice : every_alignment()) {
    const std::string name = alignment_name(choice.kind, choice.swap);
    const RealMatrix score_probe = rng.gaussian_matrix(2, 4, 1.0);
    const RealMatrix context_probe = rng.gaussian_matrix(2, d, 1.0);
    std::vector<RealMatrix> params = {rng.gaussian_matrix(2, d, 1.0), rng.gaussian_matrix(4, d, 1.0)};
    if (has_weight(choice.kind)) params.push_back(rng.gaussian_matrix(d, d, 1.0));
    if (has_bias(choice.kind)) params.push_back(rng.gaussian_matrix(1, d, 1.0));
    auto bind = [&](std::span<const NodeId> p, std::size_t first) {
      AlignmentNodes f{choice.kind, choice.swap, std::nullopt, std::nullopt};
      if (p.size() > first) f.weight = p[first];
      if (p.size() > first + 1) f.bias = p[first + 1];
      return f;
    };
    auto cross = [&](CompGraph& g, std::span<const NodeId> p) {
      const CrossAttentionNodes out = cross_attend(g, bind(p, 2), p[0], p[1]);
      return g.add(g.sum(g.mul(out.contexts, g.constant(context_probe))),
                   g.sum(g.mul(out.scores, g.constant(score_probe))));
    };
    t.within(check_gradients(cross, params).max_relative_error, kGradientTolerance,
             fmt::format("cross_attend {}", name));

    const RealMatrix mac_probe = rng.gaussian_matrix(1, 4, 1.0);
    std::vector<RealMatrix> mac_params = {rng.gaussian_matrix(1, d, 1.0), rng.gaussian_matrix(4, d, 1.0),
                                          rng.gaussian_matrix(1, d, 1.0), RealMatrix(1, 1, 0.3)};
    for (std::size_t i = 2; i < params.size(); ++i) mac_params.push_back(params[i]);
    auto mac = [&](CompGraph& g, std::span<const NodeId> p) {
      const NodeId a = mac_score(g, bind(p, 4), p[0], p[1], MacScoreNodes{p[2], p[3]});
      return g.add(g.sum(g.mul(g.row_softmax(a), g.constant(mac_probe))), g.sum(g.mul(a, g.constant(mac_probe))));
    };
    t.within(check_gradients(mac, mac_params).max_relative_error, kGradientTolerance,
             fmt::format("mac_score {}", name));
  }

  for (std::size_t heads : {1u, 2u}) {
    const MultiHeadConfig cfg = MultiHeadConfig::random(heads, 4, 10 + heads);
    const RealMatrix probe = rng.gaussian_matrix(3, 4, 1.0);
    auto loss = [&](CompGraph& g, std::span<const NodeId> p) {
      const MultiHeadNodes nodes{heads, p[1], p[2], p[3], p[4]};
      AlignmentNodes f{AlignmentKind::BiasedGeneral, true, p[5], p[6]};
      return g.sum(g.mul(self_attend(g, nodes, f, p[0]), g.constant(probe)));
    };
    const std::size_t hd = 4 / heads;
    t.within(check_gradients(loss, {rng.gaussian_matrix(3, 4, 1.0), cfg.query_proj, cfg.key_proj, cfg.value_proj,
                                    cfg.output_proj, rng.gaussian_matrix(hd, hd, 1.0), rng.gaussian_matrix(1, hd, 1.0)})
                 .max_relative_error,
             kGradientTolerance, fmt::format("self_attend h={}", heads));
  }

  {
    const EncoderBlockParams p = EncoderBlockParams::random(2, 4, 8, 12);
    const RealMatrix probe = rng.gaussian_matrix(3, 4, 1.0);
    auto loss = [&](CompGraph& g, std::span<const NodeId> x) {
      const EncoderBlockNodes nodes{MultiHeadNodes{2, x[1], x[2], x[3], x[4]}, x[5], x[6], x[7], x[8], x[9], x[10]};
      return g.sum(g.mul(encoder_block(g, nodes, AlignmentNodes{AlignmentKind::ScaledDot, false, std::nullopt, std::nullopt}, x[0]), g.constant(probe)));
    };
    t.within(check_gradients(loss, {rng.gaussian_matrix(3, 4, 1.0), p.attention.query_proj, p.attention.key_proj,
                                    p.attention.value_proj, p.attention.output_proj, p.ffn_in, p.ffn_out,
                                    rng.gaussian_matrix(1, 4, 1.0), rng.gaussian_matrix(1, 4, 1.0),
                                    rng.gaussian_matrix(1, 4, 1.0), rng.gaussian_matrix(1, 4, 1.0)})
                 .max_relative_error,
             kGradientTolerance, "encoder_block");
  }

  // Models: scan similarity with the triplet loss, counting and pointer
  // forwards with cross-entropy.
  RetrievalConfig rc;
  rc.concepts = 6;
  rc.input_dim = 5;
  rc.regions = 3;
  rc.tokens = 2;
  rc.train_pairs = 3;
  rc.test_pairs = 3;
  const RetrievalData retrieval = gen_retrieval(rc, 4);
  RealMatrix tokens(6, 5), regions(9, 5);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& inst = retrieval.split.train[i];
    for (std::size_t r = 0; r < 2; ++r) std::ranges::copy(inst.tokens.row(r), tokens.row(2 * i + r).begin());
    for (std::size_t r = 0; r < 3; ++r) std::ranges::copy(inst.regions.row(r), regions.row(3 * i + r).begin());
  }
  const RealMatrix scan_probe = rng.gaussian_matrix(3, 3, 1.0);

  CountingConfig cc;
  cc.objects = 3;
  cc.train = 3;
  cc.test = 1;
  const auto counting = gen_counting(cc, 8);
  std::vector<const CountingInstance*> batch;
  std::vector<std::size_t> counts;
  for (const auto& inst : counting.train) {
    batch.push_back(&inst);
    counts.push_back(inst.count);
  }

  PointerConfig pc;
  pc.question = 2;
  pc.objects = 1;
  pc.ocr = 2;
  pc.input_dim = 4;
  pc.concepts = 4;
  pc.train = 2;
  pc.test = 1;
  const PointerData pointer = gen_pointer(pc, 6);

  for (auto choice : every_alignment()) {
    const std::string name = alignment_name(choice.kind, choice.swap);
    auto rm = RetrievalModel::init(choice, 5, 4, 3);
    if (rm.alignment.bias) rm.alignment.bias = rng.gaussian_matrix(1, 4, 0.5);
    model_gradients(
        t, rm,
        [&](CompGraph& g, const RetrievalModel::Nodes& n) {
          NodeId s = scan_similarity_matrix(g, n, g.constant(tokens), g.constant(regions), 2, 3);
          return g.add(g.sum(g.mul(s, g.constant(scan_probe))), triplet_loss(g, s, 0.5));
        },
        rng, fmt::format("scan + triplet {}", name));

    auto cm = CountingModel::init(choice, cc.objects, 5);
    cm.mac_row_map = rng.gaussian_matrix(1, kAttributeDim, 1.0);
    cm.control_bias = rng.gaussian_matrix(1, kAttributeDim, 0.3);
    if (cm.alignment.bias) cm.alignment.bias = rng.gaussian_matrix(1, kAttributeDim, 0.5);
    model_gradients(
        t, cm,
        [&](CompGraph& g, const CountingModel::Nodes& n) {
          return g.softmax_cross_entropy(counting_logits(g, n, batch), counts);
        },
        rng, fmt::format("counting cross-entropy {}", name));

    if (choice.kind == AlignmentKind::Cosine) continue;
    auto pm = PointerModel::init(choice, 4, 4, 2, 6, 3);
    if (pm.alignment.bias) pm.alignment.bias = rng.gaussian_matrix(1, 2, 0.5);
    model_gradients(
        t, pm,
        [&](CompGraph& g, const PointerModel::Nodes& n) {
          NodeId total = g.scalar(0.0);
          for (const auto& inst : pointer.split.train) {
            total = g.add(total, g.softmax_cross_entropy(pointer_logits(g, n, inst), {inst.answer_index}));
          }
          return total;
        },
        rng, fmt::format("pointer cross-entropy {}", name));
  }
  return t;
}

Tally mechanism_consistency() {
  Tally t;
  Rng64 rng(404);
  for (auto choice : every_alignment()) {
    const std::size_t d = 5;
    AlignmentSpec spec = make_alignment(choice.kind, choice.swap, d, rng.next());
    if (spec.bias) spec.bias = rng.gaussian_matrix(1, d, 1.0);
    const RealMatrix q = rng.gaussian_matrix(4, d, 1.0);

    const RealMatrix key = rng.gaussian_matrix(1, d, 1.0);
    const RealMatrix single = cross_attend(spec, q, key).contexts;
    for (std::size_t r = 0; r < q.rows(); ++r) {
      t.within(max_abs_diff(RealMatrix::row_vector(single.row(r)), key), 1e-12, "single-key context");
    }

    // A context is certified inside the hull by its non-negative weights
    // summing to one and reproducing it.
    const RealMatrix k = rng.gaussian_matrix(6, d, 1.0);
    const auto out = cross_attend(spec, q, k);
    t.expect(std::ranges::all_of(out.weights.values(), [](double w) { return w >= 0.0; }), "negative weight");
    t.within(row_sum_error(out.weights), 1e-9, "hull weights sum");
    t.within(max_abs_diff(matmul(out.weights, k), out.contexts), 1e-9, "context outside the hull");
  }

  for (std::size_t d : {2u, 4u, 7u}) {
    const RealMatrix s = rng.gaussian_matrix(5, d, 1.0);
    const AlignmentSpec dot = spec_of(AlignmentKind::Dot, false);
    t.within(max_abs_diff(self_attend(MultiHeadConfig::identity(1, d), dot, s), cross_attend(dot, s, s).contexts),
             1e-10, "identity self attention vs cross attention");

    const RealMatrix e = rng.gaussian_matrix(1, d, 1.0);
    const RealMatrix keys = rng.gaussian_matrix(6, d, 1.0);
    const MacScoreParams unit{RealMatrix(1, d, 1.0), 0.0};
    t.within(max_abs_diff(mac_score(dot, e, keys, unit), score(dot, e, keys)), 1e-12, "unit mac_score vs dot");
  }
  return t;
}

Tally metric_oracles() {
  Tally t;
  Rng64 rng(505);
  for (std::size_t table = 0; table < 50; ++table) {
    RankingTable rt{rng.gaussian_matrix(20, 20, 1.0), {}};
    if (table % 5 == 0) {
      for (double& v : rt.similarity.values()) v = std::round(v * 2.0);
    }
    for (std::size_t q = 0; q < 20; ++q) rt.truth.push_back(rng.below(20));
    for (std::size_t k : {1u, 5u, 10u}) {
      std::size_t hits = 0;
      for (std::size_t q = 0; q < 20; ++q) {
        auto order = descending_order(rt.similarity.row(q));
        hits += std::find(order.begin(), order.end(), rt.truth[q]) - order.begin() < static_cast<long>(k) ? 1 : 0;
      }
      t.within(std::abs(recall_at_k(rt, k) - 100.0 * static_cast<double>(hits) / 20.0), 1e-12, "recall_at_k");
    }
  }
  RankingTable perfect{RealMatrix::identity(20), {}};
  for (std::size_t q = 0; q < 20; ++q) perfect.truth.push_back(q);
  t.within(std::abs(rsum(perfect) - 300.0), 0.0, "rsum of a perfect table");

  t.expect(levenshtein("kitten", "sitting") == 3, "levenshtein(kitten, sitting) != 3");
  auto word = [&] {
    std::string s(rng.below(7), ' ');
    for (char& c : s) c = static_cast<char>('a' + rng.below(3));
    return s;
  };
  for (std::size_t i = 0; i < 500; ++i) {
    const std::string a = word(), b = word(), c = word();
    const std::size_t ab = levenshtein(a, b);
    t.expect(levenshtein(a, a) == 0, "d(a, a) != 0");
    t.expect((ab == 0) == (a == b), "d(a, b) = 0 for distinct strings");
    t.expect(ab == levenshtein(b, a), "levenshtein not symmetric");
    t.expect(levenshtein(a, c) <= ab + levenshtein(b, c), "triangle inequality");
  }
  t.within(std::abs(anls(QAResult{"kitten", {"sitting"}}) - 4.0 / 7.0), 1e-4, "anls(kitten, sitting)");

  const std::vector<std::string> three(3, "two"), four(4, "two");
  t.expect(vqa_soft_score(QAResult{"two", three}) == 1.0, "soft score at three matches");
  t.expect(vqa_soft_score(QAResult{"two", four}) == 1.0, "soft score above three matches");
  t.expect(vqa_soft_score(QAResult{"two", {"two", "one", "two"}}) == 2.0 / 3.0, "soft score at two matches");
  t.expect(vqa_soft_score(QAResult{"two", {"one"}}) == 0.0, "soft score with no match");
  return t;
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckProgress& progress) {
  const std::pair<const char*, Tally (*)()> checks[] = {
      {"alignment algebra", alignment_algebra},
      {"softmax normalization and bias", softmax_normalization},
      {"gradients vs central differences", gradients},
      {"attention mechanism consistency", mechanism_consistency},
      {"metric oracles", metric_oracles},
  };
  std::vector<CheckResult> results;
  for (const auto& [name, fn] : checks) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = fn().result(name);
    } catch (const std::exception& e) {
      r = CheckResult{name, false, fmt::format("threw: {}", e.what()), 0.0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (progress) progress(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace alignbench
