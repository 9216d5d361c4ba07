#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alignbench/alignment.hpp"
#include "alignbench/attention.hpp"
#include "alignbench/gradcheck.hpp"
#include "oracles.hpp"

using namespace alignbench;

namespace {

AlignmentSpec with_params(AlignmentKind kind, bool swap, std::optional<RealMatrix> w,
                          std::optional<RealMatrix> b = std::nullopt) {
  return AlignmentSpec{kind, swap, std::move(w), std::move(b)};
}

std::vector<std::size_t> argsort_row(const RealMatrix& m, std::size_t r) {
  std::vector<std::size_t> idx(m.cols());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return m(r, a) > m(r, b); });
  return idx;
}

}  // namespace

TEST_CASE("score: closed-form examples") {
  const AlignmentSpec dot{AlignmentKind::Dot};
  CHECK(score(dot, RealMatrix::from_rows({{1, 0}}), RealMatrix::from_rows({{1, 0}, {0, 1}})) ==
        RealMatrix::from_rows({{1, 0}}));

  const AlignmentSpec scaled{AlignmentKind::ScaledDot};
  const RealMatrix two = RealMatrix::from_rows({{2, 0, 0, 0}});
  CHECK(score(scaled, two, two) == RealMatrix::from_rows({{2}}));

  const AlignmentSpec cosine{AlignmentKind::Cosine};
  const RealMatrix q = RealMatrix::from_rows({{1, 2}});
  const RealMatrix k = RealMatrix::from_rows({{2, 4}, {-2, 1}, {-3, -6}, {0, 0}});
  const RealMatrix c = score(cosine, q, k);
  CHECK(c(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(c(0, 1)) <= 1e-15);
  CHECK(c(0, 2) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(c(0, 3) == 0.0);
}

TEST_CASE("score: biased general star matches a per-pair scalar loop") {
  Rng64 rng(77);
  const RealMatrix q = rng.gaussian_matrix(4, 3, 1.0);
  const RealMatrix k = rng.gaussian_matrix(5, 3, 1.0);
  const RealMatrix w = rng.gaussian_matrix(3, 3, 1.0);
  const RealMatrix b = rng.gaussian_matrix(1, 3, 1.0);
  for (bool star : {true, false}) {
    const RealMatrix got = score(with_params(AlignmentKind::BiasedGeneral, star, w, b), q, k);
    const auto qr = oracle::to_rows(q);
    const auto kr = oracle::to_rows(k);
    const auto wr = oracle::to_rows(w);
    const auto br = oracle::to_rows(b)[0];
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t y = 0; y < 5; ++y)
        CHECK(std::abs(got(x, y) - oracle::biased_general(qr[x], kr[y], wr, br, star)) <= 1e-12);
  }
}

TEST_CASE("score: algebraic identities over random draws (property)") {
  Rng64 rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = std::array<std::size_t, 3>{3, 8, 16}[trial % 3];
    const RealMatrix q = rng.gaussian_matrix(1 + rng.below(5), d, 1.0);
    const RealMatrix k = rng.gaussian_matrix(1 + rng.below(6), d, 1.0);
    const RealMatrix w = rng.gaussian_matrix(d, d, 1.0);
    const RealMatrix b = rng.gaussian_matrix(1, d, 1.0);

    // Swap/transpose identity.
    const RealMatrix star = score(with_params(AlignmentKind::General, true, w), q, k);
    const RealMatrix dagger_t = score(with_params(AlignmentKind::General, false, transpose(w)), q, k);
    CHECK(max_abs_diff(star, dagger_t) <= 1e-10);

    // Identity reductions.
    const RealMatrix dot = score(AlignmentSpec{AlignmentKind::Dot}, q, k);
    CHECK(max_abs_diff(score(with_params(AlignmentKind::General, false, RealMatrix::identity(d)), q, k),
                       dot) <= 1e-12);
    for (bool swap : {false, true}) {
      const RealMatrix general = score(with_params(AlignmentKind::General, swap, w), q, k);
      const RealMatrix biased0 =
          score(with_params(AlignmentKind::BiasedGeneral, swap, w, RealMatrix(1, d)), q, k);
      CHECK(max_abs_diff(general, biased0) <= 1e-12);
    }

    // Scaling relation and ranking invariance.
    const RealMatrix scaled = score(AlignmentSpec{AlignmentKind::ScaledDot}, q, k);
    for (std::size_t i = 0; i < dot.size(); ++i)
      CHECK(std::abs(scaled.values()[i] - dot.values()[i] / std::sqrt(double(d))) <= 1e-12);
    for (std::size_t r = 0; r < dot.rows(); ++r) CHECK(argsort_row(dot, r) == argsort_row(scaled, r));

    // Cosine range and positive row rescaling.
    const RealMatrix cos = score(AlignmentSpec{AlignmentKind::Cosine}, q, k);
    for (double v : cos.values()) CHECK((v >= -1.0 && v <= 1.0));
    RealMatrix q_scaled = q;
    for (std::size_t r = 0; r < q.rows(); ++r)
      for (double& v : q_scaled.row(r)) v *= 0.1 + 5.0 * double(r);
    CHECK(max_abs_diff(score(AlignmentSpec{AlignmentKind::Cosine}, q_scaled, k), cos) <= 1e-12);
  }
}

TEST_CASE("score: activated general equals biased general on nonnegative scores") {
  // Nonnegative inputs and weights keep every biased score >= 0.
  Rng64 rng(8);
  RealMatrix q = rng.gaussian_matrix(3, 4, 1.0);
  RealMatrix k = rng.gaussian_matrix(5, 4, 1.0);
  RealMatrix w = rng.gaussian_matrix(4, 4, 1.0);
  RealMatrix b = rng.gaussian_matrix(1, 4, 1.0);
  for (RealMatrix* m : {&q, &k, &w, &b})
    for (double& v : m->values()) v = std::abs(v);
  for (bool swap : {false, true}) {
    const RealMatrix biased = score(with_params(AlignmentKind::BiasedGeneral, swap, w, b), q, k);
    const RealMatrix act = score(with_params(AlignmentKind::ActivatedGeneral, swap, w, b), q, k);
    CHECK(max_abs_diff(biased, act) <= 1e-12);
  }
}

TEST_CASE("row-constant bias: dagger form is softmax-invariant, star form is not") {
  Rng64 rng(99);
  const std::size_t d = 4;
  const RealMatrix q = rng.gaussian_matrix(3, d, 1.0);
  const RealMatrix k = rng.gaussian_matrix(5, d, 1.0);
  const RealMatrix w = rng.gaussian_matrix(d, d, 1.0);
  const RealMatrix b = rng.gaussian_matrix(1, d, 2.0);
  const RealMatrix general = row_softmax(score(with_params(AlignmentKind::General, false, w), q, k));
  const RealMatrix dagger =
      row_softmax(score(with_params(AlignmentKind::BiasedGeneral, false, w, b), q, k));
  CHECK(max_abs_diff(general, dagger) <= 1e-9);

  const RealMatrix general_star =
      row_softmax(score(with_params(AlignmentKind::General, true, w), q, k));
  const RealMatrix star =
      row_softmax(score(with_params(AlignmentKind::BiasedGeneral, true, w, b), q, k));
  CHECK(max_abs_diff(general_star, star) > 1e-3);
}

TEST_CASE("score: contract and shape errors") {
  const RealMatrix q(2, 3, 1.0);
  CHECK_THROWS_AS(score(AlignmentSpec{AlignmentKind::Dot}, q, RealMatrix(2, 4, 1.0)), DimensionError);
  CHECK_THROWS_AS(score(AlignmentSpec{AlignmentKind::Dot, true}, q, q), ContractError);
  CHECK_THROWS_AS(score(AlignmentSpec{AlignmentKind::Cosine, true}, q, q), ContractError);
  CHECK_THROWS_AS(score(AlignmentSpec{AlignmentKind::General}, q, q), ContractError);
  CHECK_THROWS_AS(score(with_params(AlignmentKind::General, false, RealMatrix(2, 2)), q, q),
                  DimensionError);
  CHECK_THROWS_AS(score(with_params(AlignmentKind::General, false, RealMatrix(3, 3), RealMatrix(1, 3)), q, q),
                  ContractError);
  CHECK_THROWS_AS(
      score(with_params(AlignmentKind::BiasedGeneral, false, RealMatrix(3, 3), RealMatrix(1, 2)), q, q),
      DimensionError);
}

TEST_CASE("init_params: deterministic, zero bias, scaled standard deviation") {
  const AlignmentParams a = init_params(AlignmentKind::BiasedGeneral, 8, 5);
  const AlignmentParams b = init_params(AlignmentKind::BiasedGeneral, 8, 5);
  CHECK(*a.weight == *b.weight);
  CHECK(*a.bias == RealMatrix(1, 8, 0.0));
  CHECK_FALSE(init_params(AlignmentKind::Dot, 8, 5).weight.has_value());
  CHECK_FALSE(init_params(AlignmentKind::General, 8, 5).bias.has_value());
  CHECK_THROWS_AS(init_params(AlignmentKind::General, 0, 5), ContractError);

  const RealMatrix w = *init_params(AlignmentKind::General, 64, 17).weight;
  double mean = 0.0;
  for (double v : w.values()) mean += v;
  mean /= double(w.size());
  double var = 0.0;
  for (double v : w.values()) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / double(w.size() - 1));
  CHECK(std::abs(sd - 0.125) <= 0.15 * 0.125);
}

TEST_CASE("alignment names round-trip through the CLI vocabulary") {
  for (std::string_view name : kAlignmentNames) {
    const auto choice = parse_alignment_name(name);
    REQUIRE(choice.has_value());
    CHECK(alignment_name(choice->kind, choice->swap) == name);
  }
  CHECK_FALSE(parse_alignment_name("magic").has_value());
  CHECK(variant_name(AlignmentKind::General, true) == "star");
  CHECK(variant_name(AlignmentKind::BiasedGeneral, false) == "dagger");
  CHECK(variant_name(AlignmentKind::Cosine, false) == "none");
}

TEST_CASE("elementwise similarity rows sum to the score") {
  Rng64 rng(31);
  const std::size_t d = 5;
  const RealMatrix e = rng.gaussian_matrix(1, d, 1.0);
  const RealMatrix k = rng.gaussian_matrix(4, d, 1.0);
  for (std::string_view name : kAlignmentNames) {
    const auto choice = *parse_alignment_name(name);
    if (choice.kind == AlignmentKind::ActivatedGeneral) continue;
    AlignmentSpec spec = make_alignment(choice.kind, choice.swap, d, 3);
    if (spec.bias) spec.bias = rng.gaussian_matrix(1, d, 1.0);
    const RealMatrix vec = elementwise_similarity(spec, e, k);
    const RealMatrix s = score(spec, e, k);
    for (std::size_t y = 0; y < k.rows(); ++y) {
      double total = 0.0;
      for (double v : vec.row(y)) total += v;
      CHECK_MESSAGE(std::abs(total - s(0, y)) <= 1e-12, name);
    }
  }
  // one query row per key is the batched form; any other count is rejected
  CHECK(elementwise_similarity(AlignmentSpec{}, k, k).rows() == k.rows());
  CHECK_THROWS_AS(elementwise_similarity(AlignmentSpec{}, rng.gaussian_matrix(2, d, 1.0), k), ContractError);
}

TEST_CASE("score gradients for every kind match finite differences") {
  Rng64 rng(4);
  const std::size_t d = 3;
  const RealMatrix q = rng.gaussian_matrix(2, d, 1.0);
  const RealMatrix k = rng.gaussian_matrix(4, d, 1.0);
  const RealMatrix w = rng.gaussian_matrix(d, d, 1.0);
  const RealMatrix b = rng.gaussian_matrix(1, d, 1.0);
  const RealMatrix head = rng.gaussian_matrix(2, 4, 1.0);
  for (std::string_view name : kAlignmentNames) {
    const auto choice = *parse_alignment_name(name);
    std::vector<RealMatrix> params = {q, k};
    if (has_weight(choice.kind)) params.push_back(w);
    if (has_bias(choice.kind)) params.push_back(b);
    const GradCheckResult r = check_gradients(
        [&](CompGraph& g, std::span<const NodeId> p) {
          AlignmentNodes f{choice.kind, choice.swap};
          if (p.size() > 2) f.weight = p[2];
          if (p.size() > 3) f.bias = p[3];
          return g.sum(g.mul(score(g, f, p[0], p[1]), g.constant(head)));
        },
        params);
    CHECK_MESSAGE(r.max_relative_error <= kGradientTolerance, name << " " << r.max_relative_error);
  }
}
