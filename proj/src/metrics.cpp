#include "alignbench/metrics.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace alignbench {
namespace {

std::string normalize_answer(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void require_ground_truth(const QAResult& r) {
  if (r.ground_truths.empty()) throw ContractError("QA result needs at least one ground truth");
}

}  // namespace

void RankingTable::validate() const {
  if (similarity.empty()) throw ContractError("ranking table is empty");
  if (truth.size() != similarity.rows()) {
    throw DimensionError(fmt::format("ranking table has {} queries but {} ground-truth indices",
                                     similarity.rows(), truth.size()));
  }
  for (std::size_t q = 0; q < truth.size(); ++q) {
    if (truth[q] >= similarity.cols()) {
      throw ContractError(fmt::format("ground truth {} of query {} is out of range for {} candidates",
                                      truth[q], q, similarity.cols()));
    }
  }
}

std::size_t truth_rank(const RankingTable& t, std::size_t q) {
  const std::size_t gt = t.truth[q];
  const double target = t.similarity(q, gt);
  std::size_t rank = 0;
  for (std::size_t c = 0; c < t.similarity.cols(); ++c) {
    double s = t.similarity(q, c);
    if (s > target || (s == target && c < gt)) ++rank;
  }
  return rank;
}

double recall_at_k(const RankingTable& t, std::size_t k) {
  t.validate();
  if (k < 1 || k > t.similarity.cols()) {
    throw ContractError(fmt::format("recall_at_k: k={} outside [1, {}]", k, t.similarity.cols()));
  }
  std::size_t hits = 0;
  for (std::size_t q = 0; q < t.truth.size(); ++q) hits += truth_rank(t, q) < k ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(t.truth.size());
}

double rsum(const RankingTable& t) {
  t.validate();
  if (t.similarity.cols() < 10) {
    throw ContractError(fmt::format("rsum needs at least 10 candidates, got {}", t.similarity.cols()));
  }
  return recall_at_k(t, 1) + recall_at_k(t, 5) + recall_at_k(t, 10);
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw ContractError(fmt::format("accuracy: {} predictions for {} labels", predicted.size(), truth.size()));
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double vqa_soft_score(const QAResult& r) {
  require_ground_truth(r);
  auto matches = std::count(r.ground_truths.begin(), r.ground_truths.end(), r.predicted);
  return std::min(static_cast<double>(matches) / 3.0, 1.0);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  // two-row DP
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double anls(const QAResult& r, double threshold) {
  require_ground_truth(r);
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ContractError(fmt::format("anls threshold {} outside [0, 1]", threshold));
  }
  const std::string pred = normalize_answer(r.predicted);
  double best = 0.0;
  for (const auto& g : r.ground_truths) {
    const std::string truth = normalize_answer(g);
    std::size_t longest = std::max(pred.size(), truth.size());
    double nl = longest == 0 ? 0.0
                             : static_cast<double>(levenshtein(pred, truth)) / static_cast<double>(longest);
    double s = nl < threshold ? 1.0 - nl : 0.0;
    best = std::max(best, s);
  }
  return best;
}

}  // namespace alignbench
