#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alignbench/matrix.hpp"

namespace alignbench {

inline constexpr double kAnlsThreshold = 0.5;

// Similarity of each query (row) against each candidate (column), with the
// index of the correct candidate per query.
struct RankingTable {
  RealMatrix similarity;
  std::vector<std::size_t> truth;

  void validate() const;
};

// Rank of the ground truth for query q: candidates scoring strictly higher,
// plus equal-scoring candidates at a lower index. Zero is best.
std::size_t truth_rank(const RankingTable& t, std::size_t q);

// Percentage of queries whose ground truth ranks within the top k.
double recall_at_k(const RankingTable& t, std::size_t k);
// R@1 + R@5 + R@10; needs at least 10 candidates.
double rsum(const RankingTable& t);

// Fraction of equal entries; both spans must have the same non-zero length.
double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

struct QAResult {
  std::string predicted;
  std::vector<std::string> ground_truths;
};

// min(exact matches / 3, 1).
double vqa_soft_score(const QAResult& r);

// Unit-cost edit distance over bytes.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Best thresholded normalized Levenshtein similarity over the ground truths,
// after lower-casing and trimming whitespace.
double anls(const QAResult& r, double threshold = kAnlsThreshold);

}  // namespace alignbench
