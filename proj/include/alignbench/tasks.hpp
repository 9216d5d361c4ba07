#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "alignbench/matrix.hpp"
#include "alignbench/rng.hpp"

namespace alignbench {

inline constexpr double kMaxConceptCosine = 0.6;

// Unit-norm prototype vectors shared by both modalities. Rows are drawn
// Gaussian and normalized; a row whose absolute cosine with an earlier row
// exceeds kMaxConceptCosine is redrawn.
struct ConceptBank {
  RealMatrix concepts;  // C x d_in
  std::uint64_t seed = 0;

  static ConceptBank generate(std::size_t count, std::size_t dim, std::uint64_t seed);
  std::size_t size() const { return concepts.rows(); }
  // Index of the concept with the largest dot product (lowest index on ties).
  std::size_t nearest(std::span<const double> feature) const;
};

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> test;
};

// ---------------------------------------------------------------- retrieval

struct RetrievalConfig {
  std::size_t concepts = 16;
  std::size_t input_dim = 32;
  std::size_t regions = 6;  // N, image side
  std::size_t tokens = 6;   // M, caption side
  double noise = 0.05;
  std::size_t train_pairs = 256;
  std::size_t test_pairs = 100;  // pool size for R@K

  void validate() const;
  friend bool operator==(const RetrievalConfig&, const RetrievalConfig&) = default;
};

// One matched image/caption pair. Regions carry N distinct concepts; the
// caption carries the same concepts in shuffled order (a subset when M < N,
// with repeats drawn from the image when M > N). Every row is its concept
// plus N(0, noise^2) per coordinate.
struct RetrievalInstance {
  RealMatrix regions;  // N x d_in
  RealMatrix tokens;   // M x d_in
  std::vector<std::size_t> region_concepts;
  std::vector<std::size_t> token_concepts;
};

struct RetrievalData {
  ConceptBank bank;
  Split<RetrievalInstance> split;
};

// Pairs within a split get distinct region concept sets whenever the bank
// is large enough to allow it.
RetrievalData gen_retrieval(const RetrievalConfig& cfg, std::uint64_t seed);

// ----------------------------------------------------------------- counting

// CLEVR-like attribute space: 3 colors, 3 shapes, 2 sizes, one-hot blocks.
inline constexpr std::array<std::size_t, 3> kAttributeValues = {3, 3, 2};
inline constexpr std::size_t kAttributeDim = 8;

struct ObjectAttributes {
  std::array<std::uint8_t, 3> values{};  // color, shape, size
  friend bool operator==(const ObjectAttributes&, const ObjectAttributes&) = default;
};

// Conjunction over a non-empty subset of the attribute categories.
struct AttributeQuery {
  std::array<std::optional<std::uint8_t>, 3> values{};
  bool matches(const ObjectAttributes& object) const;
  friend bool operator==(const AttributeQuery&, const AttributeQuery&) = default;
};

struct CountingConfig {
  std::size_t objects = 6;  // N
  double noise = 0.05;
  // Inclusive range of planted counts; max_queried is clamped to N.
  std::size_t min_queried = 0;
  std::size_t max_queried = 6;
  std::size_t train = 2048;
  std::size_t test = 512;

  void validate() const;
  friend bool operator==(const CountingConfig&, const CountingConfig&) = default;
};

struct CountingInstance {
  RealMatrix objects;  // N x 8, one-hot blocks plus noise
  RealMatrix query;    // 1 x 8, multi-hot of the specified attribute values
  std::vector<ObjectAttributes> attributes;
  AttributeQuery query_spec;
  std::size_t count = 0;
  // Number of distinct objects the query resolves to (equals count); the
  // breakdown splits on n_queried <= 1 versus >= 2.
  std::size_t n_queried = 0;
};

std::size_t count_matches(std::span<const ObjectAttributes> objects, const AttributeQuery& query);
RealMatrix encode_object(const ObjectAttributes& object);
RealMatrix encode_query(const AttributeQuery& query);

Split<CountingInstance> gen_counting(const CountingConfig& cfg, std::uint64_t seed);

// ------------------------------------------------------------------ pointer

enum class SegmentType : std::uint8_t { Question = 0, Object = 1, Ocr = 2 };

struct PointerConfig {
  std::size_t question = 3;  // M
  std::size_t objects = 4;   // N
  std::size_t ocr = 5;       // O
  std::size_t input_dim = 32;
  std::size_t concepts = 16;
  double noise = 0.05;
  std::size_t train = 1024;
  std::size_t test = 256;

  void validate() const;
  friend bool operator==(const PointerConfig&, const PointerConfig&) = default;
};

// Joint sequence [question; objects; ocr]. The question plants one concept:
// question row 0 is an empty slot (noise only) when M >= 2 and every other
// question row is the planted concept. Exactly one OCR row carries the
// planted concept; the other OCR rows and all object rows carry distinct
// other concepts. Each OCR row is labelled with its concept's word.
struct PointerInstance {
  RealMatrix sequence;  // (M + N + O) x d_in
  std::vector<SegmentType> types;
  std::size_t answer_index = 0;  // into the OCR segment
  std::size_t planted_concept = 0;
  std::vector<std::size_t> ocr_concepts;
  std::vector<std::string> ocr_words;

  std::size_t ocr_offset() const;
  std::size_t ocr_count() const { return ocr_concepts.size(); }
};

struct PointerData {
  ConceptBank bank;
  std::vector<std::string> vocabulary;  // one word per concept
  Split<PointerInstance> split;
};

PointerData gen_pointer(const PointerConfig& cfg, std::uint64_t seed);

// Recomputes the answer by scanning OCR concepts for the planted one.
std::optional<std::size_t> scan_answer(const PointerInstance& inst);

// ---------------------------------------------------------- serialization

// CSV with a one-line header "instance,part,row,tag,f0,...,f{d-1}" and one
// line per feature row. tag is the concept id (retrieval), the count for the
// query row and the packed attributes for object rows (counting), or the
// segment type (pointer). Values are printed with 17 significant digits.
void write_split_csv(std::ostream& out, std::span<const RetrievalInstance> split);
void write_split_csv(std::ostream& out, std::span<const CountingInstance> split);
void write_split_csv(std::ostream& out, std::span<const PointerInstance> split);

}  // namespace alignbench
