#include "alignbench/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace alignbench {
namespace {

constexpr std::uint64_t kBankSalt = 1;
constexpr std::uint64_t kTrainSalt = 2;
constexpr std::uint64_t kTestSalt = 3;
constexpr std::uint64_t kVocabSalt = 4;
constexpr int kMaxBankAttempts = 10000;
constexpr int kMaxDistinctAttempts = 200;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Concept row plus N(0, noise^2) per coordinate.
void write_noisy(std::span<double> out, std::span<const double> base, double noise, Rng64& rng) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = base[i];
    if (noise > 0.0) out[i] += noise * rng.gaussian();
  }
}

// k distinct indices from [0, n), in random order, skipping `exclude`.
std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k, Rng64& rng,
                                         std::span<const std::size_t> exclude = {}) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(exclude.begin(), exclude.end(), i) == exclude.end()) pool.push_back(i);
  }
  // partial Fisher-Yates
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

void require_noise(double noise, const char* task) {
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw ConfigError(fmt::format("{}: noise must be a finite value >= 0, got {}", task, noise));
  }
}

// ------------------------------------------------------------- retrieval

RetrievalInstance make_retrieval(const RetrievalConfig& cfg, const ConceptBank& bank,
                                 std::vector<std::size_t> region_concepts, Rng64& rng) {
  RetrievalInstance inst;
  inst.region_concepts = std::move(region_concepts);
  std::vector<std::size_t> tokens = inst.region_concepts;
  shuffle(tokens, rng);
  if (cfg.tokens <= tokens.size()) {
    tokens.resize(cfg.tokens);
  } else {
    while (tokens.size() < cfg.tokens) {
      tokens.push_back(inst.region_concepts[rng.below(inst.region_concepts.size())]);
    }
    shuffle(tokens, rng);
  }
  inst.token_concepts = std::move(tokens);

  inst.regions = RealMatrix(cfg.regions, cfg.input_dim);
  for (std::size_t r = 0; r < cfg.regions; ++r) {
    write_noisy(inst.regions.row(r), bank.concepts.row(inst.region_concepts[r]), cfg.noise, rng);
  }
  inst.tokens = RealMatrix(cfg.tokens, cfg.input_dim);
  for (std::size_t r = 0; r < cfg.tokens; ++r) {
    write_noisy(inst.tokens.row(r), bank.concepts.row(inst.token_concepts[r]), cfg.noise, rng);
  }
  return inst;
}

std::vector<RetrievalInstance> retrieval_split(const RetrievalConfig& cfg, const ConceptBank& bank,
                                               std::size_t count, Rng64 rng) {
  std::vector<RetrievalInstance> out;
  std::set<std::vector<std::size_t>> seen;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::size_t> concepts;
    std::vector<std::size_t> key;
    for (int attempt = 0; attempt < kMaxDistinctAttempts; ++attempt) {
      concepts = sample_distinct(cfg.concepts, cfg.regions, rng);
      key = concepts;
      std::sort(key.begin(), key.end());
      if (!seen.contains(key)) break;
    }
    seen.insert(key);
    out.push_back(make_retrieval(cfg, bank, std::move(concepts), rng));
  }
  return out;
}

// -------------------------------------------------------------- counting

ObjectAttributes random_object(Rng64& rng) {
  ObjectAttributes o;
  for (std::size_t c = 0; c < 3; ++c) {
    o.values[c] = static_cast<std::uint8_t>(rng.below(kAttributeValues[c]));
  }
  return o;
}

AttributeQuery random_query(Rng64& rng) {
  AttributeQuery q;
  std::size_t specified = 1 + rng.below(3);
  for (std::size_t c : sample_distinct(3, specified, rng)) {
    q.values[c] = static_cast<std::uint8_t>(rng.below(kAttributeValues[c]));
  }
  return q;
}

CountingInstance make_counting(const CountingConfig& cfg, std::size_t max_count, Rng64& rng) {
  CountingInstance inst;
  inst.query_spec = random_query(rng);
  std::size_t k = cfg.min_queried + rng.below(max_count - cfg.min_queried + 1);

  for (std::size_t i = 0; i < k; ++i) {
    ObjectAttributes o = random_object(rng);
    for (std::size_t c = 0; c < 3; ++c) {
      if (inst.query_spec.values[c]) o.values[c] = *inst.query_spec.values[c];
    }
    inst.attributes.push_back(o);
  }
  // Every specified category has at least two values, so rejection ends.
  while (inst.attributes.size() < cfg.objects) {
    ObjectAttributes o = random_object(rng);
    if (!inst.query_spec.matches(o)) inst.attributes.push_back(o);
  }
  shuffle(inst.attributes, rng);

  inst.objects = RealMatrix(cfg.objects, kAttributeDim);
  for (std::size_t r = 0; r < cfg.objects; ++r) {
    RealMatrix clean = encode_object(inst.attributes[r]);
    write_noisy(inst.objects.row(r), clean.row(0), cfg.noise, rng);
  }
  inst.query = encode_query(inst.query_spec);
  inst.count = count_matches(inst.attributes, inst.query_spec);
  if (inst.count != k) {
    throw Error(fmt::format("gen_counting: planted {} matches but scan found {}", k, inst.count));
  }
  inst.n_queried = inst.count;
  return inst;
}

std::vector<CountingInstance> counting_split(const CountingConfig& cfg, std::size_t count, Rng64 rng) {
  std::size_t max_count = std::min(cfg.max_queried, cfg.objects);
  std::vector<CountingInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(make_counting(cfg, max_count, rng));
  return out;
}

// --------------------------------------------------------------- pointer

std::vector<std::string> make_vocabulary(std::size_t count, Rng64 rng) {
  static constexpr std::string_view kConsonants = "bcdfghjklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  std::set<std::string> used;
  std::vector<std::string> words;
  while (words.size() < count) {
    std::size_t syllables = 2 + rng.below(2);
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
      w += kConsonants[rng.below(kConsonants.size())];
      w += kVowels[rng.below(kVowels.size())];
    }
    if (used.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

PointerInstance make_pointer(const PointerConfig& cfg, const ConceptBank& bank,
                             const std::vector<std::string>& vocab, Rng64& rng) {
  PointerInstance inst;
  const std::size_t total = cfg.question + cfg.objects + cfg.ocr;
  inst.sequence = RealMatrix(total, cfg.input_dim);
  inst.planted_concept = rng.below(cfg.concepts);
  const std::size_t planted[] = {inst.planted_concept};

  std::vector<double> blank(cfg.input_dim, 0.0);
  for (std::size_t r = 0; r < cfg.question; ++r) {
    bool empty_slot = r == 0 && cfg.question >= 2;
    std::span<const double> base =
        empty_slot ? std::span<const double>(blank) : bank.concepts.row(inst.planted_concept);
    write_noisy(inst.sequence.row(r), base, cfg.noise, rng);
    inst.types.push_back(SegmentType::Question);
  }
  for (std::size_t r = 0; r < cfg.objects; ++r) {
    std::size_t c = sample_distinct(cfg.concepts, 1, rng, planted)[0];
    write_noisy(inst.sequence.row(cfg.question + r), bank.concepts.row(c), cfg.noise, rng);
    inst.types.push_back(SegmentType::Object);
  }

  inst.ocr_concepts = sample_distinct(cfg.concepts, cfg.ocr - 1, rng, planted);
  inst.answer_index = rng.below(cfg.ocr);
  inst.ocr_concepts.insert(inst.ocr_concepts.begin() + static_cast<std::ptrdiff_t>(inst.answer_index),
                           inst.planted_concept);
  const std::size_t offset = cfg.question + cfg.objects;
  for (std::size_t r = 0; r < cfg.ocr; ++r) {
    write_noisy(inst.sequence.row(offset + r), bank.concepts.row(inst.ocr_concepts[r]), cfg.noise, rng);
    inst.types.push_back(SegmentType::Ocr);
    inst.ocr_words.push_back(vocab[inst.ocr_concepts[r]]);
  }

  auto scanned = scan_answer(inst);
  if (!scanned || *scanned != inst.answer_index) {
    throw Error("gen_pointer: planted answer does not survive the ground-truth scan");
  }
  return inst;
}

std::vector<PointerInstance> pointer_split(const PointerConfig& cfg, const ConceptBank& bank,
                                           const std::vector<std::string>& vocab, std::size_t count,
                                           Rng64 rng) {
  std::vector<PointerInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(make_pointer(cfg, bank, vocab, rng));
  return out;
}

// --------------------------------------------------------------- CSV

void csv_header(std::ostream& out, std::size_t dim) {
  out << "instance,part,row,tag";
  for (std::size_t i = 0; i < dim; ++i) out << ",f" << i;
  out << '\n';
}

void csv_row(std::ostream& out, std::size_t instance, std::string_view part, std::size_t row,
             std::string_view tag, std::span<const double> values) {
  out << instance << ',' << part << ',' << row << ',' << tag;
  for (double v : values) out << ',' << fmt::format("{:.17g}", v);
  out << '\n';
}

}  // namespace

// ---------------------------------------------------------- ConceptBank

ConceptBank ConceptBank::generate(std::size_t count, std::size_t dim, std::uint64_t seed) {
  if (count == 0 || dim == 0) throw ConfigError("concept bank needs at least one concept and one dimension");
  Rng64 rng(seed);
  ConceptBank bank{RealMatrix(count, dim), seed};
  for (std::size_t r = 0; r < count; ++r) {
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxBankAttempts && !accepted; ++attempt) {
      std::vector<double> v = rng.gaussians(dim);
      double norm = std::sqrt(dot(v, v));
      if (norm == 0.0) continue;
      for (double& x : v) x /= norm;
      accepted = true;
      for (std::size_t p = 0; p < r && accepted; ++p) {
        if (std::abs(dot(v, bank.concepts.row(p))) > kMaxConceptCosine) accepted = false;
      }
      if (accepted) std::copy(v.begin(), v.end(), bank.concepts.row(r).begin());
    }
    if (!accepted) {
      throw ConfigError(fmt::format("cannot place {} concepts in {} dimensions with |cos| <= {}", count,
                                    dim, kMaxConceptCosine));
    }
  }
  return bank;
}

std::size_t ConceptBank::nearest(std::span<const double> feature) const {
  std::size_t best = 0;
  double best_score = dot(feature, concepts.row(0));
  for (std::size_t c = 1; c < concepts.rows(); ++c) {
    double s = dot(feature, concepts.row(c));
    if (s > best_score) {
      best = c;
      best_score = s;
    }
  }
  return best;
}

// ------------------------------------------------------------ retrieval

void RetrievalConfig::validate() const {
  if (concepts == 0 || input_dim == 0 || regions == 0 || tokens == 0) {
    throw ConfigError("retrieval: concepts, input_dim, regions and tokens must be positive");
  }
  if (regions > concepts || tokens > concepts) {
    throw ConfigError(fmt::format("retrieval: N={} and M={} must not exceed C={}", regions, tokens, concepts));
  }
  if (train_pairs == 0 || test_pairs == 0) throw ConfigError("retrieval: splits must be non-empty");
  require_noise(noise, "retrieval");
}

RetrievalData gen_retrieval(const RetrievalConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng64 root(seed);
  RetrievalData data{ConceptBank::generate(cfg.concepts, cfg.input_dim, root.fork(kBankSalt).next()), {}};
  data.split.train = retrieval_split(cfg, data.bank, cfg.train_pairs, root.fork(kTrainSalt));
  data.split.test = retrieval_split(cfg, data.bank, cfg.test_pairs, root.fork(kTestSalt));
  return data;
}

// ------------------------------------------------------------- counting

bool AttributeQuery::matches(const ObjectAttributes& object) const {
  for (std::size_t c = 0; c < 3; ++c) {
    if (values[c] && *values[c] != object.values[c]) return false;
  }
  return true;
}

std::size_t count_matches(std::span<const ObjectAttributes> objects, const AttributeQuery& query) {
  return static_cast<std::size_t>(
      std::count_if(objects.begin(), objects.end(), [&](const ObjectAttributes& o) { return query.matches(o); }));
}

RealMatrix encode_object(const ObjectAttributes& object) {
  RealMatrix m(1, kAttributeDim);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    m(0, offset + object.values[c]) = 1.0;
    offset += kAttributeValues[c];
  }
  return m;
}

RealMatrix encode_query(const AttributeQuery& query) {
  RealMatrix m(1, kAttributeDim);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    if (query.values[c]) m(0, offset + *query.values[c]) = 1.0;
    offset += kAttributeValues[c];
  }
  return m;
}

void CountingConfig::validate() const {
  if (objects == 0) throw ConfigError("counting: N must be at least 1");
  if (min_queried > std::min(max_queried, objects)) {
    throw ConfigError(fmt::format("counting: empty count range [{}, {}] for N={}", min_queried, max_queried, objects));
  }
  if (train == 0 || test == 0) throw ConfigError("counting: splits must be non-empty");
  require_noise(noise, "counting");
}

Split<CountingInstance> gen_counting(const CountingConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng64 root(seed);
  return {counting_split(cfg, cfg.train, root.fork(kTrainSalt)),
          counting_split(cfg, cfg.test, root.fork(kTestSalt))};
}

// -------------------------------------------------------------- pointer

std::size_t PointerInstance::ocr_offset() const { return types.size() - ocr_concepts.size(); }

void PointerConfig::validate() const {
  if (ocr < 2) throw ConfigError(fmt::format("pointer: O must be at least 2, got {}", ocr));
  if (question == 0) throw ConfigError("pointer: M must be at least 1");
  if (input_dim == 0) throw ConfigError("pointer: input_dim must be positive");
  if (concepts < ocr || concepts < 2) {
    throw ConfigError(fmt::format("pointer: need C >= O distinct concepts, got C={} O={}", concepts, ocr));
  }
  if (train == 0 || test == 0) throw ConfigError("pointer: splits must be non-empty");
  require_noise(noise, "pointer");
}

PointerData gen_pointer(const PointerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng64 root(seed);
  PointerData data{ConceptBank::generate(cfg.concepts, cfg.input_dim, root.fork(kBankSalt).next()),
                   make_vocabulary(cfg.concepts, root.fork(kVocabSalt)),
                   {}};
  data.split.train = pointer_split(cfg, data.bank, data.vocabulary, cfg.train, root.fork(kTrainSalt));
  data.split.test = pointer_split(cfg, data.bank, data.vocabulary, cfg.test, root.fork(kTestSalt));
  return data;
}

std::optional<std::size_t> scan_answer(const PointerInstance& inst) {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < inst.ocr_concepts.size(); ++i) {
    if (inst.ocr_concepts[i] != inst.planted_concept) continue;
    if (found) return std::nullopt;
    found = i;
  }
  return found;
}

// ---------------------------------------------------------- serialization

void write_split_csv(std::ostream& out, std::span<const RetrievalInstance> split) {
  csv_header(out, split.empty() ? 0 : split.front().regions.cols());
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& inst = split[i];
    for (std::size_t r = 0; r < inst.regions.rows(); ++r) {
      csv_row(out, i, "region", r, std::to_string(inst.region_concepts[r]), inst.regions.row(r));
    }
    for (std::size_t r = 0; r < inst.tokens.rows(); ++r) {
      csv_row(out, i, "token", r, std::to_string(inst.token_concepts[r]), inst.tokens.row(r));
    }
  }
}

void write_split_csv(std::ostream& out, std::span<const CountingInstance> split) {
  csv_header(out, kAttributeDim);
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& inst = split[i];
    csv_row(out, i, "query", 0, std::to_string(inst.count), inst.query.row(0));
    for (std::size_t r = 0; r < inst.objects.rows(); ++r) {
      const auto& a = inst.attributes[r].values;
      csv_row(out, i, "object", r, fmt::format("{}{}{}", a[0], a[1], a[2]), inst.objects.row(r));
    }
  }
}

void write_split_csv(std::ostream& out, std::span<const PointerInstance> split) {
  static constexpr std::string_view kTypeNames[] = {"question", "object", "ocr"};
  csv_header(out, split.empty() ? 0 : split.front().sequence.cols());
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& inst = split[i];
    for (std::size_t r = 0; r < inst.sequence.rows(); ++r) {
      std::string_view tag = kTypeNames[static_cast<std::size_t>(inst.types[r])];
      std::string part = r == inst.ocr_offset() + inst.answer_index ? "answer" : "row";
      csv_row(out, i, part, r, tag, inst.sequence.row(r));
    }
  }
}

}  // namespace alignbench
