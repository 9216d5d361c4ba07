#include "alignbench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include "json.hpp"

#include "alignbench/alignment.hpp"
#include "alignbench/metrics.hpp"
#include "alignbench/models.hpp"

namespace alignbench {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDataSalt = 1;
constexpr std::uint64_t kModelSalt = 2;
constexpr std::uint64_t kOrderSalt = 3;
constexpr std::string_view kGapFirst = "scaled_dot";
constexpr std::string_view kGapSecond = "biased_general_star";

// ------------------------------------------------------------ JSON reading

// Reads the keys of one JSON object, rejecting unknown ones.
class Fields {
 public:
  Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", label()));
  }

  template <typename F>
  void optional(const char* key, F&& read) {
    known_.insert(key);
    auto it = obj_.find(key);
    if (it != obj_.end()) read(*it, path(key));
  }

  void size(const char* key, std::size_t& dst) {
    optional(key, [&](const json& v, const std::string& p) { dst = as_size(v, p); });
  }
  void real(const char* key, double& dst) {
    optional(key, [&](const json& v, const std::string& p) {
      if (!v.is_number()) throw ConfigError(fmt::format("{} must be a number", p));
      dst = v.get<double>();
    });
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!known_.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", path(key), label()));
    }
  }

  std::string path(std::string_view key) const {
    return where_.empty() ? std::string(key) : fmt::format("{}.{}", where_, key);
  }

  static std::size_t as_size(const json& v, const std::string& p) {
    if (!v.is_number_unsigned()) throw ConfigError(fmt::format("{} must be a non-negative integer", p));
    return v.get<std::size_t>();
  }

 private:
  std::string label() const { return where_.empty() ? "config" : fmt::format("'{}'", where_); }

  const json& obj_;
  std::string where_;
  std::set<std::string, std::less<>> known_;
};

void read_retrieval(const json& v, GridConfig& cfg) {
  Fields f(v, "retrieval");
  RetrievalConfig& r = cfg.retrieval;
  f.size("concepts", r.concepts);
  f.size("input_dim", r.input_dim);
  f.size("regions", r.regions);
  f.size("tokens", r.tokens);
  f.real("noise", r.noise);
  f.size("train_pairs", r.train_pairs);
  f.size("test_pairs", r.test_pairs);
  f.size("model_dim", cfg.retrieval_model.model_dim);
  f.finish();
}

void read_counting(const json& v, GridConfig& cfg) {
  Fields f(v, "counting");
  CountingConfig& c = cfg.counting;
  f.size("objects", c.objects);
  f.real("noise", c.noise);
  f.size("min_queried", c.min_queried);
  f.size("max_queried", c.max_queried);
  f.size("train", c.train);
  f.size("test", c.test);
  f.finish();
}

void read_pointer(const json& v, GridConfig& cfg) {
  Fields f(v, "pointer");
  PointerConfig& p = cfg.pointer;
  f.size("question", p.question);
  f.size("objects", p.objects);
  f.size("ocr", p.ocr);
  f.size("input_dim", p.input_dim);
  f.size("concepts", p.concepts);
  f.real("noise", p.noise);
  f.size("train", p.train);
  f.size("test", p.test);
  f.size("model_dim", cfg.pointer_model.model_dim);
  f.size("heads", cfg.pointer_model.heads);
  f.size("ffn_dim", cfg.pointer_model.ffn_dim);
  f.finish();
}

// -------------------------------------------------------------- evaluation

std::vector<Metric> evaluate_retrieval(const GridConfig& cfg, std::uint64_t data_seed, std::uint64_t model_seed,
                                       const TrainOptions& opt, AlignmentChoice choice, bool& diverged) {
  RetrievalData data = gen_retrieval(cfg.retrieval, data_seed);
  RetrievalModel m = RetrievalModel::init(choice, cfg.retrieval.input_dim, cfg.retrieval_model.model_dim, model_seed);
  if (train_retrieval(m, data.split.train, opt).diverged) {
    diverged = true;
    return {};
  }
  // rows are captions, columns are images
  const RealMatrix sims = scan_similarity_matrix(m, data.split.test);
  std::vector<std::size_t> truth(sims.rows());
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = i;
  const RankingTable sentence{transpose(sims), truth};
  const RankingTable image{sims, truth};
  std::vector<Metric> out;
  for (const auto& [prefix, table] : {std::pair{"sentence", &sentence}, std::pair{"image", &image}}) {
    out.push_back({fmt::format("{}_r1", prefix), recall_at_k(*table, 1)});
    out.push_back({fmt::format("{}_r5", prefix), recall_at_k(*table, 5)});
    out.push_back({fmt::format("{}_r10", prefix), recall_at_k(*table, 10)});
    out.push_back({fmt::format("{}_rsum", prefix), rsum(*table)});
  }
  return out;
}

std::vector<Metric> evaluate_counting(const GridConfig& cfg, std::uint64_t data_seed, std::uint64_t model_seed,
                                      const TrainOptions& opt, AlignmentChoice choice, bool& diverged) {
  Split<CountingInstance> split = gen_counting(cfg.counting, data_seed);
  CountingModel m = CountingModel::init(choice, cfg.counting.objects, model_seed);
  if (train_counting(m, split.train, opt).diverged) {
    diverged = true;
    return {};
  }
  CompGraph g;
  const auto nodes = m.bind(g, true);
  std::vector<const CountingInstance*> batch;
  for (const auto& inst : split.test) batch.push_back(&inst);
  const RealMatrix& logits = g.value(counting_logits(g, nodes, batch));

  std::size_t hits[2] = {0, 0};
  std::size_t totals[2] = {0, 0};
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    auto row = logits.row(i);
    auto predicted = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const std::size_t group = split.test[i].n_queried >= 2 ? 1 : 0;
    hits[group] += predicted == split.test[i].count ? 1 : 0;
    ++totals[group];
  }
  auto ratio = [](std::size_t a, std::size_t b) { return static_cast<double>(a) / static_cast<double>(b); };
  std::vector<Metric> out{{"accuracy", ratio(hits[0] + hits[1], totals[0] + totals[1])}};
  if (totals[0] > 0) out.push_back({"accuracy_single", ratio(hits[0], totals[0])});
  if (totals[1] > 0) out.push_back({"accuracy_multi", ratio(hits[1], totals[1])});
  return out;
}

std::vector<Metric> evaluate_pointer(const GridConfig& cfg, std::uint64_t data_seed, std::uint64_t model_seed,
                                     const TrainOptions& opt, AlignmentChoice choice, bool& diverged) {
  PointerData data = gen_pointer(cfg.pointer, data_seed);
  const PointerModelDims& dims = cfg.pointer_model;
  PointerModel m =
      PointerModel::init(choice, cfg.pointer.input_dim, dims.model_dim, dims.heads, dims.ffn_dim, model_seed);
  if (train_pointer(m, data.split.train, opt).diverged) {
    diverged = true;
    return {};
  }
  std::size_t hits = 0;
  double anls_total = 0.0;
  for (const auto& inst : data.split.test) {
    const RealMatrix p = pointer_forward(m, inst);
    auto predicted =
        static_cast<std::size_t>(std::max_element(p.values().begin(), p.values().end()) - p.values().begin());
    hits += predicted == inst.answer_index ? 1 : 0;
    anls_total += anls(QAResult{inst.ocr_words[predicted], {inst.ocr_words[inst.answer_index]}});
  }
  const double n = static_cast<double>(data.split.test.size());
  return {{"accuracy", static_cast<double>(hits) / n}, {"anls", anls_total / n}};
}

bool record_less(const RunRecord& a, const RunRecord& b) {
  if (a.task != b.task) return a.task < b.task;
  if (a.alignment != b.alignment) return a.alignment < b.alignment;
  return a.seed < b.seed;
}

std::string format_value(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

// ------------------------------------------------------------------ config

std::string_view task_name(TaskKind task) {
  switch (task) {
    case TaskKind::Retrieval:
      return "retrieval";
    case TaskKind::Counting:
      return "counting";
    case TaskKind::Pointer:
      return "pointer";
  }
  return "unknown";
}

std::optional<TaskKind> parse_task(std::string_view name) {
  for (TaskKind t : {TaskKind::Retrieval, TaskKind::Counting, TaskKind::Pointer}) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

std::size_t default_epochs(TaskKind task) {
  switch (task) {
    case TaskKind::Retrieval:
      return kDefaultRetrievalEpochs;
    case TaskKind::Counting:
      return kDefaultCountingEpochs;
    case TaskKind::Pointer:
      return kDefaultPointerEpochs;
  }
  return kDefaultRetrievalEpochs;
}

void GridConfig::validate() const {
  if (alignments.empty()) throw ConfigError("alignment list is empty");
  std::set<std::string_view> seen_names;
  for (const auto& name : alignments) {
    auto choice = parse_alignment_name(name);
    if (!choice) throw ConfigError(fmt::format("unknown alignment '{}'", name));
    if (!seen_names.insert(name).second) throw ConfigError(fmt::format("alignment '{}' is listed twice", name));
    if (task == TaskKind::Pointer && choice->kind == AlignmentKind::Cosine) {
      throw ConfigError("alignment 'cosine' is not supported by the pointer task (self attention)");
    }
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  std::set<std::uint64_t> seen_seeds;
  for (auto s : seeds) {
    if (!seen_seeds.insert(s).second) throw ConfigError(fmt::format("seed {} is listed twice", s));
  }
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError(fmt::format("learning_rate must be a positive number, got {}", learning_rate));
  }
  switch (task) {
    case TaskKind::Retrieval:
      retrieval.validate();
      if (retrieval.test_pairs < 10) {
        throw ConfigError(fmt::format("retrieval.test_pairs must be at least 10 for R@10, got {}", retrieval.test_pairs));
      }
      if (retrieval.train_pairs < 2) throw ConfigError("retrieval.train_pairs must be at least 2");
      if (retrieval_model.model_dim == 0) throw ConfigError("retrieval.model_dim must be positive");
      break;
    case TaskKind::Counting:
      counting.validate();
      break;
    case TaskKind::Pointer:
      pointer.validate();
      if (pointer_model.heads == 0 || pointer_model.model_dim == 0 ||
          pointer_model.model_dim % pointer_model.heads != 0) {
        throw ConfigError(fmt::format("pointer.model_dim {} must be a positive multiple of pointer.heads {}",
                                      pointer_model.model_dim, pointer_model.heads));
      }
      if (pointer_model.ffn_dim == 0) throw ConfigError("pointer.ffn_dim must be positive");
      break;
  }
}

GridConfig parse_config_text(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("malformed JSON: {}", e.what()));
  }

  GridConfig cfg;
  Fields top(doc, "");
  bool has_task = false;
  bool has_epochs = false;
  top.optional("task", [&](const json& v, const std::string& p) {
    if (!v.is_string()) throw ConfigError(fmt::format("{} must be a string", p));
    auto t = parse_task(v.get<std::string>());
    if (!t) throw ConfigError(fmt::format("unknown task '{}'", v.get<std::string>()));
    cfg.task = *t;
    has_task = true;
  });
  top.optional("alignments", [&](const json& v, const std::string& p) {
    if (!v.is_array()) throw ConfigError(fmt::format("{} must be an array of names", p));
    for (const auto& item : v) {
      if (!item.is_string()) throw ConfigError(fmt::format("{} entries must be strings", p));
      cfg.alignments.push_back(item.get<std::string>());
    }
  });
  top.optional("seeds", [&](const json& v, const std::string& p) {
    if (!v.is_array()) throw ConfigError(fmt::format("{} must be an array of integers", p));
    for (const auto& item : v) {
      if (!item.is_number_unsigned()) throw ConfigError(fmt::format("{} entries must be non-negative integers", p));
      cfg.seeds.push_back(item.get<std::uint64_t>());
    }
  });
  top.optional("epochs", [&](const json& v, const std::string& p) {
    cfg.epochs = Fields::as_size(v, p);
    has_epochs = true;
  });
  top.size("batch_size", cfg.batch_size);
  top.real("learning_rate", cfg.learning_rate);
  top.optional("output", [&](const json& v, const std::string& p) {
    if (!v.is_string()) throw ConfigError(fmt::format("{} must be a string", p));
    cfg.output = v.get<std::string>();
  });
  top.optional("retrieval", [&](const json& v, const std::string&) { read_retrieval(v, cfg); });
  top.optional("counting", [&](const json& v, const std::string&) { read_counting(v, cfg); });
  top.optional("pointer", [&](const json& v, const std::string&) { read_pointer(v, cfg); });
  top.finish();

  if (!has_task) throw ConfigError("missing required key 'task'");
  if (!doc.contains("alignments")) throw ConfigError("missing required key 'alignments'");
  if (!doc.contains("seeds")) throw ConfigError("missing required key 'seeds'");
  if (!has_epochs) cfg.epochs = default_epochs(cfg.task);
  cfg.validate();
  return cfg;
}

GridConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open config file '{}'", path));
  std::ostringstream text;
  text << in.rdbuf();
  if (in.bad()) throw IoError(fmt::format("cannot read config file '{}'", path));
  return parse_config_text(text.str());
}

std::string config_to_json(const GridConfig& cfg) {
  const RetrievalConfig& r = cfg.retrieval;
  const CountingConfig& c = cfg.counting;
  const PointerConfig& p = cfg.pointer;
  json doc = {
      {"task", std::string(task_name(cfg.task))},
      {"alignments", cfg.alignments},
      {"seeds", cfg.seeds},
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"learning_rate", cfg.learning_rate},
      {"retrieval",
       {{"concepts", r.concepts},
        {"input_dim", r.input_dim},
        {"regions", r.regions},
        {"tokens", r.tokens},
        {"noise", r.noise},
        {"train_pairs", r.train_pairs},
        {"test_pairs", r.test_pairs},
        {"model_dim", cfg.retrieval_model.model_dim}}},
      {"counting",
       {{"objects", c.objects},
        {"noise", c.noise},
        {"min_queried", c.min_queried},
        {"max_queried", c.max_queried},
        {"train", c.train},
        {"test", c.test}}},
      {"pointer",
       {{"question", p.question},
        {"objects", p.objects},
        {"ocr", p.ocr},
        {"input_dim", p.input_dim},
        {"concepts", p.concepts},
        {"noise", p.noise},
        {"train", p.train},
        {"test", p.test},
        {"model_dim", cfg.pointer_model.model_dim},
        {"heads", cfg.pointer_model.heads},
        {"ffn_dim", cfg.pointer_model.ffn_dim}}},
  };
  if (!cfg.output.empty()) doc["output"] = cfg.output;
  return doc.dump(2);
}

// -------------------------------------------------------------------- runs

RunRecord run_single(const GridConfig& cfg, const std::string& alignment, std::uint64_t seed) {
  RunRecord rec;
  rec.task = cfg.task;
  rec.alignment = alignment;
  rec.seed = seed;
  rec.epochs = cfg.epochs;
  const auto start = std::chrono::steady_clock::now();
  auto fail = [&](std::string why) {
    rec.failed = true;
    rec.failure = std::move(why);
    rec.metrics.clear();
  };

  try {
    auto choice = parse_alignment_name(alignment);
    if (!choice) throw ConfigError(fmt::format("unknown alignment '{}'", alignment));
    rec.variant = std::string(variant_name(choice->kind, choice->swap));

    Rng64 root(seed);
    const std::uint64_t data_seed = root.fork(kDataSalt).next();
    const std::uint64_t model_seed = root.fork(kModelSalt).next();
    const TrainOptions opt{cfg.epochs, cfg.batch_size, cfg.learning_rate, root.fork(kOrderSalt).next()};
    bool diverged = false;
    switch (cfg.task) {
      case TaskKind::Retrieval:
        rec.metrics = evaluate_retrieval(cfg, data_seed, model_seed, opt, *choice, diverged);
        break;
      case TaskKind::Counting:
        rec.metrics = evaluate_counting(cfg, data_seed, model_seed, opt, *choice, diverged);
        break;
      case TaskKind::Pointer:
        rec.metrics = evaluate_pointer(cfg, data_seed, model_seed, opt, *choice, diverged);
        break;
    }
    if (diverged) {
      fail("training diverged (non-finite loss or parameters)");
    } else {
      for (const auto& m : rec.metrics) {
        if (!std::isfinite(m.value)) {
          fail(fmt::format("metric {} is not finite", m.name));
          break;
        }
      }
    }
  } catch (const std::exception& e) {
    fail(e.what());
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<RunRecord> run_grid(const GridConfig& cfg, std::size_t workers) {
  if (workers == 0) throw ContractError("run_grid: workers must be at least 1");
  cfg.validate();
  std::vector<std::pair<std::string, std::uint64_t>> cells;
  for (const auto& a : cfg.alignments)
    for (auto s : cfg.seeds) cells.emplace_back(a, s);

  std::vector<RunRecord> records(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      records[i] = run_single(cfg, cells[i].first, cells[i].second);
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t n = std::min(workers, cells.size());
    for (std::size_t w = 1; w < n; ++w) pool.emplace_back(work);
    work();
  }
  std::sort(records.begin(), records.end(), record_less);
  return records;
}

// ------------------------------------------------------------------ output

void write_csv(std::ostream& out, std::span<const RunRecord> records) {
  out << "task,alignment,variant,seed,status,metric,value\n";
  for (const auto& r : records) {
    const std::string prefix = fmt::format("{},{},{},{}", task_name(r.task), r.alignment, r.variant, r.seed);
    if (r.failed) {
      out << prefix << ",failed,,\n";
      continue;
    }
    for (const auto& m : r.metrics) out << prefix << ",ok," << m.name << ',' << format_value(m.value) << '\n';
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<MetricTable> summarize(std::span<const RunRecord> records) {
  std::vector<std::string> metric_names;
  std::map<std::string, std::string> variants;
  for (const auto& r : records) {
    variants.emplace(r.alignment, r.variant);
    for (const auto& m : r.metrics) {
      if (std::find(metric_names.begin(), metric_names.end(), m.name) == metric_names.end()) {
        metric_names.push_back(m.name);
      }
    }
  }

  std::vector<MetricTable> tables;
  for (const auto& name : metric_names) {
    MetricTable t{name, {}};
    for (const auto& [alignment, variant] : variants) {
      std::vector<double> values;
      for (const auto& r : records) {
        if (r.alignment != alignment || r.failed) continue;
        for (const auto& m : r.metrics)
          if (m.name == name) values.push_back(m.value);
      }
      ReportRow row{alignment, variant, values.size()};
      if (!values.empty()) {
        row.median = median(values);
        row.min = *std::min_element(values.begin(), values.end());
        row.max = *std::max_element(values.begin(), values.end());
      }
      t.rows.push_back(row);
    }
    std::vector<ReportRow*> ranked;
    for (auto& row : t.rows)
      if (row.seeds > 0) ranked.push_back(&row);
    std::stable_sort(ranked.begin(), ranked.end(), [](const ReportRow* a, const ReportRow* b) {
      if (a->median != b->median) return a->median > b->median;
      return a->alignment < b->alignment;
    });
    for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i]->rank = i + 1;
    tables.push_back(std::move(t));
  }
  return tables;
}

std::vector<SeedGap> seed_gaps(std::span<const RunRecord> records, std::string_view metric,
                               std::string_view first, std::string_view second) {
  auto value_of = [&](const RunRecord& r) -> std::optional<double> {
    if (r.failed) return std::nullopt;
    for (const auto& m : r.metrics)
      if (m.name == metric) return m.value;
    return std::nullopt;
  };
  std::map<std::uint64_t, std::pair<std::optional<double>, std::optional<double>>> by_seed;
  for (const auto& r : records) {
    if (r.alignment == first) by_seed[r.seed].first = value_of(r);
    if (r.alignment == second) by_seed[r.seed].second = value_of(r);
  }
  std::vector<SeedGap> gaps;
  for (const auto& [seed, pair] : by_seed) {
    if (pair.first && pair.second) gaps.push_back({seed, *pair.first, *pair.second, *pair.first - *pair.second});
  }
  return gaps;
}

std::string_view headline_metric(TaskKind task) {
  switch (task) {
    case TaskKind::Retrieval:
      return "sentence_rsum";
    case TaskKind::Counting:
      return "accuracy_multi";
    case TaskKind::Pointer:
      return "accuracy";
  }
  return "accuracy";
}

void write_report(std::ostream& out, std::span<const RunRecord> records) {
  if (records.empty()) throw ContractError("write_report: no records");
  std::set<std::string> alignments;
  std::set<std::uint64_t> seeds;
  std::size_t failed = 0;
  for (const auto& r : records) {
    alignments.insert(r.alignment);
    seeds.insert(r.seed);
    failed += r.failed ? 1 : 0;
  }
  const TaskKind task = records.front().task;
  out << fmt::format("task {}: {} alignments x {} seeds, {} cells, {} failed\n", task_name(task), alignments.size(),
                     seeds.size(), records.size(), failed);
  for (const auto& r : records) {
    if (r.failed) out << fmt::format("  failed: {} seed {}: {}\n", r.alignment, r.seed, r.failure);
  }

  for (const auto& table : summarize(records)) {
    out << '\n' << table.metric << " (median over seeds; rank 1 = best)\n";
    out << fmt::format("  {:<24}{:<8}{:>6}{:>12}{:>12}{:>12}{:>6}\n", "alignment", "variant", "seeds", "median", "min",
                       "max", "rank");
    for (const auto& row : table.rows) {
      if (row.seeds == 0) {
        out << fmt::format("  {:<24}{:<8}{:>6}{:>12}{:>12}{:>12}{:>6}\n", row.alignment, row.variant, 0, "-", "-", "-",
                           "-");
        continue;
      }
      out << fmt::format("  {:<24}{:<8}{:>6}{:>12.4f}{:>12.4f}{:>12.4f}{:>6}\n", row.alignment, row.variant, row.seeds,
                         row.median, row.min, row.max, row.rank);
    }
  }

  if (alignments.contains(std::string(kGapFirst)) && alignments.contains(std::string(kGapSecond))) {
    const std::string_view metric = headline_metric(task);
    const auto gaps = seed_gaps(records, metric, kGapFirst, kGapSecond);
    out << fmt::format("\nper-seed gap on {}: {} - {}\n", metric, kGapFirst, kGapSecond);
    out << fmt::format("  {:<22}{:>14}{:>22}{:>12}\n", "seed", kGapFirst, kGapSecond, "gap");
    std::vector<double> values;
    for (const auto& g : gaps) {
      out << fmt::format("  {:<22}{:>14.4f}{:>22.4f}{:>+12.4f}\n", g.seed, g.first, g.second, g.gap);
      values.push_back(g.gap);
    }
    if (values.empty()) {
      out << "  no seed where both succeeded\n";
    } else {
      out << fmt::format("  gap median {:+.4f}, min {:+.4f}, max {:+.4f}\n", median(values),
                         *std::min_element(values.begin(), values.end()),
                         *std::max_element(values.begin(), values.end()));
    }
  }
}

}  // namespace alignbench
