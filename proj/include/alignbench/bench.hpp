#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alignbench/tasks.hpp"

namespace alignbench {

enum class TaskKind { Retrieval, Counting, Pointer };

std::string_view task_name(TaskKind task);
std::optional<TaskKind> parse_task(std::string_view name);

inline constexpr std::size_t kDefaultRetrievalEpochs = 60;
inline constexpr std::size_t kDefaultCountingEpochs = 300;
inline constexpr std::size_t kDefaultPointerEpochs = 30;

struct RetrievalModelDims {
  std::size_t model_dim = 32;
  friend bool operator==(const RetrievalModelDims&, const RetrievalModelDims&) = default;
};

struct PointerModelDims {
  std::size_t model_dim = 16;
  std::size_t heads = 4;
  std::size_t ffn_dim = 32;
  friend bool operator==(const PointerModelDims&, const PointerModelDims&) = default;
};

// One grid: every (alignment, seed) pair of one task. Defaults for the
// task generators and model sizes live in their structs; epochs default per
// task when absent from the file.
struct GridConfig {
  TaskKind task = TaskKind::Retrieval;
  std::vector<std::string> alignments;
  std::vector<std::uint64_t> seeds;
  std::size_t epochs = kDefaultRetrievalEpochs;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  RetrievalConfig retrieval;
  RetrievalModelDims retrieval_model;
  CountingConfig counting;
  PointerConfig pointer;
  PointerModelDims pointer_model;
  std::string output;  // CSV path; empty means not set

  // Throws ConfigError naming the offending field or value.
  void validate() const;
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

std::size_t default_epochs(TaskKind task);

// Missing or unreadable file -> IoError; anything wrong with the content
// -> ConfigError.
GridConfig parse_config(const std::string& path);
GridConfig parse_config_text(std::string_view json_text);
// Full JSON with every default written out.
std::string config_to_json(const GridConfig& cfg);

struct Metric {
  std::string name;
  double value = 0.0;
  friend bool operator==(const Metric&, const Metric&) = default;
};

struct RunRecord {
  TaskKind task = TaskKind::Retrieval;
  std::string alignment;
  std::string variant;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double wall_seconds = 0.0;  // kept out of the CSV
  bool failed = false;
  std::string failure;
  std::vector<Metric> metrics;
};

// Trains and evaluates one cell. Never throws for a training problem: a
// non-finite loss, non-finite metric or library error yields failed = true.
RunRecord run_single(const GridConfig& cfg, const std::string& alignment, std::uint64_t seed);

// Runs every cell on a pool of `workers` threads. Output is sorted by
// (task, alignment, seed) regardless of scheduling.
std::vector<RunRecord> run_grid(const GridConfig& cfg, std::size_t workers);

// CSV header: task,alignment,variant,seed,status,metric,value. One row per
// metric; a failed cell is one row with empty metric and value. Values are
// printed with 17 significant digits.
void write_csv(std::ostream& out, std::span<const RunRecord> records);

struct ReportRow {
  std::string alignment;
  std::string variant;
  std::size_t seeds = 0;  // successful seeds
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t rank = 0;  // 1 = best; 0 when every seed failed
};

struct MetricTable {
  std::string metric;
  std::vector<ReportRow> rows;  // sorted by alignment name
};

// Higher is better for every metric. Ranks order alignments by median,
// ties broken by alignment name.
std::vector<MetricTable> summarize(std::span<const RunRecord> records);

struct SeedGap {
  std::uint64_t seed = 0;
  double first = 0.0;
  double second = 0.0;
  double gap = 0.0;  // first - second
};

// Per-seed difference of `metric` between two alignments over the seeds
// where both succeeded.
std::vector<SeedGap> seed_gaps(std::span<const RunRecord> records, std::string_view metric,
                               std::string_view first, std::string_view second);

// Metric the gap section compares for a task.
std::string_view headline_metric(TaskKind task);

double median(std::vector<double> values);

// Ranked plain-text tables plus the scaled_dot minus biased_general_star
// per-seed gap section when both alignments are present.
void write_report(std::ostream& out, std::span<const RunRecord> records);

}  // namespace alignbench
