#include "alignbench/alignbench.h"

#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "alignbench/alignment.hpp"
#include "alignbench/bench.hpp"
#include "alignbench/check.hpp"

struct ab_config {
  alignbench::GridConfig cfg;
};

struct ab_results {
  std::vector<alignbench::RunRecord> records;
};

namespace {

thread_local std::string last_error;

ab_status fail(ab_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

// Runs f, translating exceptions into status codes.
template <typename F>
ab_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return AB_OK;
  } catch (const alignbench::ConfigError& e) {
    return fail(AB_ERR_CONFIG, e.what());
  } catch (const alignbench::IoError& e) {
    return fail(AB_ERR_IO, e.what());
  } catch (const alignbench::DimensionError& e) {
    return fail(AB_ERR_DIMENSION, e.what());
  } catch (const alignbench::ContractError& e) {
    return fail(AB_ERR_CONTRACT, e.what());
  } catch (const alignbench::UnsupportedError& e) {
    return fail(AB_ERR_UNSUPPORTED, e.what());
  } catch (const std::bad_alloc&) {
    return fail(AB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(AB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(AB_ERR_INTERNAL, "unknown error");
  }
}

ab_status copy_out(const std::string& text, char* buf, std::size_t size, std::size_t* needed) {
  if (needed) *needed = text.size();
  if (buf && size > 0) {
    const std::size_t n = std::min(size - 1, text.size());
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
  }
  return AB_OK;
}

alignbench::RealMatrix view(const double* data, std::size_t rows, std::size_t cols) {
  return alignbench::RealMatrix(rows, cols, std::vector<double>(data, data + rows * cols));
}

}  // namespace

extern "C" {

const char* ab_last_error(void) { return last_error.c_str(); }

const char* ab_status_name(ab_status status) {
  switch (status) {
    case AB_OK:
      return "ok";
    case AB_ERR_CONFIG:
      return "config error";
    case AB_ERR_IO:
      return "I/O error";
    case AB_ERR_DIMENSION:
      return "dimension error";
    case AB_ERR_CONTRACT:
      return "contract error";
    case AB_ERR_UNSUPPORTED:
      return "unsupported";
    case AB_ERR_INTERNAL:
      return "internal error";
    case AB_ERR_NULL:
      return "null argument";
  }
  return "unknown status";
}

const char* ab_version(void) { return "1.0.0"; }

ab_status ab_config_load(const char* path, ab_config** out) {
  if (!path || !out) return fail(AB_ERR_NULL, "ab_config_load: null argument");
  *out = nullptr;
  return guarded([&] { *out = new ab_config{alignbench::parse_config(path)}; });
}

ab_status ab_config_from_json(const char* json, ab_config** out) {
  if (!json || !out) return fail(AB_ERR_NULL, "ab_config_from_json: null argument");
  *out = nullptr;
  return guarded([&] { *out = new ab_config{alignbench::parse_config_text(json)}; });
}

ab_status ab_config_set_output(ab_config* cfg, const char* path) {
  if (!cfg) return fail(AB_ERR_NULL, "ab_config_set_output: null config");
  return guarded([&] { cfg->cfg.output = path ? path : ""; });
}

ab_status ab_config_output(const ab_config* cfg, char* buf, size_t size, size_t* needed) {
  if (!cfg) return fail(AB_ERR_NULL, "ab_config_output: null config");
  return guarded([&] { copy_out(cfg->cfg.output, buf, size, needed); });
}

ab_status ab_config_cells(const ab_config* cfg, size_t* out) {
  if (!cfg || !out) return fail(AB_ERR_NULL, "ab_config_cells: null argument");
  *out = cfg->cfg.alignments.size() * cfg->cfg.seeds.size();
  last_error.clear();
  return AB_OK;
}

void ab_config_free(ab_config* cfg) { delete cfg; }

ab_status ab_grid_run(const ab_config* cfg, size_t workers, ab_results** out) {
  if (!cfg || !out) return fail(AB_ERR_NULL, "ab_grid_run: null argument");
  *out = nullptr;
  if (workers == 0) return fail(AB_ERR_CONFIG, "ab_grid_run: workers must be at least 1");
  return guarded([&] { *out = new ab_results{alignbench::run_grid(cfg->cfg, workers)}; });
}

ab_status ab_results_count(const ab_results* res, size_t* out) {
  if (!res || !out) return fail(AB_ERR_NULL, "ab_results_count: null argument");
  *out = res->records.size();
  last_error.clear();
  return AB_OK;
}

ab_status ab_results_failed(const ab_results* res, size_t* out) {
  if (!res || !out) return fail(AB_ERR_NULL, "ab_results_failed: null argument");
  std::size_t n = 0;
  for (const auto& r : res->records) n += r.failed ? 1 : 0;
  *out = n;
  last_error.clear();
  return AB_OK;
}

ab_status ab_results_write_csv(const ab_results* res, const char* path) {
  if (!res || !path) return fail(AB_ERR_NULL, "ab_results_write_csv: null argument");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw alignbench::IoError(std::string("cannot open '") + path + "' for writing");
    alignbench::write_csv(out, res->records);
    out.flush();
    if (!out) throw alignbench::IoError(std::string("failed writing '") + path + "'");
  });
}

ab_status ab_results_csv(const ab_results* res, char* buf, size_t size, size_t* needed) {
  if (!res) return fail(AB_ERR_NULL, "ab_results_csv: null results");
  return guarded([&] {
    std::ostringstream out;
    alignbench::write_csv(out, res->records);
    copy_out(out.str(), buf, size, needed);
  });
}

ab_status ab_results_report(const ab_results* res, char* buf, size_t size, size_t* needed) {
  if (!res) return fail(AB_ERR_NULL, "ab_results_report: null results");
  return guarded([&] {
    std::ostringstream out;
    alignbench::write_report(out, res->records);
    copy_out(out.str(), buf, size, needed);
  });
}

void ab_results_free(ab_results* res) { delete res; }

ab_status ab_check_run(ab_check_callback callback, void* user, size_t* failed) {
  return guarded([&] {
    std::size_t bad = 0;
    alignbench::run_checks([&](const alignbench::CheckResult& r) {
      bad += r.passed ? 0 : 1;
      if (callback) callback(r.name.c_str(), r.passed ? 1 : 0, r.detail.c_str(), r.seconds, user);
    });
    if (failed) *failed = bad;
  });
}

ab_status ab_alignment_score(const char* alignment, size_t d, const double* queries, size_t nq,
                             const double* keys, size_t nk, const double* weight, const double* bias,
                             double* out) {
  if (!alignment || !queries || !keys || !out) return fail(AB_ERR_NULL, "ab_alignment_score: null argument");
  return guarded([&] {
    auto choice = alignbench::parse_alignment_name(alignment);
    if (!choice) throw alignbench::ConfigError(std::string("unknown alignment '") + alignment + "'");
    if (d == 0 || nq == 0 || nk == 0) throw alignbench::DimensionError("ab_alignment_score: empty input");
    alignbench::AlignmentSpec spec;
    spec.kind = choice->kind;
    spec.swap = choice->swap;
    if (alignbench::has_weight(spec.kind)) {
      if (!weight) throw alignbench::ContractError(std::string(alignment) + " needs a weight matrix");
      spec.weight = view(weight, d, d);
    }
    if (alignbench::has_bias(spec.kind)) {
      if (!bias) throw alignbench::ContractError(std::string(alignment) + " needs a bias vector");
      spec.bias = view(bias, 1, d);
    }
    spec.validate(d);
    const alignbench::RealMatrix s = alignbench::score(spec, view(queries, nq, d), view(keys, nk, d));
    std::memcpy(out, s.values().data(), s.size() * sizeof(double));
  });
}

}  // extern "C"
