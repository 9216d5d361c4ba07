#ifndef ALIGNBENCH_H
#define ALIGNBENCH_H

/* C interface to the alignment benchmark. Every function returns an
 * ab_status; on failure ab_last_error() describes the problem for the
 * calling thread. Handles are opaque and owned by the caller until freed. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AB_API __declspec(dllexport)
#elif defined(__GNUC__)
#define AB_API __attribute__((visibility("default")))
#else
#define AB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ab_status {
  AB_OK = 0,
  AB_ERR_CONFIG = 1,      /* invalid configuration or argument value */
  AB_ERR_IO = 2,          /* file could not be read or written */
  AB_ERR_DIMENSION = 3,   /* matrix shapes do not agree */
  AB_ERR_CONTRACT = 4,    /* precondition violated */
  AB_ERR_UNSUPPORTED = 5, /* combination not supported */
  AB_ERR_INTERNAL = 6,    /* anything else */
  AB_ERR_NULL = 7         /* required pointer argument was NULL */
} ab_status;

typedef struct ab_config ab_config;
typedef struct ab_results ab_results;

/* Message for the last failing call on this thread; "" if none. The
 * pointer stays valid until the next call on the same thread. */
AB_API const char* ab_last_error(void);
AB_API const char* ab_status_name(ab_status status);
AB_API const char* ab_version(void);

/* Configuration. */
AB_API ab_status ab_config_load(const char* path, ab_config** out);
AB_API ab_status ab_config_from_json(const char* json, ab_config** out);
/* Replaces the CSV output path; NULL or "" clears it. */
AB_API ab_status ab_config_set_output(ab_config* cfg, const char* path);
/* Copies the output path into buf (NUL-terminated, truncated to size).
 * *needed receives the full length without the terminator. */
AB_API ab_status ab_config_output(const ab_config* cfg, char* buf, size_t size, size_t* needed);
/* Number of (alignment, seed) cells. */
AB_API ab_status ab_config_cells(const ab_config* cfg, size_t* out);
AB_API void ab_config_free(ab_config* cfg);

/* Runs every cell on `workers` threads. Failed cells are reported in the
 * results, not as an error status. */
AB_API ab_status ab_grid_run(const ab_config* cfg, size_t workers, ab_results** out);
AB_API ab_status ab_results_count(const ab_results* res, size_t* out);
AB_API ab_status ab_results_failed(const ab_results* res, size_t* out);
/* Writes the CSV table to a file path. */
AB_API ab_status ab_results_write_csv(const ab_results* res, const char* path);
/* Renders the CSV or the ranked text report into a caller buffer, same
 * truncation rules as ab_config_output. */
AB_API ab_status ab_results_csv(const ab_results* res, char* buf, size_t size, size_t* needed);
AB_API ab_status ab_results_report(const ab_results* res, char* buf, size_t size, size_t* needed);
AB_API void ab_results_free(ab_results* res);

/* Built-in property suite. `callback`, if given, is invoked after each
 * check with its name, pass flag and detail text. */
typedef void (*ab_check_callback)(const char* name, int passed, const char* detail, double seconds,
                                  void* user);
AB_API ab_status ab_check_run(ab_check_callback callback, void* user, size_t* failed);

/* Score matrix of one alignment function over row-major inputs.
 * queries is nq x d, keys is nk x d, weight d x d (may be NULL when the
 * kind has none), bias 1 x d (may be NULL), out nq x nk. */
AB_API ab_status ab_alignment_score(const char* alignment, size_t d, const double* queries, size_t nq,
                                    const double* keys, size_t nk, const double* weight, const double* bias,
                                    double* out);

#ifdef __cplusplus
}
#endif

#endif /* ALIGNBENCH_H */
