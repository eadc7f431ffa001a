/* autoprep — public C API.
 *
 * A library that, given a directory of CSV tables forming one project,
 * predicts the data-preparation steps the tables need: per-table
 * transformation sequences (unpivot, pivot, transpose, split, concatenate,
 * substring) plus the cross-table join relationships, found by solving a
 * most-probable-preparation search problem over a global graph.
 *
 * Conventions:
 *   - Every fallible call returns an ap_status; AP_OK is 0.
 *   - On failure, ap_last_error() returns a thread-local message describing
 *     the most recent error in the calling thread. The pointer stays valid
 *     until the next failing call on that thread.
 *   - Objects are opaque handles freed with their ap_*_free function; every
 *     ap_*_free accepts NULL.
 *   - Strings returned through char** out-parameters are heap-allocated,
 *     NUL-terminated UTF-8 and must be released with ap_string_free().
 */

#ifndef AUTOPREP_H
#define AUTOPREP_H

#include <stddef.h>

#if defined(_WIN32)
#define AP_API __declspec(dllexport)
#else
#define AP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ap_status {
  AP_OK = 0,
  AP_INVALID_ARGUMENT = 1,
  AP_NOT_ENOUGH_TABLES = 2,
  AP_BAD_INPUT_FILE = 3,
  AP_APPLY_FAILED = 4,
  AP_EVAL_MISMATCH = 5,
  AP_BUDGET_EXCEEDED = 6,
  AP_INTERNAL = 10
} ap_status;

typedef struct ap_project ap_project; /* loaded project: the tables of one directory */
typedef struct ap_config ap_config;   /* scorer configuration (weights, caps, overrides) */
typedef struct ap_plan ap_plan;       /* prediction artifact: steps + joins + metadata */
typedef struct ap_graph ap_graph;     /* search graph, for the debug/oracle surface */

/* Library version string, e.g. "1.0.0". */
AP_API const char *ap_version(void);

/* Thread-local message for the last failing call; never NULL. */
AP_API const char *ap_last_error(void);

/* Release a string returned through a char** out-parameter. */
AP_API void ap_string_free(char *text);

/* ---- configuration ---- */

/* Built-in default scorer configuration. */
AP_API ap_status ap_config_default(ap_config **out_config);

/* Load a scorer configuration file (INI-style; see configs/). */
AP_API ap_status ap_config_load(const char *path, ap_config **out_config);

AP_API void ap_config_free(ap_config *config);

/* ---- projects ---- */

/* Load every *.csv in a directory as one project (sorted by filename).
 * Fails with AP_NOT_ENOUGH_TABLES for fewer than two tables and
 * AP_BAD_INPUT_FILE for unreadable or header-only files. */
AP_API ap_status ap_project_open(const char *directory, ap_project **out_project);

AP_API void ap_project_free(ap_project *project);

AP_API size_t ap_project_table_count(const ap_project *project);

/* ---- prediction ---- */

/* Predict a prep plan.
 *   mode            "optimistic" (single solve) or "precise" (iterative
 *                   prune/re-score loop)
 *   depth           transformation steps searched per table (>= 1)
 *   max_iterations  precise-mode loop cap; <= 0 means the config default
 *   run_oracle      when nonzero, also run the exhaustive oracle (if its
 *                   budget allows) and record the optimality gap in the
 *                   plan metadata
 */
AP_API ap_status ap_predict(const ap_project *project, const ap_config *config, const char *mode,
                            int depth, int max_iterations, int run_oracle, ap_plan **out_plan);

/* ---- plans ---- */

AP_API ap_status ap_plan_parse(const char *json_text, ap_plan **out_plan);
AP_API ap_status ap_plan_load(const char *path, ap_plan **out_plan);
AP_API ap_status ap_plan_serialize(const ap_plan *plan, char **out_json);
AP_API void ap_plan_free(ap_plan *plan);

/* Apply a plan to a project: writes one transformed CSV per project table
 * into out_dir plus a relationships.json sidecar echoing the joins.
 * source_dir may be NULL; when given, tables without steps are copied from
 * it byte-for-byte. */
AP_API ap_status ap_apply(const ap_project *project, const ap_plan *plan, const char *out_dir,
                          const char *source_dir);

/* ---- evaluation ---- */

/* Exact-match evaluation of predicted plans against ground truth. Each path
 * is either a single *.json plan or a directory of them; plans pair up by
 * file stem. Produces a JSON report (counts, precision/recall/F1,
 * per-project breakdown). A predicted project with no ground-truth
 * counterpart fails with AP_EVAL_MISMATCH. */
AP_API ap_status ap_eval(const char *predicted_path, const char *truth_path,
                         char **out_report_json);

/* ---- debug surface: search graphs ---- */

/* Build the search graph for a project at the given depth. */
AP_API ap_status ap_graph_build(const ap_project *project, const ap_config *config, int depth,
                                ap_graph **out_graph);

/* Parse a graph from the text debug format (see ap_graph_export). */
AP_API ap_status ap_graph_import(const char *text, ap_graph **out_graph);

/* Render a graph in the line-oriented text debug format. */
AP_API ap_status ap_graph_export(const ap_graph *graph, char **out_text);

AP_API void ap_graph_free(ap_graph *graph);

/* Solve a graph and render a small text report (chosen edges, cost,
 * probability). mode is "baseline", "optimistic", "precise" or "oracle";
 * max_iterations applies to precise mode (<= 0 means default). */
AP_API ap_status ap_solve_graph_text(const ap_graph *graph, const char *mode, int max_iterations,
                                     char **out_report);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* AUTOPREP_H */
