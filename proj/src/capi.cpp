// C API boundary: opaque handles over the C++ core, status-code mapping,
// and thread-local error text. No exception crosses this file.

#include "autoprep.h"

#include "plan.hpp"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <sstream>

using namespace autoprep;

struct ap_project {
  std::shared_ptr<ProjectContext> ctx;
  std::string directory;
};

struct ap_config {
  ScorerConfig config;
};

struct ap_plan {
  PrepPlan plan;
};

struct ap_graph {
  SearchGraph graph;
  ScorerConfig config;                 // used by precise-mode re-solves
  std::shared_ptr<ProjectContext> ctx; // null for imported text graphs
};

namespace {

thread_local std::string t_last_error = "";

ap_status to_status(Status status) { return static_cast<ap_status>(static_cast<int>(status)); }

template <typename Fn> ap_status guarded(Fn &&fn) {
  try {
    fn();
    return AP_OK;
  } catch (const Error &e) {
    t_last_error = e.what();
    return to_status(e.status());
  } catch (const std::exception &e) {
    t_last_error = e.what();
    return AP_INTERNAL;
  } catch (...) {
    t_last_error = "unknown internal error";
    return AP_INTERNAL;
  }
}

ap_status fail_invalid(const char *message) {
  t_last_error = message;
  return AP_INVALID_ARGUMENT;
}

char *dup_string(const std::string &text) {
  char *out = static_cast<char *>(std::malloc(text.size() + 1));
  if (out != nullptr) std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

double elapsed_ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string format_double(double value) {
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

std::string oracle_note(const SearchGraph &graph, const Solution &solution) {
  try {
    Solution oracle = brute_force_oracle(graph);
    std::ostringstream note;
    note << "oracle cost_raw=" << format_double(oracle.cost_raw)
         << " probability=" << format_double(oracle.probability)
         << " gap=" << format_double(solution.cost_raw - oracle.cost_raw);
    if (oracle.cost_penalized > 0.0)
      note << " penalized_ratio="
           << format_double(solution.cost_penalized / oracle.cost_penalized);
    return note.str();
  } catch (const Error &e) {
    return std::string("oracle skipped: ") + e.what();
  }
}

Solution solve_with_mode(const SearchGraph &graph, const ScorerConfig &config,
                         const ProjectContext *ctx, const std::string &mode, int max_iterations,
                         int *iterations_out) {
  if (iterations_out != nullptr) *iterations_out = 0;
  if (mode == "baseline") return baseline_solution(graph);
  if (mode == "optimistic") return solve_optimistic(graph);
  if (mode == "precise") {
    const int k = max_iterations > 0 ? max_iterations : config.precise_max_iterations;
    return solve_precise(graph, config, ctx, k, nullptr, iterations_out);
  }
  if (mode == "oracle") return brute_force_oracle(graph);
  throw Error(Status::invalid_argument, "unknown mode \"" + mode + "\"");
}

} // namespace

extern "C" {

const char *ap_version(void) { return "1.0.0"; }

const char *ap_last_error(void) { return t_last_error.c_str(); }

void ap_string_free(char *text) { std::free(text); }

/* ---- configuration ---- */

ap_status ap_config_default(ap_config **out_config) {
  if (out_config == nullptr) return fail_invalid("out_config is NULL");
  return guarded([&] { *out_config = new ap_config{ScorerConfig::defaults()}; });
}

ap_status ap_config_load(const char *path, ap_config **out_config) {
  if (out_config == nullptr) return fail_invalid("out_config is NULL");
  if (path == nullptr) return fail_invalid("path is NULL");
  return guarded([&] { *out_config = new ap_config{ScorerConfig::load_file(path)}; });
}

void ap_config_free(ap_config *config) { delete config; }

/* ---- projects ---- */

ap_status ap_project_open(const char *directory, ap_project **out_project) {
  if (out_project == nullptr) return fail_invalid("out_project is NULL");
  if (directory == nullptr) return fail_invalid("directory is NULL");
  return guarded([&] {
    auto ctx = std::make_shared<ProjectContext>(ProjectContext::load_dir(directory));
    *out_project = new ap_project{std::move(ctx), directory};
  });
}

void ap_project_free(ap_project *project) { delete project; }

size_t ap_project_table_count(const ap_project *project) {
  return project == nullptr ? 0 : project->ctx->size();
}

/* ---- prediction ---- */

ap_status ap_predict(const ap_project *project, const ap_config *config, const char *mode,
                     int depth, int max_iterations, int run_oracle, ap_plan **out_plan) {
  if (out_plan == nullptr) return fail_invalid("out_plan is NULL");
  if (project == nullptr) return fail_invalid("project is NULL");
  if (config == nullptr) return fail_invalid("config is NULL");
  if (mode == nullptr) return fail_invalid("mode is NULL");
  const std::string mode_name = mode;
  if (mode_name != "optimistic" && mode_name != "precise")
    return fail_invalid("mode must be \"optimistic\" or \"precise\"");
  if (depth < 1) return fail_invalid("depth must be >= 1");
  return guarded([&] {
    const auto start = std::chrono::steady_clock::now();
    SearchGraph graph = build_search_graph(*project->ctx, depth, config->config);
    int iterations = 0;
    SearchGraph final_graph;
    Solution solution;
    if (mode_name == "precise") {
      const int k =
          max_iterations > 0 ? max_iterations : config->config.precise_max_iterations;
      solution = solve_precise(graph, config->config, project->ctx.get(), k, &final_graph,
                               &iterations);
    } else {
      solution = solve_optimistic(graph);
      final_graph = std::move(graph);
    }
    PlanMetadata metadata;
    metadata.project = project->ctx->name();
    metadata.mode = mode_name;
    metadata.depth = depth;
    metadata.objective_cost = solution.cost_raw;
    metadata.objective_probability = solution.probability;
    metadata.iterations = iterations;
    if (run_oracle != 0) metadata.oracle = oracle_note(final_graph, solution);
    metadata.elapsed_ms = elapsed_ms_since(start);
    *out_plan = new ap_plan{plan_from_solution(final_graph, solution, std::move(metadata))};
  });
}

/* ---- plans ---- */

ap_status ap_plan_parse(const char *json_text, ap_plan **out_plan) {
  if (out_plan == nullptr) return fail_invalid("out_plan is NULL");
  if (json_text == nullptr) return fail_invalid("json_text is NULL");
  return guarded([&] { *out_plan = new ap_plan{parse_plan(json_text)}; });
}

ap_status ap_plan_load(const char *path, ap_plan **out_plan) {
  if (out_plan == nullptr) return fail_invalid("out_plan is NULL");
  if (path == nullptr) return fail_invalid("path is NULL");
  return guarded([&] { *out_plan = new ap_plan{load_plan_file(path)}; });
}

ap_status ap_plan_serialize(const ap_plan *plan, char **out_json) {
  if (out_json == nullptr) return fail_invalid("out_json is NULL");
  if (plan == nullptr) return fail_invalid("plan is NULL");
  return guarded([&] {
    *out_json = dup_string(serialize_plan(plan->plan));
    if (*out_json == nullptr) throw Error(Status::internal, "out of memory");
  });
}

void ap_plan_free(ap_plan *plan) { delete plan; }

ap_status ap_apply(const ap_project *project, const ap_plan *plan, const char *out_dir,
                   const char *source_dir) {
  if (project == nullptr) return fail_invalid("project is NULL");
  if (plan == nullptr) return fail_invalid("plan is NULL");
  if (out_dir == nullptr) return fail_invalid("out_dir is NULL");
  return guarded([&] {
    const std::string sources = source_dir != nullptr ? source_dir : project->directory;
    apply_plan(*project->ctx, plan->plan, out_dir, sources);
  });
}

/* ---- evaluation ---- */

ap_status ap_eval(const char *predicted_path, const char *truth_path, char **out_report_json) {
  if (out_report_json == nullptr) return fail_invalid("out_report_json is NULL");
  if (predicted_path == nullptr) return fail_invalid("predicted_path is NULL");
  if (truth_path == nullptr) return fail_invalid("truth_path is NULL");
  return guarded([&] {
    auto predicted = load_plan_set(predicted_path);
    auto truth = load_plan_set(truth_path);
    EvalReport report = evaluate_plans(predicted, truth);
    *out_report_json = dup_string(serialize_report(report));
    if (*out_report_json == nullptr) throw Error(Status::internal, "out of memory");
  });
}

/* ---- debug surface ---- */

ap_status ap_graph_build(const ap_project *project, const ap_config *config, int depth,
                         ap_graph **out_graph) {
  if (out_graph == nullptr) return fail_invalid("out_graph is NULL");
  if (project == nullptr) return fail_invalid("project is NULL");
  if (config == nullptr) return fail_invalid("config is NULL");
  if (depth < 1) return fail_invalid("depth must be >= 1");
  return guarded([&] {
    SearchGraph graph = build_search_graph(*project->ctx, depth, config->config);
    *out_graph = new ap_graph{std::move(graph), config->config, project->ctx};
  });
}

ap_status ap_graph_import(const char *text, ap_graph **out_graph) {
  if (out_graph == nullptr) return fail_invalid("out_graph is NULL");
  if (text == nullptr) return fail_invalid("text is NULL");
  return guarded([&] {
    *out_graph = new ap_graph{SearchGraph::import_text(text), ScorerConfig::defaults(), nullptr};
  });
}

ap_status ap_graph_export(const ap_graph *graph, char **out_text) {
  if (out_text == nullptr) return fail_invalid("out_text is NULL");
  if (graph == nullptr) return fail_invalid("graph is NULL");
  return guarded([&] {
    std::ostringstream out;
    graph->graph.export_text(out);
    *out_text = dup_string(out.str());
    if (*out_text == nullptr) throw Error(Status::internal, "out of memory");
  });
}

void ap_graph_free(ap_graph *graph) { delete graph; }

ap_status ap_solve_graph_text(const ap_graph *graph, const char *mode, int max_iterations,
                              char **out_report) {
  if (out_report == nullptr) return fail_invalid("out_report is NULL");
  if (graph == nullptr) return fail_invalid("graph is NULL");
  if (mode == nullptr) return fail_invalid("mode is NULL");
  return guarded([&] {
    int iterations = 0;
    Solution solution = solve_with_mode(graph->graph, graph->config, graph->ctx.get(), mode,
                                        max_iterations, &iterations);
    std::ostringstream out;
    out << "mode: " << mode << "\n";
    out << "cost_raw: " << format_double(solution.cost_raw) << "\n";
    out << "cost_penalized: " << format_double(solution.cost_penalized) << "\n";
    out << "probability: " << format_double(solution.probability) << "\n";
    out << "edge_count: " << solution.edge_count() << "\n";
    out << "transform_edges:";
    for (const auto &path : solution.path_edges)
      for (size_t eid : path) out << ' ' << eid;
    out << "\n";
    out << "join_edges:";
    for (size_t eid : solution.join_edges) out << ' ' << eid;
    out << "\n";
    out << "leaves:";
    for (size_t leaf : solution.leaves) out << ' ' << leaf;
    out << "\n";
    if (std::string(mode) == "precise") out << "iterations: " << iterations << "\n";
    *out_report = dup_string(out.str());
    if (*out_report == nullptr) throw Error(Status::internal, "out of memory");
  });
}

} // extern "C"
