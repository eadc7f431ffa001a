// autoprep command-line tool. Talks to the library strictly through the
// public C API; exit codes are the ap_status values.

#include "autoprep.h"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

namespace {

struct ConfigHandle {
  ap_config *ptr = nullptr;
  ~ConfigHandle() { ap_config_free(ptr); }
};

struct ProjectHandle {
  ap_project *ptr = nullptr;
  ~ProjectHandle() { ap_project_free(ptr); }
};

struct PlanHandle {
  ap_plan *ptr = nullptr;
  ~PlanHandle() { ap_plan_free(ptr); }
};

struct GraphHandle {
  ap_graph *ptr = nullptr;
  ~GraphHandle() { ap_graph_free(ptr); }
};

struct StringHandle {
  char *ptr = nullptr;
  ~StringHandle() { ap_string_free(ptr); }
};

int report_failure(ap_status status) {
  std::cerr << "error: " << ap_last_error() << "\n";
  return static_cast<int>(status);
}

int load_config(const std::string &config_path, ConfigHandle &config) {
  ap_status status = config_path.empty() ? ap_config_default(&config.ptr)
                                         : ap_config_load(config_path.c_str(), &config.ptr);
  return status == AP_OK ? 0 : report_failure(status);
}

int write_text(const std::string &text, const std::string &out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream out(out_path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return static_cast<int>(AP_BAD_INPUT_FILE);
  }
  return 0;
}

int run_predict(const std::string &project_dir, const std::string &config_path,
                const std::string &mode, int depth, int max_iter, bool oracle,
                const std::string &out_path) {
  ConfigHandle config;
  if (int rc = load_config(config_path, config)) return rc;
  ProjectHandle project;
  if (ap_status s = ap_project_open(project_dir.c_str(), &project.ptr); s != AP_OK)
    return report_failure(s);
  PlanHandle plan;
  if (ap_status s = ap_predict(project.ptr, config.ptr, mode.c_str(), depth, max_iter,
                               oracle ? 1 : 0, &plan.ptr);
      s != AP_OK)
    return report_failure(s);
  StringHandle json;
  if (ap_status s = ap_plan_serialize(plan.ptr, &json.ptr); s != AP_OK) return report_failure(s);
  return write_text(json.ptr, out_path);
}

int run_apply(const std::string &project_dir, const std::string &plan_path,
              const std::string &out_dir, const std::string &config_path) {
  (void)config_path; // apply needs no scorer
  ProjectHandle project;
  if (ap_status s = ap_project_open(project_dir.c_str(), &project.ptr); s != AP_OK)
    return report_failure(s);
  PlanHandle plan;
  if (ap_status s = ap_plan_load(plan_path.c_str(), &plan.ptr); s != AP_OK)
    return report_failure(s);
  if (ap_status s = ap_apply(project.ptr, plan.ptr, out_dir.c_str(), nullptr); s != AP_OK)
    return report_failure(s);
  return 0;
}

int run_eval(const std::string &predicted_path, const std::string &truth_path,
             const std::string &out_path) {
  StringHandle report;
  if (ap_status s = ap_eval(predicted_path.c_str(), truth_path.c_str(), &report.ptr); s != AP_OK)
    return report_failure(s);
  return write_text(report.ptr, out_path);
}

int run_debug_graph(const std::string &project_dir, const std::string &config_path, int depth,
                    const std::string &out_path) {
  ConfigHandle config;
  if (int rc = load_config(config_path, config)) return rc;
  ProjectHandle project;
  if (ap_status s = ap_project_open(project_dir.c_str(), &project.ptr); s != AP_OK)
    return report_failure(s);
  GraphHandle graph;
  if (ap_status s = ap_graph_build(project.ptr, config.ptr, depth, &graph.ptr); s != AP_OK)
    return report_failure(s);
  StringHandle text;
  if (ap_status s = ap_graph_export(graph.ptr, &text.ptr); s != AP_OK) return report_failure(s);
  return write_text(text.ptr, out_path);
}

int run_debug_solve(const std::string &graph_path, const std::string &mode, int max_iter,
                    const std::string &out_path) {
  std::ifstream in(graph_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << graph_path << "\n";
    return static_cast<int>(AP_BAD_INPUT_FILE);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  GraphHandle graph;
  if (ap_status s = ap_graph_import(text.c_str(), &graph.ptr); s != AP_OK)
    return report_failure(s);
  StringHandle report;
  if (ap_status s = ap_solve_graph_text(graph.ptr, mode.c_str(), max_iter, &report.ptr);
      s != AP_OK)
    return report_failure(s);
  return write_text(report.ptr, out_path);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"autoprep: predict, apply and evaluate table-preparation plans"};
  app.require_subcommand(1);

  std::string project_dir, config_path, out_path, plan_path, out_dir;
  std::string predicted_path, truth_path, graph_path;
  std::string mode = "optimistic";
  std::string solve_mode = "optimistic";
  int depth = 2;
  int max_iter = 0;
  long long seed = 0;
  bool oracle = false;

  CLI::App *predict = app.add_subcommand("predict", "Predict a prep plan for a project directory");
  predict->add_option("project_dir", project_dir, "Directory of CSV tables")->required();
  predict->add_option("--mode", mode, "Solver mode")
      ->check(CLI::IsMember({"optimistic", "precise"}))
      ->capture_default_str();
  predict->add_option("--depth", depth, "Transformation steps per table")->capture_default_str();
  predict->add_option("--config", config_path, "Scorer configuration file");
  predict->add_option("--seed", seed, "Reserved; the solver is deterministic");
  predict->add_option("--max-iter", max_iter, "Precise-mode iteration cap (0 = config default)");
  predict->add_flag("--oracle", oracle,
                    "Also run the exhaustive oracle when its budget allows and record the gap");
  predict->add_option("--out", out_path, "Write the plan here instead of stdout");

  CLI::App *apply = app.add_subcommand("apply", "Apply a plan to a project directory");
  apply->add_option("project_dir", project_dir, "Directory of CSV tables")->required();
  apply->add_option("plan", plan_path, "Plan JSON file")->required();
  apply->add_option("out_dir", out_dir, "Output directory for transformed CSVs")->required();

  CLI::App *eval = app.add_subcommand("eval", "Evaluate predicted plans against ground truth");
  eval->add_option("predicted", predicted_path, "Predicted plan file or directory")->required();
  eval->add_option("truth", truth_path, "Ground-truth plan file or directory")->required();
  eval->add_option("--out", out_path, "Write the report here instead of stdout");

  CLI::App *debug = app.add_subcommand("debug", "Inspection helpers");
  debug->require_subcommand(1);
  CLI::App *debug_graph = debug->add_subcommand("graph", "Export a project's search graph as text");
  debug_graph->add_option("project_dir", project_dir, "Directory of CSV tables")->required();
  debug_graph->add_option("--depth", depth, "Transformation steps per table")
      ->capture_default_str();
  debug_graph->add_option("--config", config_path, "Scorer configuration file");
  debug_graph->add_option("--out", out_path, "Write the graph here instead of stdout");

  CLI::App *debug_solve = debug->add_subcommand("solve", "Solve a text-format search graph");
  debug_solve->add_option("graph", graph_path, "Graph text file")->required();
  debug_solve->add_option("--mode", solve_mode, "baseline, optimistic, precise or oracle")
      ->check(CLI::IsMember({"baseline", "optimistic", "precise", "oracle"}))
      ->capture_default_str();
  debug_solve->add_option("--max-iter", max_iter, "Precise-mode iteration cap (0 = config default)");
  debug_solve->add_option("--out", out_path, "Write the report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (predict->parsed()) return run_predict(project_dir, config_path, mode, depth, max_iter, oracle, out_path);
  if (apply->parsed()) return run_apply(project_dir, plan_path, out_dir, config_path);
  if (eval->parsed()) return run_eval(predicted_path, truth_path, out_path);
  if (debug->parsed()) {
    if (debug_graph->parsed()) return run_debug_graph(project_dir, config_path, depth, out_path);
    if (debug_solve->parsed()) return run_debug_solve(graph_path, solve_mode, max_iter, out_path);
  }
  return 0;
}
