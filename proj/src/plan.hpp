#pragma once

// Prep-plan artifact: the serializable prediction output (per-table step
// lists plus join relationships), JSON round-tripping, plan application to
// a project directory, and exact-match evaluation against ground truth.

#include "solver.hpp"

#include <string>
#include <utility>
#include <vector>

namespace autoprep {

struct PlanTable {
  std::string name;
  std::vector<TransformStep> steps; // ordered, NoOps elided
};

struct PlanJoin {
  std::string left_table;
  std::string left_column;
  std::string right_table;
  std::string right_column;
  double score = 0.0;
};

struct PlanMetadata {
  std::string project;
  std::string mode; // "optimistic" | "precise"
  int depth = 2;    // uniform step-sequence length the solver searched
  double objective_cost = 0.0;        // -ln probability over the chosen edges
  double objective_probability = 0.0; // exp(-objective_cost)
  int iterations = 0;                 // precise-mode loops run, 0 otherwise
  double elapsed_ms = 0.0;
  std::string oracle; // optional gap report from the brute-force oracle
};

struct PrepPlan {
  int format_version = 1;
  std::vector<PlanTable> tables;
  std::vector<PlanJoin> joins;
  PlanMetadata metadata;
};

bool operator==(const PlanTable &a, const PlanTable &b);
bool operator==(const PlanJoin &a, const PlanJoin &b);
bool operator==(const PlanMetadata &a, const PlanMetadata &b);
bool operator==(const PrepPlan &a, const PrepPlan &b);

// Translate a solved graph into the plan artifact. Table entries follow the
// tree order (one per project table); placeholder joins keep empty column
// names.
PrepPlan plan_from_solution(const SearchGraph &graph, const Solution &solution,
                            PlanMetadata metadata);

// JSON text with stable (alphabetical) key order and a trailing newline.
std::string serialize_plan(const PrepPlan &plan);

// Parse and validate plan JSON; schema violations throw
// Error(bad_input_file) naming the offending key.
PrepPlan parse_plan(const std::string &json_text, const std::string &origin = "plan");

PrepPlan load_plan_file(const std::string &path);
void write_plan_file(const PrepPlan &plan, const std::string &path);

// Apply one table's steps in order; failures throw Error(apply_failed)
// naming the table and the 1-based step index.
Table apply_table_steps(const Table &table, const std::vector<TransformStep> &steps);

// Apply a plan to a project: writes one CSV per project table into out_dir
// plus a "relationships.json" sidecar echoing the join list. When
// source_dir is given, tables without steps are copied from it
// byte-for-byte instead of being re-serialized.
void apply_plan(const ProjectContext &ctx, const PrepPlan &plan, const std::string &out_dir,
                const std::string &source_dir = "");

struct EvalCounts {
  long long correct = 0;
  long long predicted = 0;
  long long truth = 0;
};

struct EvalMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ProjectEval {
  std::string project;
  EvalCounts transforms;
  EvalCounts joins;
};

struct EvalReport {
  EvalCounts transforms;
  EvalCounts joins;
  EvalMetrics transform_metrics;
  EvalMetrics join_metrics;
  std::vector<ProjectEval> projects;
};

// Precision = correct/predicted, recall = correct/truth; an empty
// denominator scores 1 when the other side is empty too (nothing to find,
// nothing claimed) and 0 otherwise. F1 = 2PR/(P+R), 0 when P + R = 0.
EvalMetrics compute_metrics(const EvalCounts &counts);

// Exact-match evaluation, micro-averaged across projects. A transform is
// correct iff operator, parameters (output names ignored) and position in
// the NoOp-elided sequence all match; a join is correct iff the unordered
// {(table, column), (table, column)} endpoint set matches. Every predicted
// project id must exist in truth (Error(eval_mismatch) otherwise); truth
// projects without predictions still count toward recall.
EvalReport evaluate_plans(const std::vector<std::pair<std::string, PrepPlan>> &predicted,
                          const std::vector<std::pair<std::string, PrepPlan>> &truth);

// Load a plan set: a .json file yields one entry keyed by its stem, a
// directory yields one entry per contained *.json (sorted by filename).
std::vector<std::pair<std::string, PrepPlan>> load_plan_set(const std::string &path);

// Report rendered as JSON text (stable key order, trailing newline).
std::string serialize_report(const EvalReport &report);

} // namespace autoprep
