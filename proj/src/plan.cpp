#include "plan.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace autoprep {

namespace {

[[noreturn]] void schema_error(const std::string &origin, const std::string &message) {
  throw Error(Status::bad_input_file, origin + ": " + message);
}

const json &require_key(const json &obj, const char *key, const std::string &where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing key \"") + key + "\"");
  return *it;
}

std::string require_string(const json &obj, const char *key, const std::string &where) {
  const json &value = require_key(obj, key, where);
  if (!value.is_string()) schema_error(where, std::string("key \"") + key + "\" must be a string");
  return value.get<std::string>();
}

int require_int(const json &obj, const char *key, const std::string &where) {
  const json &value = require_key(obj, key, where);
  if (!value.is_number_integer())
    schema_error(where, std::string("key \"") + key + "\" must be an integer");
  return value.get<int>();
}

double require_number(const json &obj, const char *key, const std::string &where) {
  const json &value = require_key(obj, key, where);
  if (!value.is_number()) schema_error(where, std::string("key \"") + key + "\" must be a number");
  return value.get<double>();
}

std::string optional_string(const json &obj, const char *key) {
  auto it = obj.find(key);
  return (it != obj.end() && it->is_string()) ? it->get<std::string>() : std::string();
}

json step_to_json(const TransformStep &step) {
  json params = json::object();
  struct Visitor {
    json &params;
    void operator()(const NoOpParams &) const {}
    void operator()(const UnpivotParams &p) const {
      params["start_column"] = p.start_column;
      params["end_column"] = p.end_column;
    }
    void operator()(const PivotParams &p) const {
      params["pivot_column"] = p.pivot_column;
      params["value_column"] = p.value_column;
    }
    void operator()(const TransposeParams &) const {}
    void operator()(const SplitParams &p) const {
      params["column"] = p.column;
      params["delimiter"] = p.delimiter;
      params["select_pos"] = p.select_pos;
      if (!p.output_column.empty()) params["output_column"] = p.output_column;
    }
    void operator()(const ConcatenateParams &p) const {
      params["columns"] = p.columns;
      params["delimiter"] = p.delimiter;
      if (!p.output_column.empty()) params["output_column"] = p.output_column;
    }
    void operator()(const SubstringParams &p) const {
      params["column"] = p.column;
      params["start"] = p.start;
      params["length"] = p.length;
      if (!p.output_column.empty()) params["output_column"] = p.output_column;
    }
  };
  std::visit(Visitor{params}, step.params);
  return json{{"op", step.op_name()}, {"params", params}};
}

TransformStep step_from_json(const json &j, const std::string &where) {
  if (!j.is_object()) schema_error(where, "step must be an object");
  std::string op = require_string(j, "op", where);
  const json &params = require_key(j, "params", where);
  if (!params.is_object()) schema_error(where, "\"params\" must be an object");

  TransformStep step;
  if (op == "noop") {
    step.params = NoOpParams{};
  } else if (op == "unpivot") {
    step.params = UnpivotParams{require_string(params, "start_column", where),
                                require_string(params, "end_column", where)};
  } else if (op == "pivot") {
    step.params = PivotParams{require_string(params, "pivot_column", where),
                              require_string(params, "value_column", where)};
  } else if (op == "transpose") {
    step.params = TransposeParams{};
  } else if (op == "split") {
    SplitParams p;
    p.column = require_string(params, "column", where);
    p.delimiter = require_string(params, "delimiter", where);
    p.select_pos = require_int(params, "select_pos", where);
    p.output_column = optional_string(params, "output_column");
    step.params = p;
  } else if (op == "concatenate") {
    ConcatenateParams p;
    const json &cols = require_key(params, "columns", where);
    if (!cols.is_array()) schema_error(where, "\"columns\" must be an array");
    for (const json &c : cols) {
      if (!c.is_string()) schema_error(where, "\"columns\" entries must be strings");
      p.columns.push_back(c.get<std::string>());
    }
    p.delimiter = require_string(params, "delimiter", where);
    p.output_column = optional_string(params, "output_column");
    step.params = p;
  } else if (op == "substring") {
    SubstringParams p;
    p.column = require_string(params, "column", where);
    p.start = require_int(params, "start", where);
    p.length = require_int(params, "length", where);
    p.output_column = optional_string(params, "output_column");
    step.params = p;
  } else {
    schema_error(where, "unknown op \"" + op + "\"");
  }
  return step;
}

json join_to_json(const PlanJoin &join) {
  return json{{"left_table", join.left_table},   {"left_column", join.left_column},
              {"right_table", join.right_table}, {"right_column", join.right_column},
              {"score", join.score}};
}

PlanJoin join_from_json(const json &j, const std::string &where) {
  if (!j.is_object()) schema_error(where, "join must be an object");
  PlanJoin join;
  join.left_table = require_string(j, "left_table", where);
  join.left_column = require_string(j, "left_column", where);
  join.right_table = require_string(j, "right_table", where);
  join.right_column = require_string(j, "right_column", where);
  join.score = require_number(j, "score", where);
  return join;
}

// Unordered endpoint set of a join, as a canonical tuple for matching.
std::array<std::string, 4> join_signature(const PlanJoin &join) {
  std::pair<std::string, std::string> left{join.left_table, join.left_column};
  std::pair<std::string, std::string> right{join.right_table, join.right_column};
  if (right < left) std::swap(left, right);
  return {left.first, left.second, right.first, right.second};
}

json counts_to_json(const EvalCounts &counts) {
  return json{{"correct", counts.correct}, {"predicted", counts.predicted}, {"truth", counts.truth}};
}

json metrics_to_json(const EvalMetrics &metrics) {
  return json{{"precision", metrics.precision}, {"recall", metrics.recall}, {"f1", metrics.f1}};
}

} // namespace

bool operator==(const PlanTable &a, const PlanTable &b) {
  if (a.name != b.name || a.steps.size() != b.steps.size()) return false;
  for (size_t i = 0; i < a.steps.size(); ++i)
    if (!(a.steps[i] == b.steps[i])) return false;
  return true;
}

bool operator==(const PlanJoin &a, const PlanJoin &b) {
  return a.left_table == b.left_table && a.left_column == b.left_column &&
         a.right_table == b.right_table && a.right_column == b.right_column && a.score == b.score;
}

bool operator==(const PlanMetadata &a, const PlanMetadata &b) {
  return a.project == b.project && a.mode == b.mode && a.depth == b.depth &&
         a.objective_cost == b.objective_cost &&
         a.objective_probability == b.objective_probability && a.iterations == b.iterations &&
         a.elapsed_ms == b.elapsed_ms && a.oracle == b.oracle;
}

bool operator==(const PrepPlan &a, const PrepPlan &b) {
  return a.format_version == b.format_version && a.tables == b.tables && a.joins == b.joins &&
         a.metadata == b.metadata;
}

PrepPlan plan_from_solution(const SearchGraph &graph, const Solution &solution,
                            PlanMetadata metadata) {
  PrepPlan plan;
  for (size_t t = 0; t < graph.tree_count(); ++t) {
    PlanTable entry;
    entry.name = graph.table_names[t];
    for (size_t eid : solution.path_edges[t]) {
      const TransformStep &step = graph.transform_edges[eid].step;
      if (!step.is_noop()) entry.steps.push_back(step);
    }
    plan.tables.push_back(std::move(entry));
  }
  for (size_t eid : solution.join_edges) {
    const JoinEdge &edge = graph.join_edges[eid];
    PlanJoin join;
    join.left_table = graph.table_names[graph.vertices[edge.a].tree_index];
    join.right_table = graph.table_names[graph.vertices[edge.b].tree_index];
    if (edge.columns) {
      join.left_column = edge.columns->first;
      join.right_column = edge.columns->second;
    }
    join.score = edge.w;
    plan.joins.push_back(std::move(join));
  }
  plan.metadata = std::move(metadata);
  return plan;
}

std::string serialize_plan(const PrepPlan &plan) {
  json tables = json::array();
  for (const PlanTable &table : plan.tables) {
    json steps = json::array();
    for (const TransformStep &step : table.steps) steps.push_back(step_to_json(step));
    tables.push_back(json{{"name", table.name}, {"steps", steps}});
  }
  json joins = json::array();
  for (const PlanJoin &join : plan.joins) joins.push_back(join_to_json(join));

  json metadata{{"project", plan.metadata.project},
                {"mode", plan.metadata.mode},
                {"depth", plan.metadata.depth},
                {"objective",
                 json{{"cost", plan.metadata.objective_cost},
                      {"probability", plan.metadata.objective_probability}}},
                {"iterations", plan.metadata.iterations},
                {"elapsed_ms", plan.metadata.elapsed_ms}};
  if (!plan.metadata.oracle.empty()) metadata["oracle"] = plan.metadata.oracle;

  json root{{"format_version", plan.format_version},
            {"tables", tables},
            {"joins", joins},
            {"metadata", metadata}};
  return root.dump(2) + "\n";
}

PrepPlan parse_plan(const std::string &json_text, const std::string &origin) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) schema_error(origin, "not valid JSON");
  if (!root.is_object()) schema_error(origin, "top level must be an object");

  PrepPlan plan;
  plan.format_version = require_int(root, "format_version", origin);
  if (plan.format_version != 1)
    schema_error(origin, "unsupported format_version " + std::to_string(plan.format_version));

  const json &tables = require_key(root, "tables", origin);
  if (!tables.is_array()) schema_error(origin, "\"tables\" must be an array");
  for (const json &t : tables) {
    if (!t.is_object()) schema_error(origin, "table entry must be an object");
    PlanTable entry;
    entry.name = require_string(t, "name", origin);
    const std::string where = origin + ": table \"" + entry.name + "\"";
    const json &steps = require_key(t, "steps", where);
    if (!steps.is_array()) schema_error(where, "\"steps\" must be an array");
    for (const json &s : steps) entry.steps.push_back(step_from_json(s, where));
    plan.tables.push_back(std::move(entry));
  }

  const json &joins = require_key(root, "joins", origin);
  if (!joins.is_array()) schema_error(origin, "\"joins\" must be an array");
  for (const json &j : joins) plan.joins.push_back(join_from_json(j, origin));

  if (auto it = root.find("metadata"); it != root.end() && it->is_object()) {
    const json &meta = *it;
    plan.metadata.project = optional_string(meta, "project");
    plan.metadata.mode = optional_string(meta, "mode");
    if (auto d = meta.find("depth"); d != meta.end() && d->is_number_integer())
      plan.metadata.depth = d->get<int>();
    if (auto o = meta.find("objective"); o != meta.end() && o->is_object()) {
      if (auto c = o->find("cost"); c != o->end() && c->is_number())
        plan.metadata.objective_cost = c->get<double>();
      if (auto p = o->find("probability"); p != o->end() && p->is_number())
        plan.metadata.objective_probability = p->get<double>();
    }
    if (auto i = meta.find("iterations"); i != meta.end() && i->is_number_integer())
      plan.metadata.iterations = i->get<int>();
    if (auto e = meta.find("elapsed_ms"); e != meta.end() && e->is_number())
      plan.metadata.elapsed_ms = e->get<double>();
    plan.metadata.oracle = optional_string(meta, "oracle");
  }
  return plan;
}

PrepPlan load_plan_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Status::bad_input_file, "cannot read plan file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_plan(buffer.str(), path);
}

void write_plan_file(const PrepPlan &plan, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Status::bad_input_file, "cannot write plan file: " + path);
  out << serialize_plan(plan);
  if (!out) throw Error(Status::bad_input_file, "failed writing plan file: " + path);
}

Table apply_table_steps(const Table &table, const std::vector<TransformStep> &steps) {
  Table current = table;
  for (size_t i = 0; i < steps.size(); ++i) {
    try {
      current = apply_step(current, steps[i]);
    } catch (const Error &e) {
      throw Error(Status::apply_failed, "table \"" + table.name + "\" step " +
                                            std::to_string(i + 1) + " (" + steps[i].op_name() +
                                            "): " + e.what());
    }
  }
  return current;
}

void apply_plan(const ProjectContext &ctx, const PrepPlan &plan, const std::string &out_dir,
                const std::string &source_dir) {
  std::map<std::string, const PlanTable *> by_name;
  for (const PlanTable &table : plan.tables) by_name[table.name] = &table;
  std::set<std::string> known;
  for (const Table &table : ctx.tables()) known.insert(table.name);
  for (const PlanTable &table : plan.tables)
    if (!known.count(table.name))
      throw Error(Status::apply_failed, "plan references unknown table \"" + table.name + "\"");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Status::apply_failed, "cannot create output directory: " + out_dir);

  for (const Table &table : ctx.tables()) {
    auto it = by_name.find(table.name);
    const bool has_steps = it != by_name.end() && !it->second->steps.empty();
    const fs::path dest = fs::path(out_dir) / (table.name + ".csv");
    if (!has_steps && !source_dir.empty()) {
      const fs::path src = fs::path(source_dir) / (table.name + ".csv");
      if (fs::exists(src)) {
        fs::copy_file(src, dest, fs::copy_options::overwrite_existing, ec);
        if (ec)
          throw Error(Status::apply_failed, "cannot copy " + src.string() + ": " + ec.message());
        continue;
      }
    }
    Table out = has_steps ? apply_table_steps(table, it->second->steps) : table;
    write_csv(out, dest);
  }

  json joins = json::array();
  for (const PlanJoin &join : plan.joins) joins.push_back(join_to_json(join));
  json sidecar{{"format_version", plan.format_version}, {"joins", joins}};
  const fs::path rel_path = fs::path(out_dir) / "relationships.json";
  std::ofstream rel(rel_path, std::ios::binary);
  if (!rel) throw Error(Status::apply_failed, "cannot write " + rel_path.string());
  rel << sidecar.dump(2) << "\n";
}

EvalMetrics compute_metrics(const EvalCounts &counts) {
  EvalMetrics metrics;
  metrics.precision = counts.predicted > 0
                          ? static_cast<double>(counts.correct) / static_cast<double>(counts.predicted)
                          : (counts.truth == 0 ? 1.0 : 0.0);
  metrics.recall = counts.truth > 0
                       ? static_cast<double>(counts.correct) / static_cast<double>(counts.truth)
                       : (counts.predicted == 0 ? 1.0 : 0.0);
  const double pr = metrics.precision + metrics.recall;
  metrics.f1 = pr > 0.0 ? 2.0 * metrics.precision * metrics.recall / pr : 0.0;
  return metrics;
}

EvalReport evaluate_plans(const std::vector<std::pair<std::string, PrepPlan>> &predicted,
                          const std::vector<std::pair<std::string, PrepPlan>> &truth) {
  std::map<std::string, const PrepPlan *> truth_by_id;
  for (const auto &[id, plan] : truth) truth_by_id[id] = &plan;

  EvalReport report;
  std::set<std::string> matched;
  for (const auto &[id, pred] : predicted) {
    auto it = truth_by_id.find(id);
    if (it == truth_by_id.end())
      throw Error(Status::eval_mismatch, "no ground truth for project \"" + id + "\"");
    matched.insert(id);
    const PrepPlan &gold = *it->second;

    ProjectEval pe;
    pe.project = id;

    std::map<std::string, const std::vector<TransformStep> *> gold_tables;
    for (const PlanTable &table : gold.tables) gold_tables[table.name] = &table.steps;
    for (const PlanTable &table : gold.tables)
      pe.transforms.truth += static_cast<long long>(table.steps.size());
    for (const PlanTable &table : pred.tables) {
      pe.transforms.predicted += static_cast<long long>(table.steps.size());
      auto g = gold_tables.find(table.name);
      if (g == gold_tables.end()) continue;
      const auto &gold_steps = *g->second;
      const size_t overlap = std::min(table.steps.size(), gold_steps.size());
      for (size_t i = 0; i < overlap; ++i)
        if (eval_key(table.steps[i]) == eval_key(gold_steps[i])) ++pe.transforms.correct;
    }

    std::multiset<std::array<std::string, 4>> gold_joins;
    for (const PlanJoin &join : gold.joins) gold_joins.insert(join_signature(join));
    pe.joins.truth = static_cast<long long>(gold.joins.size());
    pe.joins.predicted = static_cast<long long>(pred.joins.size());
    for (const PlanJoin &join : pred.joins) {
      auto g = gold_joins.find(join_signature(join));
      if (g != gold_joins.end()) {
        gold_joins.erase(g);
        ++pe.joins.correct;
      }
    }
    report.projects.push_back(pe);
  }

  // Truth projects nobody predicted still count toward recall.
  for (const auto &[id, gold] : truth) {
    if (matched.count(id)) continue;
    ProjectEval pe;
    pe.project = id;
    for (const PlanTable &table : gold.tables)
      pe.transforms.truth += static_cast<long long>(table.steps.size());
    pe.joins.truth = static_cast<long long>(gold.joins.size());
    report.projects.push_back(pe);
  }

  for (const ProjectEval &pe : report.projects) {
    report.transforms.correct += pe.transforms.correct;
    report.transforms.predicted += pe.transforms.predicted;
    report.transforms.truth += pe.transforms.truth;
    report.joins.correct += pe.joins.correct;
    report.joins.predicted += pe.joins.predicted;
    report.joins.truth += pe.joins.truth;
  }
  report.transform_metrics = compute_metrics(report.transforms);
  report.join_metrics = compute_metrics(report.joins);
  return report;
}

std::vector<std::pair<std::string, PrepPlan>> load_plan_set(const std::string &path) {
  std::vector<std::pair<std::string, PrepPlan>> plans;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json" &&
          entry.path().filename() != "relationships.json")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path &file : files)
      plans.emplace_back(file.stem().string(), load_plan_file(file.string()));
    if (plans.empty())
      throw Error(Status::bad_input_file, "no *.json plans found in directory: " + path);
  } else {
    plans.emplace_back(fs::path(path).stem().string(), load_plan_file(path));
  }
  return plans;
}

std::string serialize_report(const EvalReport &report) {
  json projects = json::array();
  for (const ProjectEval &pe : report.projects) {
    projects.push_back(json{{"project", pe.project},
                            {"transforms", counts_to_json(pe.transforms)},
                            {"joins", counts_to_json(pe.joins)}});
  }
  json root{{"transforms", counts_to_json(report.transforms)},
            {"transform_metrics", metrics_to_json(report.transform_metrics)},
            {"joins", counts_to_json(report.joins)},
            {"join_metrics", metrics_to_json(report.join_metrics)},
            {"projects", projects}};
  return root.dump(2) + "\n";
}

} // namespace autoprep
