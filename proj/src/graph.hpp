#pragma once

// The global search structure: one transformation tree per input table
// (uniform depth m, fan-out capped by the candidate enumerator) plus join
// edges between every cross-tree leaf pair. Edge weights are probabilities;
// solvers work on their negative natural logs (w_bar).

#include "ops.hpp"
#include "scoring.hpp"
#include "tables.hpp"

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace autoprep {

inline constexpr size_t kNoVertex = std::numeric_limits<size_t>::max();

struct Vertex {
  size_t id = 0;
  size_t tree_index = 0;
  int depth = 0;
  Table table; // empty for graphs loaded from debug text
  std::optional<TransformStep> producing_step; // none for roots
  size_t parent = kNoVertex;        // parent vertex id
  size_t incoming_edge = kNoVertex; // transform edge id from the parent
  std::vector<size_t> child_edges;  // transform edge ids
  std::string label;                // display name for debug export
  bool alive = true;

  bool is_root() const { return parent == kNoVertex; }
};

struct TransformEdge {
  size_t id = 0;
  size_t parent = 0;
  size_t child = 0;
  TransformStep step;
  double w = 0.0;     // probability in (0,1)
  double w_bar = 0.0; // -ln(w)
  bool alive = true;
};

struct JoinEdge {
  size_t id = 0;
  size_t a = 0; // leaf vertex, lower tree index
  size_t b = 0; // leaf vertex, higher tree index
  // Column names (a side, b side); absent on placeholder edges.
  std::optional<std::pair<std::string, std::string>> columns;
  double w = 0.5;     // normalized probability, >= 0.5
  double w_bar = 0.0; // -ln(w)
  bool placeholder = true;
  bool alive = true;
};

// -ln(w) for w in (0,1]; throws Error(invalid_argument) otherwise.
double log_weight(double w);

struct SearchGraph {
  int m = 2;
  std::vector<Vertex> vertices;
  std::vector<TransformEdge> transform_edges;
  std::vector<JoinEdge> join_edges;
  std::vector<size_t> roots;            // root vertex id per tree (terminals)
  std::vector<std::string> table_names; // original table name per tree

  size_t tree_count() const { return roots.size(); }
  bool is_leaf(size_t vertex) const {
    return vertices[vertex].depth == m && vertices[vertex].alive;
  }
  // Alive leaves of one tree, in vertex id order.
  std::vector<size_t> alive_leaves(size_t tree) const;
  // Root-to-vertex transform edge ids (empty for roots).
  std::vector<size_t> path_from_root(size_t vertex) const;
  // Sum of w_bar along the root path.
  double path_cost(size_t vertex) const;
  // Marks the vertex, its subtree, the incoming transform edge, all subtree
  // transform edges, and every join edge touching killed leaves as dead.
  void kill_subtree(size_t vertex);

  // Line-oriented debug text format (documented in the README):
  //   graph m=<int> trees=<int>
  //   vertex id= tree= depth= [name=] [step=]
  //   tedge id= parent= child= w= [step=]
  //   jedge id= a= b= w= [placeholder] [acol= bcol=]
  // Values are percent-escaped. Imported graphs carry no table data, so
  // their edge weights are pinned (rescoring skips them).
  void export_text(std::ostream &out) const;
  static SearchGraph import_text(const std::string &text);
};

// Builds the transformation tree for `table` into `graph` as tree index
// `graph.tree_count()`, probing join-directed candidates against `pool`.
// Returns the root vertex id. Children whose operator application fails are
// dropped; the NoOp chain keeps every tree at uniform depth m.
size_t build_transformation_tree(SearchGraph &graph, const Table &table, int m,
                                 const ProjectContext &ctx, const ScorerConfig &config,
                                 const std::vector<const Table *> &pool);

// Full two-phase construction over a project: per-table trees built against
// the other raw tables, transform edges then rescored against the other
// trees' final leaf tables, and join edges scored for every cross-tree leaf
// pair (placeholders at 0.5). Throws Error(not_enough_tables) for fewer than
// two tables and Error(budget_exceeded) when the projected number of leaf
// pairs exceeds the configured budget.
SearchGraph build_search_graph(const ProjectContext &ctx, int m, const ScorerConfig &config);

// Re-scores every alive transform edge of every tree with the candidate pool
// restricted to the other trees' currently-alive leaf tables (used by the
// two-phase build and by the precise-mode solve loop). Edges whose parent
// vertex has no table data (imported graphs) keep their weights.
void rescore_transform_edges(SearchGraph &graph, const ProjectContext &ctx,
                             const ScorerConfig &config);

} // namespace autoprep
