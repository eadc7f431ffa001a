#pragma once

// Most-probable-prep solvers on the search graph: per-tree baselines, the
// penalty-augmented Steiner approximation (optimistic mode), the iterative
// prune/re-score loop (precise mode), validity checking, a brute-force
// oracle, and the probability objective.

#include "graph.hpp"

#include <utility>
#include <vector>

namespace autoprep {

struct PenaltyContext {
  double p = 0.0;                      // sum of best-leaf costs + (n-1) * ln 2
  std::vector<double> best_leaf_costs; // per tree
  std::vector<size_t> best_leaves;     // per tree, vertex ids
};

struct Solution {
  std::vector<std::vector<size_t>> path_edges; // per tree, m transform edge ids
  std::vector<size_t> leaves;                  // chosen leaf vertex per tree
  std::vector<size_t> join_edges;              // n-1 join edge ids
  double cost_raw = 0.0;       // sum of w_bar over all chosen edges
  double cost_penalized = 0.0; // cost_raw + 2p * edge count
  double probability = 0.0;    // exp(-cost_raw)

  size_t edge_count() const;
  // Sorted (kind, id) set; equal signatures mean the same chosen edges.
  std::vector<std::pair<int, size_t>> edge_signature() const;
};

struct ValidationReport {
  bool valid = true;
  std::vector<std::string> violations;
};

// Best-leaf costs per tree plus the penalty constant of the optimistic solve.
PenaltyContext compute_penalty(const SearchGraph &graph);

// Cheapest root-to-leaf path of one tree; ties go to the lower vertex id.
std::pair<size_t, double> best_leaf(const SearchGraph &graph, size_t tree);

// Best per-tree paths plus the maximum-probability spanning tree over the
// join edges between the chosen leaves. Always valid.
Solution baseline_solution(const SearchGraph &graph);

// View edge for the generic Steiner solver.
struct WeightedEdge {
  size_t id = 0;
  size_t u = 0;
  size_t v = 0;
  double w = 0.0;
};

// Classic five-step Kou approximation: metric closure over the terminals,
// closure MST, shortest-path expansion, induced-subgraph MST, iterative
// deletion of non-terminal leaves. Returns ids of a tree spanning the
// terminals; throws Error(invalid_argument) if they are disconnected.
std::vector<size_t> kou_steiner(size_t vertex_count, const std::vector<WeightedEdge> &edges,
                                const std::vector<size_t> &terminals);

// Single-shot solve: adds 2p to every edge weight, runs Kou over the tree
// roots, and keeps the Steiner result only when it is strictly cheaper than
// the baseline bound and decomposes into a valid solution; otherwise returns
// the baseline.
Solution solve_optimistic(const SearchGraph &graph);

// Iterative mode: solve, prune against the incumbent, re-score surviving
// transform edges with the restricted leaf pools, and re-solve, until the
// chosen edge set repeats or max_iterations loops ran. `ctx` may be null for
// graphs without table data (no re-scoring happens then). The mutated
// working copy and the number of loop iterations are reported through the
// optional out-parameters.
Solution solve_precise(const SearchGraph &graph, const ScorerConfig &config,
                       const ProjectContext *ctx, int max_iterations,
                       SearchGraph *final_graph = nullptr, int *iterations_run = nullptr);

// Removes transform edges (and their subtrees plus orphaned join edges)
// whose optimistic completion bound exceeds the incumbent's raw cost; edges
// on the incumbent's paths are never removed.
void prune_graph(SearchGraph &graph, const Solution &incumbent);

// Structural validity: per-tree root-to-leaf paths of length m, exact edge
// counts, join edges spanning the chosen leaves. Dangling ids throw
// Error(invalid_argument) instead of reporting violations.
ValidationReport validate_solution(const SearchGraph &graph, const Solution &solution);

// Exhaustive optimum over every leaf combination (paths are forced; joins
// are the MST over the chosen leaves). Throws Error(budget_exceeded) when
// the combination count passes `combo_budget`.
Solution brute_force_oracle(const SearchGraph &graph, long long combo_budget = 100000);

// (cost_raw, probability) where probability is the direct product of edge
// weights; throws Error(invalid_argument) for invalid solutions.
std::pair<double, double> objective(const SearchGraph &graph, const Solution &solution);

} // namespace autoprep
