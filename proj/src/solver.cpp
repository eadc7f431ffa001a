#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <sstream>

namespace autoprep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Union-find over dense indices with path halving.
class DisjointSet {
public:
  explicit DisjointSet(size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), size_t{0}); }

  size_t find(size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(size_t a, size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

private:
  std::vector<size_t> parent_;
};

Solution make_solution(const SearchGraph &graph, const PenaltyContext &pen,
                       std::vector<size_t> leaves, std::vector<size_t> join_edges) {
  Solution sol;
  sol.leaves = std::move(leaves);
  sol.join_edges = std::move(join_edges);
  std::sort(sol.join_edges.begin(), sol.join_edges.end());
  double cost = 0.0;
  sol.path_edges.resize(sol.leaves.size());
  for (size_t i = 0; i < sol.leaves.size(); ++i) {
    sol.path_edges[i] = graph.path_from_root(sol.leaves[i]);
    for (size_t eid : sol.path_edges[i]) cost += graph.transform_edges[eid].w_bar;
  }
  for (size_t eid : sol.join_edges) cost += graph.join_edges[eid].w_bar;
  sol.cost_raw = cost;
  sol.probability = std::exp(-cost);
  sol.cost_penalized = cost + 2.0 * pen.p * static_cast<double>(sol.edge_count());
  return sol;
}

// Maximum-probability (minimum w_bar) spanning tree over the join edges
// whose endpoints are all in `leaves`; ties break on the lower edge id.
std::vector<size_t> join_spanning_tree(const SearchGraph &graph, const std::vector<size_t> &leaves) {
  std::vector<size_t> tree_of(graph.vertices.size(), SIZE_MAX);
  for (size_t leaf : leaves) tree_of[leaf] = graph.vertices[leaf].tree_index;
  std::vector<std::pair<double, size_t>> order;
  for (const JoinEdge &edge : graph.join_edges) {
    if (!edge.alive) continue;
    if (tree_of[edge.a] == SIZE_MAX || tree_of[edge.b] == SIZE_MAX) continue;
    order.emplace_back(edge.w_bar, edge.id);
  }
  std::sort(order.begin(), order.end());
  DisjointSet dsu(graph.tree_count());
  std::vector<size_t> chosen;
  for (const auto &[w, id] : order) {
    const JoinEdge &edge = graph.join_edges[id];
    if (dsu.unite(tree_of[edge.a], tree_of[edge.b])) chosen.push_back(id);
  }
  if (chosen.size() + 1 != graph.tree_count())
    throw Error(Status::internal, "join edges do not connect all trees");
  return chosen;
}

// Splits Steiner view ids back into transform/join edge ids and rebuilds a
// Solution; returns nullopt when the edge set is not n root-to-leaf paths
// plus a spanning set of join edges.
std::optional<Solution> decompose(const SearchGraph &graph, const PenaltyContext &pen,
                                  const std::vector<size_t> &view_ids) {
  const size_t join_base = graph.transform_edges.size();
  std::vector<std::vector<size_t>> per_tree(graph.tree_count());
  std::vector<size_t> join_ids;
  for (size_t vid : view_ids) {
    if (vid < join_base) {
      const TransformEdge &edge = graph.transform_edges[vid];
      per_tree[graph.vertices[edge.parent].tree_index].push_back(vid);
    } else {
      join_ids.push_back(vid - join_base);
    }
  }
  if (join_ids.size() + 1 != graph.tree_count()) return std::nullopt;
  std::vector<size_t> leaves;
  for (size_t t = 0; t < graph.tree_count(); ++t) {
    if (per_tree[t].size() != static_cast<size_t>(graph.m)) return std::nullopt;
    // The chosen edges of one tree must chain root -> leaf.
    std::map<size_t, size_t> by_parent;
    for (size_t eid : per_tree[t]) {
      if (!by_parent.emplace(graph.transform_edges[eid].parent, eid).second) return std::nullopt;
    }
    size_t at = graph.roots[t];
    for (size_t step = 0; step < static_cast<size_t>(graph.m); ++step) {
      auto it = by_parent.find(at);
      if (it == by_parent.end()) return std::nullopt;
      at = graph.transform_edges[it->second].child;
    }
    if (!graph.is_leaf(at)) return std::nullopt;
    leaves.push_back(at);
  }
  std::set<size_t> leaf_set(leaves.begin(), leaves.end());
  DisjointSet dsu(graph.tree_count());
  for (size_t jid : join_ids) {
    const JoinEdge &edge = graph.join_edges[jid];
    if (!leaf_set.count(edge.a) || !leaf_set.count(edge.b)) return std::nullopt;
    if (!dsu.unite(graph.vertices[edge.a].tree_index, graph.vertices[edge.b].tree_index))
      return std::nullopt;
  }
  return make_solution(graph, pen, std::move(leaves), std::move(join_ids));
}

} // namespace

size_t Solution::edge_count() const {
  size_t total = join_edges.size();
  for (const auto &path : path_edges) total += path.size();
  return total;
}

std::vector<std::pair<int, size_t>> Solution::edge_signature() const {
  std::vector<std::pair<int, size_t>> sig;
  for (const auto &path : path_edges)
    for (size_t eid : path) sig.emplace_back(0, eid);
  for (size_t eid : join_edges) sig.emplace_back(1, eid);
  std::sort(sig.begin(), sig.end());
  return sig;
}

std::pair<size_t, double> best_leaf(const SearchGraph &graph, size_t tree) {
  size_t best = kNoVertex;
  double best_cost = kInf;
  for (size_t leaf : graph.alive_leaves(tree)) {
    double cost = graph.path_cost(leaf);
    if (cost < best_cost) { // id order makes ties keep the lower vertex id
      best_cost = cost;
      best = leaf;
    }
  }
  if (best == kNoVertex)
    throw Error(Status::internal, "tree " + std::to_string(tree) + " has no alive leaves");
  return {best, best_cost};
}

PenaltyContext compute_penalty(const SearchGraph &graph) {
  PenaltyContext pen;
  for (size_t t = 0; t < graph.tree_count(); ++t) {
    auto [leaf, cost] = best_leaf(graph, t);
    pen.best_leaves.push_back(leaf);
    pen.best_leaf_costs.push_back(cost);
    pen.p += cost;
  }
  pen.p += static_cast<double>(graph.tree_count() - 1) * log_weight(0.5);
  return pen;
}

Solution baseline_solution(const SearchGraph &graph) {
  PenaltyContext pen = compute_penalty(graph);
  std::vector<size_t> joins = join_spanning_tree(graph, pen.best_leaves);
  return make_solution(graph, pen, pen.best_leaves, std::move(joins));
}

std::vector<size_t> kou_steiner(size_t vertex_count, const std::vector<WeightedEdge> &edges,
                                const std::vector<size_t> &terminals) {
  if (terminals.empty()) return {};
  if (terminals.size() == 1) return {};

  // Adjacency over edge indexes; index order fixes every tie deterministically.
  std::vector<std::vector<std::pair<size_t, size_t>>> adj(vertex_count); // (edge idx, other end)
  for (size_t i = 0; i < edges.size(); ++i) {
    adj[edges[i].u].emplace_back(i, edges[i].v);
    adj[edges[i].v].emplace_back(i, edges[i].u);
  }

  // Step 1: shortest paths from every terminal (metric closure rows).
  const size_t R = terminals.size();
  std::vector<std::vector<double>> dist(R, std::vector<double>(vertex_count, kInf));
  std::vector<std::vector<size_t>> pred(R, std::vector<size_t>(vertex_count, SIZE_MAX));
  for (size_t r = 0; r < R; ++r) {
    auto &d = dist[r];
    auto &pe = pred[r];
    std::priority_queue<std::pair<double, size_t>, std::vector<std::pair<double, size_t>>,
                        std::greater<>>
        heap;
    d[terminals[r]] = 0.0;
    heap.emplace(0.0, terminals[r]);
    while (!heap.empty()) {
      auto [du, u] = heap.top();
      heap.pop();
      if (du > d[u]) continue;
      for (auto [ei, v] : adj[u]) {
        double nd = du + edges[ei].w;
        if (nd < d[v]) {
          d[v] = nd;
          pe[v] = ei;
          heap.emplace(nd, v);
        }
      }
    }
  }

  // Step 2: MST of the closure graph over the terminals.
  std::vector<std::tuple<double, size_t, size_t>> closure; // (dist, i, j)
  for (size_t i = 0; i < R; ++i)
    for (size_t j = i + 1; j < R; ++j) {
      if (dist[i][terminals[j]] == kInf)
        throw Error(Status::invalid_argument, "terminals are not connected");
      closure.emplace_back(dist[i][terminals[j]], i, j);
    }
  std::sort(closure.begin(), closure.end());
  DisjointSet closure_dsu(R);
  std::vector<std::pair<size_t, size_t>> closure_mst;
  for (const auto &[w, i, j] : closure) {
    if (closure_dsu.unite(i, j)) closure_mst.emplace_back(i, j);
  }

  // Step 3: expand each closure edge into its shortest path.
  std::set<size_t> expanded; // edge indexes
  std::set<size_t> touched;  // vertices
  for (size_t t : terminals) touched.insert(t);
  for (const auto &[i, j] : closure_mst) {
    size_t at = terminals[j];
    while (at != terminals[i]) {
      size_t ei = pred[i][at];
      expanded.insert(ei);
      touched.insert(at);
      at = (edges[ei].u == at) ? edges[ei].v : edges[ei].u;
    }
    touched.insert(terminals[i]);
  }

  // Step 4: MST of the subgraph induced by the touched vertices (every edge
  // between them competes, not just the expanded ones).
  std::vector<size_t> compact(vertex_count, SIZE_MAX);
  size_t next = 0;
  for (size_t v : touched) compact[v] = next++;
  std::vector<std::tuple<double, size_t, size_t>> induced; // (w, edge id, edge idx)
  for (size_t i = 0; i < edges.size(); ++i) {
    if (compact[edges[i].u] != SIZE_MAX && compact[edges[i].v] != SIZE_MAX)
      induced.emplace_back(edges[i].w, edges[i].id, i);
  }
  std::sort(induced.begin(), induced.end());
  DisjointSet induced_dsu(next);
  std::vector<size_t> tree_idx; // edge indexes of the induced MST
  for (const auto &[w, id, idx] : induced) {
    if (induced_dsu.unite(compact[edges[idx].u], compact[edges[idx].v])) tree_idx.push_back(idx);
  }

  // Step 5: repeatedly drop non-terminal leaves.
  std::set<size_t> terminal_set(terminals.begin(), terminals.end());
  std::map<size_t, std::vector<size_t>> incident; // vertex -> edge indexes
  std::set<size_t> kept(tree_idx.begin(), tree_idx.end());
  for (size_t idx : kept) {
    incident[edges[idx].u].push_back(idx);
    incident[edges[idx].v].push_back(idx);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = incident.begin(); it != incident.end();) {
      auto &[v, inc] = *it;
      inc.erase(std::remove_if(inc.begin(), inc.end(),
                               [&](size_t idx) { return !kept.count(idx); }),
                inc.end());
      if (inc.size() == 1 && !terminal_set.count(v)) {
        kept.erase(inc.front());
        changed = true;
        it = incident.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::vector<size_t> result;
  for (size_t idx : kept) result.push_back(edges[idx].id);
  std::sort(result.begin(), result.end());
  return result;
}

Solution solve_optimistic(const SearchGraph &graph) {
  PenaltyContext pen = compute_penalty(graph);
  Solution base = make_solution(graph, pen, pen.best_leaves, join_spanning_tree(graph, pen.best_leaves));
  if (graph.tree_count() < 2) return base;

  const double two_p = 2.0 * pen.p;
  const size_t join_base = graph.transform_edges.size();
  std::vector<WeightedEdge> view;
  view.reserve(graph.transform_edges.size() + graph.join_edges.size());
  for (const TransformEdge &edge : graph.transform_edges) {
    if (!edge.alive) continue;
    view.push_back({edge.id, edge.parent, edge.child, edge.w_bar + two_p});
  }
  for (const JoinEdge &edge : graph.join_edges) {
    if (!edge.alive) continue;
    view.push_back({join_base + edge.id, edge.a, edge.b, edge.w_bar + two_p});
  }

  std::vector<size_t> steiner = kou_steiner(graph.vertices.size(), view, graph.roots);

  double raw = 0.0;
  for (size_t vid : steiner) {
    raw += (vid < join_base) ? graph.transform_edges[vid].w_bar
                             : graph.join_edges[vid - join_base].w_bar;
  }
  const double w_steiner = raw + two_p * static_cast<double>(steiner.size());
  const size_t target_edges = graph.m * graph.tree_count() + graph.tree_count() - 1;
  const double w_base = pen.p + two_p * static_cast<double>(target_edges);

  if (w_steiner < w_base && steiner.size() == target_edges) {
    if (auto sol = decompose(graph, pen, steiner)) {
      // The placeholder threshold above certifies decomposability, not
      // optimality: the baseline's real join tree can still be cheaper than
      // the Steiner tree, so keep whichever costs less.
      if (validate_solution(graph, *sol).valid && sol->cost_raw < base.cost_raw) return *sol;
    }
  }
  return base;
}

void prune_graph(SearchGraph &graph, const Solution &incumbent) {
  std::vector<char> protected_edge(graph.transform_edges.size(), 0);
  for (const auto &path : incumbent.path_edges)
    for (size_t eid : path) protected_edge[eid] = 1;

  std::vector<double> best(graph.tree_count());
  double best_total = 0.0;
  for (size_t t = 0; t < graph.tree_count(); ++t) {
    best[t] = best_leaf(graph, t).second;
    best_total += best[t];
  }

  for (size_t t = 0; t < graph.tree_count(); ++t) {
    const double other = best_total - best[t];
    // Cheapest completion below each vertex, computed before any removal in
    // this tree so every bound uses the same admissible snapshot.
    std::map<size_t, double> completion;
    std::vector<size_t> order; // vertices, parents before children
    order.push_back(graph.roots[t]);
    for (size_t i = 0; i < order.size(); ++i) {
      for (size_t eid : graph.vertices[order[i]].child_edges) {
        if (graph.transform_edges[eid].alive) order.push_back(graph.transform_edges[eid].child);
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const Vertex &v = graph.vertices[*it];
      double min_down = graph.is_leaf(v.id) ? 0.0 : kInf;
      for (size_t eid : v.child_edges) {
        const TransformEdge &edge = graph.transform_edges[eid];
        if (!edge.alive) continue;
        min_down = std::min(min_down, edge.w_bar + completion[edge.child]);
      }
      completion[v.id] = min_down;
    }
    std::map<size_t, double> down; // distance root -> vertex
    down[graph.roots[t]] = 0.0;
    for (size_t vid : order) {
      double at = down[vid];
      for (size_t eid : graph.vertices[vid].child_edges) {
        const TransformEdge &edge = graph.transform_edges[eid];
        if (!edge.alive) continue;
        down[edge.child] = at + edge.w_bar;
        if (protected_edge[eid]) continue;
        double bound = at + edge.w_bar + completion[edge.child] + other;
        if (bound > incumbent.cost_raw) graph.kill_subtree(edge.child);
      }
    }
  }
}

Solution solve_precise(const SearchGraph &graph, const ScorerConfig &config,
                       const ProjectContext *ctx, int max_iterations,
                       SearchGraph *final_graph, int *iterations_run) {
  SearchGraph work = graph;
  Solution current = solve_optimistic(work);
  int iter = 0;
  while (iter < max_iterations) {
    prune_graph(work, current);
    Solution previous = std::move(current);
    if (ctx != nullptr) rescore_transform_edges(work, *ctx, config);
    current = solve_optimistic(work);
    ++iter;
    if (current.edge_signature() == previous.edge_signature()) break;
  }
  if (final_graph != nullptr) *final_graph = std::move(work);
  if (iterations_run != nullptr) *iterations_run = iter;
  return current;
}

ValidationReport validate_solution(const SearchGraph &graph, const Solution &solution) {
  // Dangling references are structural errors, not mere invalidity.
  for (const auto &path : solution.path_edges)
    for (size_t eid : path)
      if (eid >= graph.transform_edges.size())
        throw Error(Status::invalid_argument,
                    "solution references unknown transform edge " + std::to_string(eid));
  for (size_t eid : solution.join_edges)
    if (eid >= graph.join_edges.size())
      throw Error(Status::invalid_argument,
                  "solution references unknown join edge " + std::to_string(eid));
  for (size_t vid : solution.leaves)
    if (vid >= graph.vertices.size())
      throw Error(Status::invalid_argument,
                  "solution references unknown vertex " + std::to_string(vid));

  ValidationReport report;
  auto fail = [&report](std::string msg) {
    report.valid = false;
    report.violations.push_back(std::move(msg));
  };

  const size_t n = graph.tree_count();
  if (solution.leaves.size() != n) fail("expected one leaf per tree");
  if (solution.path_edges.size() != n) fail("expected one path per tree");
  if (solution.join_edges.size() != n - 1)
    fail("expected " + std::to_string(n - 1) + " join edges, got " +
         std::to_string(solution.join_edges.size()));
  if (!report.valid) return report;

  for (size_t t = 0; t < n; ++t) {
    const auto &path = solution.path_edges[t];
    if (path.size() != static_cast<size_t>(graph.m)) {
      fail("tree " + std::to_string(t) + ": path length " + std::to_string(path.size()) +
           " != depth " + std::to_string(graph.m));
      continue;
    }
    size_t at = graph.roots[t];
    bool ok = true;
    for (size_t eid : path) {
      const TransformEdge &edge = graph.transform_edges[eid];
      if (edge.parent != at) {
        fail("tree " + std::to_string(t) + ": edge " + std::to_string(eid) +
             " does not continue the path");
        ok = false;
        break;
      }
      at = edge.child;
    }
    if (!ok) continue;
    if (at != solution.leaves[t])
      fail("tree " + std::to_string(t) + ": path ends at vertex " + std::to_string(at) +
           ", not the chosen leaf");
    else if (!graph.is_leaf(at))
      fail("tree " + std::to_string(t) + ": vertex " + std::to_string(at) + " is not a leaf");
    if (graph.vertices[solution.leaves[t]].tree_index != t)
      fail("leaf " + std::to_string(solution.leaves[t]) + " belongs to another tree");
  }

  std::set<size_t> leaf_set(solution.leaves.begin(), solution.leaves.end());
  std::set<size_t> seen_joins;
  DisjointSet dsu(n);
  size_t united = 0;
  for (size_t eid : solution.join_edges) {
    if (!seen_joins.insert(eid).second) {
      fail("join edge " + std::to_string(eid) + " appears twice");
      continue;
    }
    const JoinEdge &edge = graph.join_edges[eid];
    if (!leaf_set.count(edge.a) || !leaf_set.count(edge.b)) {
      fail("join edge " + std::to_string(eid) + " touches a vertex outside the chosen leaves");
      continue;
    }
    if (dsu.unite(graph.vertices[edge.a].tree_index, graph.vertices[edge.b].tree_index))
      ++united;
    else
      fail("join edge " + std::to_string(eid) + " closes a cycle");
  }
  if (report.valid && united != n - 1) fail("join edges do not connect every tree");
  return report;
}

Solution brute_force_oracle(const SearchGraph &graph, long long combo_budget) {
  PenaltyContext pen = compute_penalty(graph);
  const size_t n = graph.tree_count();
  std::vector<std::vector<size_t>> leaves(n);
  long long combos = 1;
  for (size_t t = 0; t < n; ++t) {
    leaves[t] = graph.alive_leaves(t);
    combos *= static_cast<long long>(leaves[t].size());
    if (combos > combo_budget)
      throw Error(Status::budget_exceeded,
                  "leaf combinations exceed the oracle budget of " + std::to_string(combo_budget));
  }

  std::map<std::pair<size_t, size_t>, size_t> join_by_pair;
  for (const JoinEdge &edge : graph.join_edges) {
    if (edge.alive) join_by_pair[{edge.a, edge.b}] = edge.id;
  }

  std::optional<Solution> best;
  std::vector<size_t> pick(n, 0);
  std::vector<size_t> combo(n);
  while (true) {
    double cost = 0.0;
    for (size_t t = 0; t < n; ++t) {
      combo[t] = leaves[t][pick[t]];
      cost += graph.path_cost(combo[t]);
    }
    // Minimum-cost spanning tree over this combination's join edges.
    std::vector<std::tuple<double, size_t>> order;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) {
        auto key = std::minmax(combo[i], combo[j]);
        auto it = join_by_pair.find({key.first, key.second});
        if (it != join_by_pair.end())
          order.emplace_back(graph.join_edges[it->second].w_bar, it->second);
      }
    std::sort(order.begin(), order.end());
    DisjointSet dsu(n);
    std::vector<size_t> joins;
    for (const auto &[w, id] : order) {
      const JoinEdge &edge = graph.join_edges[id];
      if (dsu.unite(graph.vertices[edge.a].tree_index, graph.vertices[edge.b].tree_index)) {
        joins.push_back(id);
        cost += w;
      }
    }
    if (joins.size() == n - 1 && (!best || cost < best->cost_raw - 1e-15)) {
      best = make_solution(graph, pen, combo, std::move(joins));
    }
    // Advance the odometer; earlier combinations win ties.
    size_t t = n;
    while (t > 0) {
      --t;
      if (++pick[t] < leaves[t].size()) break;
      pick[t] = 0;
      if (t == 0) {
        if (!best) throw Error(Status::internal, "no feasible leaf combination");
        return *best;
      }
    }
  }
}

std::pair<double, double> objective(const SearchGraph &graph, const Solution &solution) {
  ValidationReport report = validate_solution(graph, solution);
  if (!report.valid)
    throw Error(Status::invalid_argument, "invalid solution: " + report.violations.front());
  double cost = 0.0;
  double prob = 1.0;
  for (const auto &path : solution.path_edges)
    for (size_t eid : path) {
      cost += graph.transform_edges[eid].w_bar;
      prob *= graph.transform_edges[eid].w;
    }
  for (size_t eid : solution.join_edges) {
    cost += graph.join_edges[eid].w_bar;
    prob *= graph.join_edges[eid].w;
  }
  return {cost, prob};
}

} // namespace autoprep
