#pragma once

// Helpers shared by the unit tests and the acceptance binary: a generator
// for random search graphs that satisfy the structural invariants (uniform
// tree depth, complete cross-tree join coverage).

#include "graph.hpp"

#include <random>
#include <string>
#include <utility>

namespace testsupport {

struct RandomGraphOptions {
  int min_trees = 2;
  int max_trees = 6;
  int min_depth = 1;
  int max_depth = 3;
  int max_fanout = 4; // children per internal vertex, at least 1
};

inline autoprep::SearchGraph make_random_search_graph(std::mt19937_64 &rng,
                                                      const RandomGraphOptions &opt = {}) {
  using namespace autoprep;
  SearchGraph g;
  std::uniform_int_distribution<int> depth_dist(opt.min_depth, opt.max_depth);
  std::uniform_int_distribution<int> tree_dist(opt.min_trees, opt.max_trees);
  std::uniform_int_distribution<int> fan_dist(1, opt.max_fanout);
  std::uniform_real_distribution<double> tweight(0.05, 0.95);
  std::uniform_real_distribution<double> jweight(0.5001, 0.9999);
  std::uniform_int_distribution<int> coin(0, 2);

  g.m = depth_dist(rng);
  const int trees = tree_dist(rng);
  for (int t = 0; t < trees; ++t) {
    Vertex root;
    root.id = g.vertices.size();
    root.tree_index = static_cast<size_t>(t);
    root.depth = 0;
    root.label = "t" + std::to_string(t);
    g.roots.push_back(root.id);
    g.table_names.push_back(root.label);
    g.vertices.push_back(root);
    std::vector<size_t> frontier{g.roots.back()};
    for (int d = 1; d <= g.m; ++d) {
      std::vector<size_t> next;
      for (size_t parent : frontier) {
        const int fan = fan_dist(rng);
        for (int c = 0; c < fan; ++c) {
          Vertex child;
          child.id = g.vertices.size();
          child.tree_index = static_cast<size_t>(t);
          child.depth = d;
          child.parent = parent;
          child.incoming_edge = g.transform_edges.size();
          TransformEdge edge;
          edge.id = g.transform_edges.size();
          edge.parent = parent;
          edge.child = child.id;
          edge.w = tweight(rng);
          edge.w_bar = log_weight(edge.w);
          g.vertices.push_back(child);
          g.vertices[parent].child_edges.push_back(edge.id);
          g.transform_edges.push_back(edge);
          next.push_back(child.id);
        }
      }
      frontier = std::move(next);
    }
  }
  for (size_t ta = 0; ta + 1 < g.tree_count(); ++ta)
    for (size_t tb = ta + 1; tb < g.tree_count(); ++tb)
      for (size_t la : g.alive_leaves(ta))
        for (size_t lb : g.alive_leaves(tb)) {
          JoinEdge j;
          j.id = g.join_edges.size();
          j.a = la;
          j.b = lb;
          if (coin(rng) == 0) {
            j.w = 0.5;
            j.placeholder = true;
          } else {
            j.w = jweight(rng);
            j.placeholder = false;
            j.columns = std::make_pair(std::string("x"), std::string("y"));
          }
          j.w_bar = log_weight(j.w);
          g.join_edges.push_back(j);
        }
  return g;
}

} // namespace testsupport
