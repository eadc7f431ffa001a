#include "graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <sstream>

namespace autoprep {

double log_weight(double w) {
  if (!(w > 0.0) || w > 1.0)
    throw Error(Status::invalid_argument,
                "edge weight must lie in (0,1], got " + std::to_string(w));
  return -std::log(w);
}

std::vector<size_t> SearchGraph::alive_leaves(size_t tree) const {
  std::vector<size_t> out;
  for (const auto &v : vertices)
    if (v.alive && v.tree_index == tree && v.depth == m)
      out.push_back(v.id);
  return out;
}

std::vector<size_t> SearchGraph::path_from_root(size_t vertex) const {
  std::vector<size_t> edges;
  size_t v = vertex;
  while (vertices[v].parent != kNoVertex) {
    edges.push_back(vertices[v].incoming_edge);
    v = vertices[v].parent;
  }
  std::reverse(edges.begin(), edges.end());
  return edges;
}

double SearchGraph::path_cost(size_t vertex) const {
  double cost = 0.0;
  for (size_t e : path_from_root(vertex))
    cost += transform_edges[e].w_bar;
  return cost;
}

void SearchGraph::kill_subtree(size_t vertex) {
  std::vector<size_t> stack{vertex};
  std::vector<bool> killed_leaf(vertices.size(), false);
  while (!stack.empty()) {
    size_t v = stack.back();
    stack.pop_back();
    if (!vertices[v].alive)
      continue;
    vertices[v].alive = false;
    if (vertices[v].depth == m)
      killed_leaf[v] = true;
    if (vertices[v].incoming_edge != kNoVertex)
      transform_edges[vertices[v].incoming_edge].alive = false;
    for (size_t e : vertices[v].child_edges)
      if (transform_edges[e].alive)
        stack.push_back(transform_edges[e].child);
  }
  for (auto &j : join_edges)
    if (j.alive && (killed_leaf[j.a] || killed_leaf[j.b]))
      j.alive = false;
}

size_t build_transformation_tree(SearchGraph &graph, const Table &table, int m,
                                 const ProjectContext &ctx, const ScorerConfig &config,
                                 const std::vector<const Table *> &pool) {
  size_t tree = graph.tree_count();
  size_t root_id = graph.vertices.size();
  Vertex root;
  root.id = root_id;
  root.tree_index = tree;
  root.depth = 0;
  root.table = table;
  root.label = table.name;
  graph.vertices.push_back(std::move(root));
  graph.roots.push_back(root_id);
  graph.table_names.push_back(table.name);

  std::vector<size_t> frontier{root_id};
  for (int depth = 1; depth <= m; ++depth) {
    std::vector<size_t> next;
    for (size_t parent_id : frontier) {
      // Copy out what we need: vertex references go stale on push_back.
      Table parent_table = graph.vertices[parent_id].table;
      auto candidates = enumerate_scored_candidates(parent_table, pool, ctx, config);
      for (auto &cand : candidates) {
        Table child_table;
        try {
          child_table = apply_step(parent_table, cand.step);
        } catch (const Error &) {
          continue; // inapplicable candidate; NoOp always survives
        }
        size_t child_id = graph.vertices.size();
        size_t edge_id = graph.transform_edges.size();
        Vertex child;
        child.id = child_id;
        child.tree_index = tree;
        child.depth = depth;
        child.table = std::move(child_table);
        child.producing_step = cand.step;
        child.parent = parent_id;
        child.incoming_edge = edge_id;
        child.label = table.name + "/" + cand.step.canonical_key();
        graph.vertices.push_back(std::move(child));
        graph.vertices[parent_id].child_edges.push_back(edge_id);
        TransformEdge edge;
        edge.id = edge_id;
        edge.parent = parent_id;
        edge.child = child_id;
        edge.step = cand.step;
        edge.w = cand.probability;
        edge.w_bar = log_weight(cand.probability);
        graph.transform_edges.push_back(std::move(edge));
        next.push_back(child_id);
      }
    }
    frontier = std::move(next);
  }
  return root_id;
}

void rescore_transform_edges(SearchGraph &graph, const ProjectContext &ctx,
                             const ScorerConfig &config) {
  for (size_t tree = 0; tree < graph.tree_count(); ++tree) {
    std::vector<const Table *> pool;
    for (size_t other = 0; other < graph.tree_count(); ++other) {
      if (other == tree)
        continue;
      for (size_t leaf : graph.alive_leaves(other))
        pool.push_back(&graph.vertices[leaf].table);
    }
    for (auto &edge : graph.transform_edges) {
      if (!edge.alive || graph.vertices[edge.parent].tree_index != tree)
        continue;
      const Table &parent_table = graph.vertices[edge.parent].table;
      if (parent_table.column_count() == 0)
        continue; // imported graph: weights are pinned
      edge.w = score_transform(edge.step, parent_table, pool, ctx, config);
      edge.w_bar = log_weight(edge.w);
    }
  }
}

namespace {

void add_join_edges(SearchGraph &graph, const ProjectContext &ctx, const ScorerConfig &config) {
  std::vector<std::vector<size_t>> leaves(graph.tree_count());
  long long pairs = 0;
  for (size_t t = 0; t < graph.tree_count(); ++t)
    leaves[t] = graph.alive_leaves(t);
  for (size_t i = 0; i < graph.tree_count(); ++i)
    for (size_t j = i + 1; j < graph.tree_count(); ++j)
      pairs += static_cast<long long>(leaves[i].size()) * static_cast<long long>(leaves[j].size());
  if (pairs > config.caps.leaf_pair_budget)
    throw Error(Status::budget_exceeded,
                "projected cross-tree leaf pairs (" + std::to_string(pairs) +
                    ") exceed the join budget (" +
                    std::to_string(config.caps.leaf_pair_budget) + ")");

  // Leaves repeat table contents (NoOp chains), so join scores are memoized
  // by the ordered fingerprint pair.
  std::map<std::pair<uint64_t, uint64_t>, JoinScore> cache;
  for (size_t i = 0; i < graph.tree_count(); ++i) {
    for (size_t j = i + 1; j < graph.tree_count(); ++j) {
      for (size_t la : leaves[i]) {
        for (size_t lb : leaves[j]) {
          const Table &ta = graph.vertices[la].table;
          const Table &tb = graph.vertices[lb].table;
          std::pair<uint64_t, uint64_t> key{table_fingerprint(ta), table_fingerprint(tb)};
          auto it = cache.find(key);
          if (it == cache.end())
            it = cache.emplace(key, table_join_score(ta, tb, ctx, config)).first;
          const JoinScore &score = it->second;
          JoinEdge edge;
          edge.id = graph.join_edges.size();
          edge.a = la;
          edge.b = lb;
          edge.w = score.normalized;
          edge.w_bar = log_weight(score.normalized);
          edge.placeholder = score.placeholder;
          if (!score.placeholder)
            edge.columns = {{score.left_column, score.right_column}};
          graph.join_edges.push_back(std::move(edge));
        }
      }
    }
  }
}

} // namespace

SearchGraph build_search_graph(const ProjectContext &ctx, int m, const ScorerConfig &config) {
  const auto &tables = ctx.tables();
  if (tables.size() < 2)
    throw Error(Status::not_enough_tables, "project needs at least two tables, found " +
                                               std::to_string(tables.size()));
  if (m < 1)
    throw Error(Status::invalid_argument, "tree depth must be at least 1");

  SearchGraph graph;
  graph.m = m;
  // Phase 1: structure, probing each table against the other raw tables.
  for (size_t i = 0; i < tables.size(); ++i) {
    std::vector<const Table *> pool;
    for (size_t j = 0; j < tables.size(); ++j)
      if (j != i)
        pool.push_back(&tables[j]);
    build_transformation_tree(graph, tables[i], m, ctx, config, pool);
  }
  // Phase 2: optimistic re-scoring against the other trees' final leaves,
  // then join edges between every cross-tree leaf pair.
  rescore_transform_edges(graph, ctx, config);
  add_join_edges(graph, ctx, config);
  return graph;
}

// ---------------------------------------------------------------------------
// Debug text format

namespace {

std::string encode(const std::string &value) {
  static const char *hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : value) {
    if (c == '%' || c == ' ' || c == '=' || c == '\n' || c == '\r' || c == '\t') {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  if (c >= 'A' && c <= 'F')
    return c - 'A' + 10;
  return -1;
}

std::string decode(const std::string &value) {
  std::string out;
  for (size_t i = 0; i < value.size(); ++i) {
    if (value[i] == '%') {
      if (i + 2 >= value.size())
        throw Error(Status::bad_input_file, "graph import: truncated %-escape");
      int hi = hex_digit(value[i + 1]), lo = hex_digit(value[i + 2]);
      if (hi < 0 || lo < 0)
        throw Error(Status::bad_input_file, "graph import: bad %-escape in '" + value + "'");
      out.push_back(static_cast<char>(hi * 16 + lo));
      i += 2;
    } else {
      out.push_back(value[i]);
    }
  }
  return out;
}

struct Fields {
  std::map<std::string, std::string> kv;
  std::vector<std::string> flags;

  bool has(const std::string &k) const { return kv.count(k) || std::count(flags.begin(), flags.end(), k); }
  std::string str(const std::string &k, int line) const {
    auto it = kv.find(k);
    if (it == kv.end())
      throw Error(Status::bad_input_file,
                  "graph import: line " + std::to_string(line) + " missing '" + k + "'");
    return decode(it->second);
  }
  size_t id(const std::string &k, int line) const {
    return static_cast<size_t>(std::stoull(str(k, line)));
  }
  double num(const std::string &k, int line) const { return std::stod(str(k, line)); }
};

Fields parse_fields(const std::string &line) {
  Fields f;
  std::istringstream in(line);
  std::string token;
  in >> token; // record type, consumed by caller
  while (in >> token) {
    size_t eq = token.find('=');
    if (eq == std::string::npos)
      f.flags.push_back(token);
    else
      f.kv[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return f;
}

std::string format_weight(double w) {
  std::ostringstream out;
  out.precision(17);
  out << w;
  return out.str();
}

} // namespace

void SearchGraph::export_text(std::ostream &out) const {
  out << "graph m=" << m << " trees=" << tree_count() << "\n";
  for (const auto &v : vertices) {
    if (!v.alive)
      continue;
    out << "vertex id=" << v.id << " tree=" << v.tree_index << " depth=" << v.depth;
    if (!v.label.empty())
      out << " name=" << encode(v.label);
    if (v.producing_step)
      out << " step=" << encode(v.producing_step->canonical_key());
    out << "\n";
  }
  for (const auto &e : transform_edges) {
    if (!e.alive)
      continue;
    out << "tedge id=" << e.id << " parent=" << e.parent << " child=" << e.child
        << " w=" << format_weight(e.w) << " step=" << encode(e.step.canonical_key()) << "\n";
  }
  for (const auto &e : join_edges) {
    if (!e.alive)
      continue;
    out << "jedge id=" << e.id << " a=" << e.a << " b=" << e.b << " w=" << format_weight(e.w);
    if (e.placeholder)
      out << " placeholder";
    else if (e.columns)
      out << " acol=" << encode(e.columns->first) << " bcol=" << encode(e.columns->second);
    out << "\n";
  }
}

SearchGraph SearchGraph::import_text(const std::string &text) {
  SearchGraph g;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  size_t tree_count = 0;

  auto fail = [&line_no](const std::string &why) -> void {
    throw Error(Status::bad_input_file,
                "graph import: line " + std::to_string(line_no) + ": " + why);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    std::string stripped = line;
    size_t first = stripped.find_first_not_of(" \t");
    if (first == std::string::npos || stripped[first] == '#')
      continue;
    std::istringstream probe(line);
    std::string kind;
    probe >> kind;
    Fields f = parse_fields(line);
    if (kind == "graph") {
      if (header_seen)
        fail("duplicate graph header");
      header_seen = true;
      g.m = static_cast<int>(f.id("m", line_no));
      tree_count = f.id("trees", line_no);
      if (g.m < 1 || tree_count < 2)
        fail("graph needs m >= 1 and trees >= 2");
      g.roots.assign(tree_count, kNoVertex);
      g.table_names.assign(tree_count, "");
    } else if (kind == "vertex") {
      if (!header_seen)
        fail("vertex before graph header");
      size_t id = f.id("id", line_no);
      if (id != g.vertices.size())
        fail("vertex ids must be consecutive from 0");
      Vertex v;
      v.id = id;
      v.tree_index = f.id("tree", line_no);
      v.depth = static_cast<int>(f.id("depth", line_no));
      if (v.tree_index >= tree_count)
        fail("vertex tree index out of range");
      if (v.depth < 0 || v.depth > g.m)
        fail("vertex depth out of range");
      if (f.has("name"))
        v.label = f.str("name", line_no);
      if (v.depth == 0) {
        if (g.roots[v.tree_index] != kNoVertex)
          fail("tree has two roots");
        g.roots[v.tree_index] = v.id;
        g.table_names[v.tree_index] = v.label;
      }
      g.vertices.push_back(std::move(v));
    } else if (kind == "tedge") {
      if (!header_seen)
        fail("tedge before graph header");
      size_t id = f.id("id", line_no);
      if (id != g.transform_edges.size())
        fail("tedge ids must be consecutive from 0");
      TransformEdge e;
      e.id = id;
      e.parent = f.id("parent", line_no);
      e.child = f.id("child", line_no);
      e.w = f.num("w", line_no);
      if (e.parent >= g.vertices.size() || e.child >= g.vertices.size())
        fail("tedge endpoint out of range");
      Vertex &pv = g.vertices[e.parent];
      Vertex &cv = g.vertices[e.child];
      if (pv.tree_index != cv.tree_index)
        fail("tedge crosses trees");
      if (cv.depth != pv.depth + 1)
        fail("tedge must go one level down");
      if (cv.parent != kNoVertex)
        fail("vertex has two incoming tedges");
      if (!(e.w > 0.0 && e.w < 1.0))
        fail("tedge weight must lie in (0,1)");
      e.w_bar = log_weight(e.w);
      cv.parent = e.parent;
      cv.incoming_edge = e.id;
      pv.child_edges.push_back(e.id);
      g.transform_edges.push_back(std::move(e));
    } else if (kind == "jedge") {
      if (!header_seen)
        fail("jedge before graph header");
      size_t id = f.id("id", line_no);
      if (id != g.join_edges.size())
        fail("jedge ids must be consecutive from 0");
      JoinEdge e;
      e.id = id;
      e.a = f.id("a", line_no);
      e.b = f.id("b", line_no);
      e.w = f.num("w", line_no);
      if (e.a >= g.vertices.size() || e.b >= g.vertices.size())
        fail("jedge endpoint out of range");
      const Vertex &va = g.vertices[e.a];
      const Vertex &vb = g.vertices[e.b];
      if (va.tree_index == vb.tree_index)
        fail("jedge must connect different trees");
      if (va.depth != g.m || vb.depth != g.m)
        fail("jedge endpoints must be leaves (depth m)");
      e.placeholder = f.has("placeholder");
      if (e.placeholder && e.w != 0.5)
        fail("placeholder jedge must have weight 0.5");
      if (!(e.w >= 0.5 && e.w <= 1.0))
        fail("jedge weight must lie in [0.5,1]");
      if (!e.placeholder && f.has("acol"))
        e.columns = {{f.str("acol", line_no), f.str("bcol", line_no)}};
      e.w_bar = log_weight(e.w);
      g.join_edges.push_back(std::move(e));
    } else {
      fail("unknown record '" + kind + "'");
    }
  }
  line_no = 0; // structural errors below are not line-specific
  if (!header_seen)
    throw Error(Status::bad_input_file, "graph import: missing graph header");
  for (size_t t = 0; t < tree_count; ++t)
    if (g.roots[t] == kNoVertex)
      throw Error(Status::bad_input_file,
                  "graph import: tree " + std::to_string(t) + " has no root");
  for (const auto &v : g.vertices) {
    if (v.depth > 0 && v.parent == kNoVertex)
      throw Error(Status::bad_input_file, "graph import: vertex " + std::to_string(v.id) +
                                              " at depth " + std::to_string(v.depth) +
                                              " has no incoming tedge");
    if (v.depth < g.m && v.child_edges.empty())
      throw Error(Status::bad_input_file, "graph import: vertex " + std::to_string(v.id) +
                                              " has no children before depth m");
  }
  // Completeness: every cross-tree leaf pair must carry exactly one jedge.
  std::map<std::pair<size_t, size_t>, int> seen;
  for (const auto &e : g.join_edges) {
    auto key = std::minmax(e.a, e.b);
    if (++seen[{key.first, key.second}] > 1)
      throw Error(Status::bad_input_file, "graph import: duplicate jedge between " +
                                              std::to_string(e.a) + " and " + std::to_string(e.b));
  }
  for (size_t i = 0; i < tree_count; ++i)
    for (size_t j = i + 1; j < tree_count; ++j)
      for (size_t la : g.alive_leaves(i))
        for (size_t lb : g.alive_leaves(j)) {
          auto key = std::minmax(la, lb);
          if (!seen.count({key.first, key.second}))
            throw Error(Status::bad_input_file,
                        "graph import: missing jedge between leaves " + std::to_string(la) +
                            " and " + std::to_string(lb));
        }
  return g;
}

} // namespace autoprep
