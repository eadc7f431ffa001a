// Solvers: baseline, the penalty-augmented Steiner approximation, the
// iterative precise mode, pruning, validation, the brute-force oracle, and
// the probability objective.

#include "doctest.h"

#include "solver.hpp"
#include "test_support.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

using namespace autoprep;

namespace {

SearchGraph fixture_graph() {
  std::ifstream in(AUTOPREP_FIXTURE_DIR "/figure4.graph", std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return SearchGraph::import_text(buffer.str());
}

} // namespace

TEST_CASE("best_leaf picks the cheapest path and breaks ties on vertex id") {
  SearchGraph g = SearchGraph::import_text(
      "graph m=1 trees=2\n"
      "vertex id=0 tree=0 depth=0\n"
      "vertex id=1 tree=0 depth=1\n"
      "vertex id=2 tree=0 depth=1\n"
      "vertex id=3 tree=1 depth=0\n"
      "vertex id=4 tree=1 depth=1\n"
      "tedge id=0 parent=0 child=1 w=0.5\n"
      "tedge id=1 parent=0 child=2 w=0.5\n"
      "tedge id=2 parent=3 child=4 w=0.6\n"
      "jedge id=0 a=1 b=4 w=0.5 placeholder\n"
      "jedge id=1 a=2 b=4 w=0.5 placeholder\n");
  auto [leaf0, cost0] = best_leaf(g, 0);
  CHECK(leaf0 == 1); // tie with vertex 2
  CHECK(cost0 == doctest::Approx(std::log(2.0)));
  auto [leaf1, cost1] = best_leaf(g, 1);
  CHECK(leaf1 == 4);
  CHECK(cost1 == doctest::Approx(-std::log(0.6)));

  PenaltyContext pen = compute_penalty(g);
  CHECK(pen.best_leaves == std::vector<size_t>{1, 4});
  CHECK(pen.p == doctest::Approx(std::log(2.0) - std::log(0.6) + std::log(2.0)));
}

TEST_CASE("baseline breaks all-placeholder join ties on the lowest edge ids") {
  SearchGraph g = SearchGraph::import_text(
      "graph m=1 trees=3\n"
      "vertex id=0 tree=0 depth=0\n"
      "vertex id=1 tree=0 depth=1\n"
      "vertex id=2 tree=1 depth=0\n"
      "vertex id=3 tree=1 depth=1\n"
      "vertex id=4 tree=2 depth=0\n"
      "vertex id=5 tree=2 depth=1\n"
      "tedge id=0 parent=0 child=1 w=0.9\n"
      "tedge id=1 parent=2 child=3 w=0.9\n"
      "tedge id=2 parent=4 child=5 w=0.9\n"
      "jedge id=0 a=1 b=3 w=0.5 placeholder\n"
      "jedge id=1 a=1 b=5 w=0.5 placeholder\n"
      "jedge id=2 a=3 b=5 w=0.5 placeholder\n");
  Solution base = baseline_solution(g);
  CHECK(base.join_edges == std::vector<size_t>{0, 1});
  CHECK(base.probability == doctest::Approx(0.9 * 0.9 * 0.9 * 0.25).epsilon(1e-12));
  CHECK(validate_solution(g, base).valid);
}

TEST_CASE("kou_steiner recovers a hub star instead of direct terminal edges") {
  // Star through vertex 3 costs 3; any pair of direct edges costs 6.
  std::vector<WeightedEdge> edges = {
      {0, 0, 3, 1.0}, {1, 1, 3, 1.0}, {2, 2, 3, 1.0},
      {3, 0, 1, 3.0}, {4, 0, 2, 3.0}, {5, 1, 2, 3.0},
  };
  CHECK(kou_steiner(4, edges, {0, 1, 2}) == std::vector<size_t>{0, 1, 2});
}

TEST_CASE("kou_steiner improves on expanded paths via the induced-subgraph MST") {
  // Closure MST expands to {direct 0-1, 0-3-2}; the induced MST swaps the
  // direct edge for the cheaper 1-3 spoke.
  std::vector<WeightedEdge> edges = {
      {0, 0, 3, 1.0}, {1, 1, 3, 1.0}, {2, 2, 3, 1.0}, {3, 0, 1, 1.5},
  };
  CHECK(kou_steiner(4, edges, {0, 1, 2}) == std::vector<size_t>{0, 1, 2});
}

TEST_CASE("kou_steiner with two terminals is the shortest path") {
  std::vector<WeightedEdge> edges = {
      {0, 0, 1, 1.0}, {1, 1, 2, 1.0}, {2, 2, 3, 1.0}, {3, 3, 4, 1.0}, {4, 0, 4, 10.0},
  };
  CHECK(kou_steiner(5, edges, {0, 4}) == std::vector<size_t>{0, 1, 2, 3});
}

TEST_CASE("kou_steiner over all vertices of a tree returns the tree") {
  std::vector<WeightedEdge> edges = {{0, 0, 1, 1.0}, {1, 1, 2, 2.0}, {2, 2, 3, 3.0}};
  CHECK(kou_steiner(4, edges, {0, 1, 2, 3}) == std::vector<size_t>{0, 1, 2});
}

TEST_CASE("kou_steiner handles trivial terminal sets and rejects disconnection") {
  std::vector<WeightedEdge> edges = {{0, 0, 1, 1.0}};
  CHECK(kou_steiner(4, edges, {}).empty());
  CHECK(kou_steiner(4, edges, {2}).empty());
  try {
    kou_steiner(4, edges, {0, 2});
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::invalid_argument);
    CHECK(std::string(e.what()).find("not connected") != std::string::npos);
  }
}

TEST_CASE("the three-tree fixture solves to the known optimum") {
  SearchGraph g = fixture_graph();

  PenaltyContext pen = compute_penalty(g);
  CHECK(pen.p == doctest::Approx(2.3434070875143008).epsilon(1e-12));
  CHECK(pen.best_leaves == std::vector<size_t>{1, 4, 6});

  Solution base = baseline_solution(g);
  CHECK(base.leaves == std::vector<size_t>{1, 4, 6});
  CHECK(base.join_edges == std::vector<size_t>{0, 2});
  CHECK(base.cost_raw == doctest::Approx(1.6502599069543553).epsilon(1e-12));
  CHECK(base.probability == doctest::Approx(0.192).epsilon(1e-12));
  CHECK(validate_solution(g, base).valid);

  Solution opt = solve_optimistic(g);
  CHECK(opt.leaves == std::vector<size_t>{1, 4, 7});
  CHECK(opt.path_edges == std::vector<std::vector<size_t>>{{0}, {2}, {4}});
  CHECK(opt.join_edges == std::vector<size_t>{0, 3});
  CHECK(opt.cost_raw == doctest::Approx(1.4679383501604009).epsilon(1e-12));
  CHECK(opt.probability == doctest::Approx(0.2304).epsilon(1e-12));
  CHECK(opt.edge_count() == 5);
  CHECK(opt.cost_penalized ==
        doctest::Approx(opt.cost_raw + 2.0 * pen.p * 5.0).epsilon(1e-12));
  CHECK(validate_solution(g, opt).valid);

  Solution oracle = brute_force_oracle(g);
  CHECK(oracle.edge_signature() == opt.edge_signature());
  CHECK(oracle.cost_raw == doctest::Approx(opt.cost_raw).epsilon(1e-12));

  int iterations = 0;
  SearchGraph final_graph;
  Solution precise = solve_precise(g, ScorerConfig::defaults(), nullptr, 5, &final_graph, &iterations);
  CHECK(precise.edge_signature() == opt.edge_signature());
  CHECK(iterations == 1);
  CHECK_FALSE(final_graph.transform_edges[1].alive); // pruned low-probability branch

  auto [cost, prob] = objective(g, opt);
  CHECK(cost == doctest::Approx(opt.cost_raw).epsilon(1e-12));
  CHECK(prob == doctest::Approx(0.8 * 0.8 * 0.4 * 1.0 * 0.9).epsilon(1e-12));
}

TEST_CASE("pruning kills branches whose completion bound beats the incumbent") {
  SearchGraph g = fixture_graph();
  Solution opt = solve_optimistic(g);
  prune_graph(g, opt);
  // Branch to the 0.2-probability leaf: 1.609 + 0.223 + 0.511 > 1.468.
  CHECK_FALSE(g.transform_edges[1].alive);
  CHECK_FALSE(g.vertices[2].alive);
  CHECK_FALSE(g.join_edges[1].alive);
  CHECK_FALSE(g.join_edges[4].alive);
  CHECK_FALSE(g.join_edges[5].alive);
  for (size_t id : {size_t{0}, size_t{2}, size_t{3}, size_t{4}})
    CHECK(g.transform_edges[id].alive);
  // Re-solving the pruned graph reproduces the incumbent.
  CHECK(solve_optimistic(g).edge_signature() == opt.edge_signature());
}

TEST_CASE("pruning never removes edges on the incumbent paths") {
  SearchGraph g = fixture_graph();
  // Artificial incumbent: protect only the 0.2-probability edge and set the
  // bar low enough that both it and the 0.4 branch would otherwise die.
  Solution incumbent;
  incumbent.path_edges = {{1}};
  incumbent.cost_raw = 1.0;
  prune_graph(g, incumbent);
  CHECK(g.transform_edges[1].alive);  // bound 2.34 > 1.0, but protected
  CHECK_FALSE(g.transform_edges[4].alive); // bound 1.36 > 1.0, not protected
  CHECK(g.transform_edges[0].alive); // bound 0.96 < 1.0
  CHECK(g.transform_edges[3].alive);
}

TEST_CASE("validation reports violations and throws on dangling references") {
  SearchGraph g = fixture_graph();

  CHECK_FALSE(validate_solution(g, Solution{}).valid); // empty edge set

  Solution wrong_join;
  wrong_join.path_edges = {{0}, {2}, {3}};
  wrong_join.leaves = {1, 4, 6};
  wrong_join.join_edges = {0, 3}; // edge 3 touches leaf 7, not 6
  ValidationReport report = validate_solution(g, wrong_join);
  CHECK_FALSE(report.valid);
  bool mentions_outside = false;
  for (const auto &v : report.violations)
    if (v.find("outside the chosen leaves") != std::string::npos) mentions_outside = true;
  CHECK(mentions_outside);

  Solution duplicate = wrong_join;
  duplicate.join_edges = {0, 0};
  report = validate_solution(g, duplicate);
  CHECK_FALSE(report.valid);
  bool mentions_twice = false;
  for (const auto &v : report.violations)
    if (v.find("appears twice") != std::string::npos) mentions_twice = true;
  CHECK(mentions_twice);

  Solution detached;
  detached.path_edges = {{2}, {2}, {3}}; // edge 2 starts at tree 1's root
  detached.leaves = {1, 4, 6};
  detached.join_edges = {0, 2};
  report = validate_solution(g, detached);
  CHECK_FALSE(report.valid);
  bool mentions_continue = false;
  for (const auto &v : report.violations)
    if (v.find("does not continue the path") != std::string::npos) mentions_continue = true;
  CHECK(mentions_continue);

  Solution wrong_leaf;
  wrong_leaf.path_edges = {{0}, {2}, {3}};
  wrong_leaf.leaves = {2, 4, 6}; // path 0 ends at vertex 1
  wrong_leaf.join_edges = {0, 2};
  report = validate_solution(g, wrong_leaf);
  CHECK_FALSE(report.valid);
  bool mentions_end = false;
  for (const auto &v : report.violations)
    if (v.find("not the chosen leaf") != std::string::npos) mentions_end = true;
  CHECK(mentions_end);

  Solution dangling;
  dangling.path_edges = {{0}, {2}, {3}};
  dangling.leaves = {1, 4, 6};
  dangling.join_edges = {0, 99};
  try {
    validate_solution(g, dangling);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::invalid_argument);
  }
  try {
    objective(g, Solution{});
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::invalid_argument);
    CHECK(std::string(e.what()).find("invalid solution") != std::string::npos);
  }
}

TEST_CASE("a cycle among the chosen join edges is rejected") {
  SearchGraph g = SearchGraph::import_text(
      "graph m=1 trees=4\n"
      "vertex id=0 tree=0 depth=0\n"
      "vertex id=1 tree=0 depth=1\n"
      "vertex id=2 tree=1 depth=0\n"
      "vertex id=3 tree=1 depth=1\n"
      "vertex id=4 tree=2 depth=0\n"
      "vertex id=5 tree=2 depth=1\n"
      "vertex id=6 tree=3 depth=0\n"
      "vertex id=7 tree=3 depth=1\n"
      "tedge id=0 parent=0 child=1 w=0.9\n"
      "tedge id=1 parent=2 child=3 w=0.9\n"
      "tedge id=2 parent=4 child=5 w=0.9\n"
      "tedge id=3 parent=6 child=7 w=0.9\n"
      "jedge id=0 a=1 b=3 w=0.5 placeholder\n"
      "jedge id=1 a=1 b=5 w=0.5 placeholder\n"
      "jedge id=2 a=1 b=7 w=0.5 placeholder\n"
      "jedge id=3 a=3 b=5 w=0.5 placeholder\n"
      "jedge id=4 a=3 b=7 w=0.5 placeholder\n"
      "jedge id=5 a=5 b=7 w=0.5 placeholder\n");
  Solution sol;
  sol.path_edges = {{0}, {1}, {2}, {3}};
  sol.leaves = {1, 3, 5, 7};
  sol.join_edges = {0, 1, 3}; // triangle over trees 0,1,2; tree 3 unreached
  ValidationReport report = validate_solution(g, sol);
  CHECK_FALSE(report.valid);
  bool mentions_cycle = false;
  for (const auto &v : report.violations)
    if (v.find("closes a cycle") != std::string::npos) mentions_cycle = true;
  CHECK(mentions_cycle);
}

TEST_CASE("the oracle enforces its combination budget") {
  SearchGraph g = fixture_graph(); // 2 * 1 * 2 leaf combinations
  try {
    brute_force_oracle(g, 1);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::budget_exceeded);
    CHECK(std::string(e.what()).find("oracle budget") != std::string::npos);
  }
  CHECK_NOTHROW(brute_force_oracle(g, 4));
}

TEST_CASE("random graphs: every mode returns valid, consistent solutions") {
  std::mt19937_64 rng(20260815);
  testsupport::RandomGraphOptions opt;
  opt.max_trees = 5;
  opt.max_fanout = 3;
  ScorerConfig config = ScorerConfig::defaults();
  int oracle_checked = 0;
  for (int round = 0; round < 40; ++round) {
    SearchGraph g = testsupport::make_random_search_graph(rng, opt);

    Solution base = baseline_solution(g);
    Solution optimistic = solve_optimistic(g);
    Solution precise = solve_precise(g, config, nullptr, 4);
    for (const Solution *sol : {&base, &optimistic, &precise}) {
      ValidationReport report = validate_solution(g, *sol);
      if (!report.valid) {
        for (const auto &v : report.violations) MESSAGE(v);
      }
      REQUIRE(report.valid);
      CHECK(sol->edge_count() ==
            static_cast<size_t>(g.m) * g.tree_count() + g.tree_count() - 1);
      auto [cost, prob] = objective(g, *sol);
      CHECK(cost == doctest::Approx(sol->cost_raw).epsilon(1e-9));
      CHECK(prob == doctest::Approx(sol->probability).epsilon(1e-9));
      CHECK(sol->probability == doctest::Approx(std::exp(-sol->cost_raw)).epsilon(1e-9));
    }
    CHECK(optimistic.cost_raw <= base.cost_raw + 1e-9);
    CHECK(precise.cost_raw <= base.cost_raw + 1e-9);
    // Determinism: solving twice picks the same edges.
    CHECK(solve_optimistic(g).edge_signature() == optimistic.edge_signature());

    long long combos = 1;
    for (size_t t = 0; t < g.tree_count(); ++t)
      combos *= static_cast<long long>(g.alive_leaves(t).size());
    if (combos <= 2000) {
      Solution oracle = brute_force_oracle(g, 2000);
      REQUIRE(validate_solution(g, oracle).valid);
      CHECK(oracle.cost_raw <= base.cost_raw + 1e-9);
      CHECK(oracle.cost_raw <= optimistic.cost_raw + 1e-9);
      const double n = static_cast<double>(g.tree_count());
      CHECK(optimistic.cost_penalized <=
            (2.0 - 2.0 / n) * oracle.cost_penalized + 1e-9);
      ++oracle_checked;
    }
  }
  CHECK(oracle_checked > 10);
}

TEST_CASE("the bundled four-table project converges in two precise iterations") {
  ProjectContext ctx = ProjectContext::load_dir(AUTOPREP_FIXTURE_DIR "/worldstats");
  ScorerConfig config = ScorerConfig::defaults();
  SearchGraph g = build_search_graph(ctx, 2, config);

  Solution optimistic = solve_optimistic(g);
  CHECK(validate_solution(g, optimistic).valid);
  CHECK(optimistic.cost_raw == doctest::Approx(3.9601384400323956).epsilon(1e-9));

  int iterations = 0;
  Solution precise = solve_precise(g, config, &ctx, 5, nullptr, &iterations);
  CHECK(validate_solution(g, precise).valid);
  CHECK(precise.cost_raw == doctest::Approx(3.7259952697646597).epsilon(1e-9));
  CHECK(iterations == 2);
  CHECK(precise.cost_raw < optimistic.cost_raw);
}
