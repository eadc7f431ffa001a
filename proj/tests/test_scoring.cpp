// Scorer configuration parsing, logistic scoring, reshape/string feature
// extraction, and join scoring, pinned against hand-computed values on the
// bundled four-table fixture project.

#include "doctest.h"

#include "ops.hpp"
#include "scoring.hpp"

#include <cmath>
#include <string>

using namespace autoprep;

namespace {

Table load_fixture(const char *name) {
  return load_csv(std::string(AUTOPREP_FIXTURE_DIR "/worldstats/") + name + ".csv");
}

struct Fixture {
  Table fertility = load_fixture("fertility");
  Table date = load_fixture("date");
  Table economics = load_fixture("economics");
  Table country = load_fixture("country");
  ProjectContext ctx;
  ScorerConfig config = ScorerConfig::defaults();

  Fixture() : ctx(std::vector<Table>{load_fixture("country"), load_fixture("date"),
                                     load_fixture("economics"), load_fixture("fertility")},
                  "worldstats") {}
};

} // namespace

TEST_CASE("logistic and clamp behave as documented") {
  CHECK(logistic(0.0) == doctest::Approx(0.5));
  CHECK(logistic(0.405465108108) == doctest::Approx(0.6).epsilon(1e-9));
  ScorerConfig c = ScorerConfig::defaults();
  CHECK(c.clamp(2.0) == doctest::Approx(1.0 - c.epsilon));
  CHECK(c.clamp(-2.0) == doctest::Approx(c.epsilon));
  CHECK(c.clamp(0.37) == doctest::Approx(0.37));
}

TEST_CASE("the shipped config file is byte-equivalent to the embedded defaults") {
  ScorerConfig embedded = ScorerConfig::defaults();
  ScorerConfig file = ScorerConfig::load_file(AUTOPREP_CONFIG_DIR "/default_scorer.conf");
  CHECK(file.version == embedded.version);
  CHECK(file.epsilon == doctest::Approx(embedded.epsilon));
  CHECK(file.caps.per_node == embedded.caps.per_node);
  CHECK(file.caps.pivot_cardinality_cap == embedded.caps.pivot_cardinality_cap);
  CHECK(file.caps.containment_threshold ==
        doctest::Approx(embedded.caps.containment_threshold));
  CHECK(file.caps.probe_row_sample == embedded.caps.probe_row_sample);
  CHECK(file.caps.leaf_pair_budget == embedded.caps.leaf_pair_budget);
  CHECK(file.precise_max_iterations == embedded.precise_max_iterations);
  REQUIRE(file.operators.size() == embedded.operators.size());
  for (const auto &[op, row] : embedded.operators) {
    const OperatorWeights *loaded = file.weights_for(op);
    REQUIRE_MESSAGE(loaded != nullptr, op);
    CHECK(loaded->bias == doctest::Approx(row.bias).epsilon(1e-12));
    REQUIRE(loaded->weights.size() == row.weights.size());
    for (const auto &[feature, w] : row.weights)
      CHECK(loaded->weights.at(feature) == doctest::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("config parser handles sections, comments and overrides") {
  const std::string text =
      "# comment\n"
      "version = 2\n"
      "\n"
      "[caps]\n"
      "candidates_per_node = 5\n"
      "epsilon = 1e-4\n"
      "; another comment\n"
      "[transpose]\n"
      "bias = -1.5\n"
      "col_row_ratio = 0.25\n"
      "[overrides]\n"
      "00000000deadbeef noop() 0.8\n"
      "00000000deadbeef split(column=a b,delimiter=-,select_pos=0,output_column=) 0.7\n";
  ScorerConfig c = ScorerConfig::parse(text, "inline");
  CHECK(c.version == 2);
  CHECK(c.caps.per_node == 5);
  CHECK(c.epsilon == doctest::Approx(1e-4));
  REQUIRE(c.weights_for("transpose") != nullptr);
  CHECK(c.weights_for("transpose")->bias == doctest::Approx(-1.5));
  CHECK(c.weights_for("transpose")->weights.at("col_row_ratio") == doctest::Approx(0.25));
  // parse() starts from an empty operator table: unlisted operators are gone.
  CHECK(c.weights_for("noop") == nullptr);
  CHECK(c.overrides.at("00000000deadbeef noop()") == doctest::Approx(0.8));
  // Override step keys may contain spaces; framing is first/last whitespace.
  CHECK(c.overrides.at(
            "00000000deadbeef split(column=a b,delimiter=-,select_pos=0,output_column=)") ==
        doctest::Approx(0.7));
}

TEST_CASE("config parser reports origin and line on malformed input") {
  auto expect_message = [](const std::string &text, const std::string &needle) {
    try {
      ScorerConfig::parse(text, "bad.conf");
      FAIL("expected an error for: " << text);
    } catch (const Error &e) {
      CHECK(e.status() == Status::invalid_argument);
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  expect_message("version = 1\njunk line\n", "bad.conf:2");
  expect_message("mystery = 1\n", "unknown top-level key");
  expect_message("[caps]\nwhatever = 3\n", "unknown caps key");
  expect_message("[caps]\nepsilon = 0.9\n", "epsilon must lie in (0, 0.5)");
  expect_message("[transpose]\nbias = abc\n", "expected a number");
  expect_message("[overrides]\nonlyonefield\n", "malformed override line");
}

TEST_CASE("load_file rejects missing config files") {
  try {
    ScorerConfig::load_file("/nonexistent/autoprep.conf");
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::bad_input_file);
  }
}

TEST_CASE("overrides pin a step probability by fingerprint and canonical key") {
  Fixture fx;
  TransformStep step{TransposeParams{}};
  std::string key = table_fingerprint_hex(fx.country) + " " + step.canonical_key();
  fx.config.overrides[key] = 0.123;
  std::vector<const Table *> others{&fx.fertility, &fx.date, &fx.economics};
  CHECK(score_transform(step, fx.country, others, fx.ctx, fx.config) ==
        doctest::Approx(0.123));
  // Out-of-range overrides are clamped, not trusted.
  fx.config.overrides[key] = 7.0;
  CHECK(score_transform(step, fx.country, others, fx.ctx, fx.config) ==
        doctest::Approx(1.0 - fx.config.epsilon));
  // Other tables are unaffected by the pin.
  CHECK(score_transform(step, fx.date, {&fx.country}, fx.ctx, fx.config) !=
        doctest::Approx(0.123));
}

TEST_CASE("reshape features of the country table match the worked values") {
  Fixture fx;
  std::vector<const Table *> others{&fx.fertility, &fx.date, &fx.economics};
  FeatureVector f = extract_reshape_features(fx.country, others, fx.ctx);
  CHECK(f.at("col_row_ratio") == doctest::Approx(1.667).epsilon(0.01));
  CHECK(f.at("header_overlap") == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(f.at("headers_value_overlap") == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(std::abs(f.at("value_domain_overlap") - 0.26) < 0.01);
}

TEST_CASE("noop score is the constant prior") {
  Fixture fx;
  TransformStep noop{NoOpParams{}};
  CHECK(score_transform(noop, fx.date, {&fx.country}, fx.ctx, fx.config) ==
        doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("unpivot on fertility scores well above the noop prior") {
  Fixture fx;
  TransformStep unpivot{UnpivotParams{"2010", "2012"}};
  std::vector<const Table *> others{&fx.date, &fx.economics, &fx.country};
  double p = score_transform(unpivot, fx.fertility, others, fx.ctx, fx.config);
  CHECK(p > 0.7);
}

TEST_CASE("the year-extracting substring scores as a near-certain step") {
  Fixture fx;
  TransformStep sub{SubstringParams{"Line-ID", 6, 4, ""}};
  std::vector<const Table *> others{&fx.date};
  FeatureVector f = extract_string_features(fx.economics, sub, others, fx.ctx, fx.config);
  // Every sampled output lands in date.Year and covers it completely.
  CHECK(f.at("fk_side_join_pct") == doctest::Approx(1.0));
  CHECK(f.at("key_side_join_pct") == doctest::Approx(1.0));
  CHECK(f.at("window_fk_join_pct") == doctest::Approx(1.0));
  CHECK(f.at("window_key_join_pct") == doctest::Approx(1.0));
  CHECK(f.at("target_numeric_cols") == doctest::Approx(2.0));
  CHECK(f.at("target_datetime_cols") == doctest::Approx(0.0));
  double p = score_transform(sub, fx.economics, others, fx.ctx, fx.config);
  // bias -3 + 3.2 + 2 + 2 + 1 + 0.15*2 = 5.5; sigmoid(5.5)
  CHECK(p == doctest::Approx(logistic(5.5)).epsilon(1e-12));
}

TEST_CASE("best_window_alignment finds the smallest qualifying window") {
  std::set<std::string> years{"2010", "2011", "2012"};
  WindowAlignment w =
      best_window_alignment({"POL-CY2010", "CHL-CY2011", "TUR-CY2012"}, years);
  REQUIRE(w.found);
  CHECK(w.start == 6);
  CHECK(w.length == 4);
  CHECK(w.fk_rate == doctest::Approx(1.0));
  CHECK(w.key_rate == doctest::Approx(1.0));

  WindowAlignment partial = best_window_alignment({"ab2010", "cd2011", "zzzzzz"}, years);
  REQUIRE(partial.found);
  CHECK(partial.start == 2);
  CHECK(partial.fk_rate == doctest::Approx(2.0 / 3.0));
  CHECK(partial.key_rate == doctest::Approx(2.0 / 3.0));

  CHECK_FALSE(best_window_alignment({}, years).found);
  CHECK_FALSE(best_window_alignment({"abc"}, {}).found);
}

TEST_CASE("string_step_outputs honors the row sample cap and skips blanks") {
  Table t = parse_csv("c,d\nx-1,q\n,q\ny-2,q\nz-3,q\n", "caps");
  TransformStep split{SplitParams{"c", "-", 0, ""}};
  auto all = string_step_outputs(t, split, 64);
  // The blank row normalizes to empty and is skipped.
  CHECK(all == std::vector<std::string>{"x", "y", "z"});
  auto limited = string_step_outputs(t, split, 2);
  CHECK(limited == std::vector<std::string>{"x"});
  TransformStep missing{SplitParams{"nope", "-", 0, ""}};
  CHECK(string_step_outputs(t, missing, 64).empty());
}

TEST_CASE("column join scoring: perfect keys, disjoint domains, kind walls") {
  ScorerConfig config = ScorerConfig::defaults();
  Table key = parse_csv("k\na\nb\nc\n", "key");
  Table fk = parse_csv("f\na\na\nb\nc\n", "fk");
  Table other = parse_csv("o\nx\ny\nz\n", "other");
  Table dates = parse_csv("d\n2010-01-01\n2010-01-02\n2010-01-03\n", "dates");
  Table nums = parse_csv("n\n1\n2\n3\n", "nums");
  Table blank = parse_csv("b,c\n,x\n,y\n", "blank");
  ProjectContext ctx({key, fk, other, dates, nums, blank}, "p");

  // Perfect containment both ways, perfect keyness: near-certain join.
  double forward = score_column_join(key, 0, fk, 0, ctx, config);
  CHECK(forward > 0.99);
  // bias -7.2 + containment 6 + jaccard 3 + pk_fk 4 + kind 0.5 + card 0.8*(3/4)
  CHECK(forward == doctest::Approx(logistic(-7.2 + 6.0 + 3.0 + 4.0 + 0.5 + 0.8 * 0.75))
                       .epsilon(1e-12));
  // Swapping key and FK roles changes keyness and cardinality: asymmetric.
  double backward = score_column_join(fk, 0, key, 0, ctx, config);
  CHECK(backward < forward);

  // Disjoint string domains stay below the join boundary.
  CHECK(score_column_join(key, 0, other, 0, ctx, config) < 0.5);
  // Numeric vs datetime cannot join at all.
  CHECK(score_column_join(nums, 0, dates, 0, ctx, config) == 0.0);
  CHECK(score_column_join(dates, 0, nums, 0, ctx, config) == 0.0);
  // Empty domains cannot join.
  CHECK(score_column_join(blank, 0, key, 0, ctx, config) == 0.0);
}

TEST_CASE("table_join_score picks the best column pair or a placeholder") {
  ScorerConfig config = ScorerConfig::defaults();
  Table a = parse_csv("id,junk\na,9\nb,8\nc,7\n", "a");
  Table b = parse_csv("noise,ref\nq,a\nr,b\ns,c\n", "b");
  Table c = parse_csv("zzz\nqqq\nwww\n", "c");
  ProjectContext ctx({a, b, c}, "p");

  JoinScore best = table_join_score(a, b, ctx, config);
  CHECK_FALSE(best.placeholder);
  CHECK(best.left_column == "id");
  CHECK(best.right_column == "ref");
  CHECK(best.normalized == doctest::Approx(best.raw));
  CHECK(best.raw > 0.5);

  JoinScore none = table_join_score(a, c, ctx, config);
  CHECK(none.placeholder);
  CHECK(none.normalized == doctest::Approx(0.5));
  CHECK_FALSE(none.best_pair.has_value());
}

TEST_CASE("fixture join scores match the independently derived values") {
  Fixture fx;
  Table country_t = apply_transpose(fx.country);
  Table fertility_u = apply_unpivot(fx.fertility, "2010", "2012");

  JoinScore code = table_join_score(country_t, fx.economics, fx.ctx, fx.config);
  CHECK_FALSE(code.placeholder);
  CHECK(code.left_column == "Code");
  CHECK(code.right_column == "Code");
  CHECK(code.normalized == doctest::Approx(0.9983226961082673).epsilon(1e-12));

  JoinScore name = table_join_score(fertility_u, country_t, fx.ctx, fx.config);
  CHECK(name.left_column == "Country");
  CHECK(name.right_column == "Country");
  CHECK(name.normalized == doctest::Approx(0.9985954975350299).epsilon(1e-12));

  JoinScore year = table_join_score(fx.date, fertility_u, fx.ctx, fx.config);
  CHECK(year.left_column == "Year");
  CHECK(year.right_column == "variable");
  CHECK(year.normalized == doctest::Approx(0.998498817743263).epsilon(1e-12));

  // The raw fixture tables are not joinable: preparation is what unlocks them.
  CHECK(table_join_score(fx.fertility, fx.date, fx.ctx, fx.config).placeholder);
}

TEST_CASE("a config without weights falls back to the indifferent prior") {
  ScorerConfig bare = ScorerConfig::parse("version = 1\n", "bare");
  Table key = parse_csv("k\na\nb\n", "key");
  Table fk = parse_csv("f\na\nb\n", "fk");
  ProjectContext ctx({key, fk}, "p");
  CHECK(score_column_join(key, 0, fk, 0, ctx, bare) == doctest::Approx(0.5));
  TransformStep noop{NoOpParams{}};
  CHECK(score_transform(noop, key, {&fk}, ctx, bare) == doctest::Approx(0.5));
}
