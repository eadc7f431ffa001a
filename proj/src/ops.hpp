#pragma once

// Transformation DSL: parameter records for the seven operators,
// deterministic application of each operator to a table, canonical step
// serialization, and candidate enumeration for the search graph.

#include "tables.hpp"

#include <string>
#include <variant>
#include <vector>

namespace autoprep {

// Collapse a contiguous column range into (variable, value) pairs.
struct UnpivotParams {
  std::string start_column;
  std::string end_column;
};

// Spread a low-cardinality column's values into new columns.
struct PivotParams {
  std::string pivot_column;
  std::string value_column;
};

struct TransposeParams {};

// Append the select_pos'th segment of a delimiter split as a new column.
struct SplitParams {
  std::string column;
  std::string delimiter;
  int select_pos = 0; // 0-based, left to right
  std::string output_column;
};

// Append the concatenation of two or more columns as a new column.
struct ConcatenateParams {
  std::vector<std::string> columns;
  std::string delimiter;
  std::string output_column;
};

// Append a fixed character window of a column as a new column.
struct SubstringParams {
  std::string column;
  int start = 0;  // 0-based
  int length = 0; // window [start, start+length), clipped to the cell
  std::string output_column;
};

struct NoOpParams {};

struct TransformStep {
  std::variant<NoOpParams, UnpivotParams, PivotParams, TransposeParams, SplitParams,
               ConcatenateParams, SubstringParams>
      params;

  const char *op_name() const;
  bool is_noop() const { return std::holds_alternative<NoOpParams>(params); }

  // Stable textual form, e.g. "unpivot(start_column=2010,end_column=2012)".
  // Used for override lookup, debug output, and step equality.
  std::string canonical_key() const;
};

bool operator==(const TransformStep &a, const TransformStep &b);

// Canonical key with generated output-column names removed; evaluation
// matches steps on this form (parameters, not output names).
std::string eval_key(const TransformStep &step);

// First free name among base, base_2, base_3, ... given taken names.
std::string unique_column_name(const std::vector<std::string> &taken, const std::string &base);

// Default name for a derived column: "<source>_<op>" plus suffix on collision.
std::string derived_column_name(const std::vector<std::string> &taken, const std::string &source,
                                const char *op);

// Operator application. Each returns a fresh table with inferred column
// kinds and throws Error(apply_failed) when preconditions are violated.
Table apply_unpivot(const Table &table, const std::string &start_column,
                    const std::string &end_column, const std::string &variable_name = "variable",
                    const std::string &value_name = "value");
Table apply_pivot(const Table &table, const std::string &pivot_column,
                  const std::string &value_column);
Table apply_transpose(const Table &table);
Table apply_split(const Table &table, const SplitParams &params);
Table apply_concatenate(const Table &table, const ConcatenateParams &params);
Table apply_substring(const Table &table, const SubstringParams &params);
Table apply_step(const Table &table, const TransformStep &step);

struct ScorerConfig; // scoring.hpp

// A candidate step with the transformation probability it was ranked by.
struct ScoredStep {
  TransformStep step;
  double probability = 0.0;
};

// Candidate steps for one table, ranked by the transformation scorer and
// truncated to the per-node cap; NoOp is always present and listed first.
// `others` are the tables visible as join targets while probing
// (string-transform candidates are join-directed).
std::vector<ScoredStep> enumerate_scored_candidates(const Table &table,
                                                    const std::vector<const Table *> &others,
                                                    const ProjectContext &ctx,
                                                    const ScorerConfig &config);

std::vector<TransformStep> enumerate_candidates(const Table &table,
                                                const std::vector<const Table *> &others,
                                                const ProjectContext &ctx,
                                                const ScorerConfig &config);

} // namespace autoprep
