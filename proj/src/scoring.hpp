#pragma once

// Transformation and join scoring. Both scorers are transparent logistic
// models over interpretable features: probability = clamp(sigmoid(w.f + b)).
// A per-(table-fingerprint, step) override table lets fixtures pin exact
// edge probabilities regardless of features.

#include "ops.hpp"
#include "tables.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace autoprep {

using FeatureVector = std::map<std::string, double>;

// Joinability boundary: raw pair scores at or below this value normalize to
// placeholder edges (strict "above 0.5" cutoff for real joins).
inline constexpr double kJoinBoundary = 0.5;

struct OperatorWeights {
  double bias = 0.0;
  std::map<std::string, double> weights; // feature name -> weight
};

// Candidate-enumeration caps and probe thresholds.
struct CandidateCaps {
  int per_node = 8;                     // candidates per tree node, NoOp included
  int pivot_cardinality_cap = 12;       // max distinct values of a pivot column
  double containment_threshold = 0.6;   // min containment for string candidates
  int probe_row_sample = 64;            // rows sampled when probing string ops
  long long leaf_pair_budget = 1000000; // max cross-tree leaf pairs to join-score
};

struct ScorerConfig {
  int version = 1;
  double epsilon = 1e-6; // probability clamp: [epsilon, 1 - epsilon]
  CandidateCaps caps;
  int precise_max_iterations = 5;
  std::map<std::string, OperatorWeights> operators; // op name or "join"
  // Pinned probabilities: key is "<fingerprint-hex> <canonical step key>".
  std::map<std::string, double> overrides;

  double clamp(double p) const;
  const OperatorWeights *weights_for(const std::string &op) const;
  std::optional<double> override_for(const Table &table, const TransformStep &step) const;

  // Hand-chosen default weights; the shipped config file mirrors these.
  static ScorerConfig defaults();
  // Parse the documented sectioned text format.
  static ScorerConfig load_file(const std::filesystem::path &path);
  static ScorerConfig parse(const std::string &text, const std::string &origin);
};

double logistic(double z);

// Table-level reshape features of `table` against the pool of visible other
// tables: column/row ratio, header overlap, value-domain overlap,
// headers-value overlap, and header kind counts. Overlaps are containment
// ratios normalized by this table's own set sizes.
FeatureVector extract_reshape_features(const Table &table, const std::vector<const Table *> &others,
                                       const ProjectContext &ctx);

// Best fixed character window aligning raw sample values with a normalized
// value domain: the window maximizing the fraction of samples whose
// normalized substr(start, length) lands in the domain (ties: higher domain
// coverage, then shorter window, then smaller start). Candidate window
// lengths come from the domain's own value lengths. Used to propose
// substring candidates and to credit split steps that enable a follow-up
// substring join.
struct WindowAlignment {
  bool found = false;
  int start = 0;
  int length = 0;
  double fk_rate = 0.0;  // fraction of samples landing in the domain
  double key_rate = 0.0; // fraction of the domain covered by the samples
};
WindowAlignment best_window_alignment(const std::vector<std::string> &samples,
                                      const std::set<std::string> &domain);

// Join-directed features of a string step: how well the computed column
// matches the best column of any visible table, both directly (FK-side hit
// rate, key-side coverage) and through the best substring window
// (window_* rates), plus kind counts of that target table.
FeatureVector extract_string_features(const Table &table, const TransformStep &step,
                                      const std::vector<const Table *> &others,
                                      const ProjectContext &ctx, const ScorerConfig &config);

// Raw step outputs on up to `sample` rows, skipping values that normalize to
// empty; empty when the step is not a string step or references a missing
// column. Shared by the scorer and candidate probing.
std::vector<std::string> string_step_outputs(const Table &table, const TransformStep &step,
                                             int sample);

// Probability that `step` is the intended next transformation of `table`.
// Applies overrides first, then the per-operator logistic model. Always in
// [epsilon, 1 - epsilon].
double score_transform(const TransformStep &step, const Table &table,
                       const std::vector<const Table *> &others, const ProjectContext &ctx,
                       const ScorerConfig &config);

// Directional column-join score with `key` as the proposed key side.
// Returns 0 for empty columns and incompatible kinds (numeric vs datetime);
// real scores are clamped to [epsilon, 1 - epsilon].
double score_column_join(const Table &key_table, size_t key_col, const Table &fk_table,
                         size_t fk_col, const ProjectContext &ctx, const ScorerConfig &config);

struct JoinScore {
  double raw = 0.0;        // best pair score over both orientations
  double normalized = 0.5; // max(raw, 0.5); the graph edge weight
  bool placeholder = true; // raw <= 0.5: not joinable, edge at exactly 0.5
  // Best (left column, right column) indices and names; absent on placeholders.
  std::optional<std::pair<size_t, size_t>> best_pair;
  std::string left_column;
  std::string right_column;
};

// Best join score between two tables over all column pairs and both
// orientations; ties broken by lexicographic column index order.
JoinScore table_join_score(const Table &a, const Table &b, const ProjectContext &ctx,
                           const ScorerConfig &config);

} // namespace autoprep
