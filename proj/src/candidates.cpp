#include "ops.hpp"
#include "scoring.hpp"

#include <algorithm>
#include <set>

namespace autoprep {
namespace {

const char *const kProbeDelimiters[] = {",", "|", ".", "-", "_", "/",
                                        ":", ";", " ", "#", "@", "&"};
constexpr int kMaxSelectPos = 4; // split segments probed: select_pos 0..3
constexpr double kLift = 1e-9;   // a probe must strictly beat the raw column

// Kind grouping for unpivot runs: a run must be homogeneous, and mixed
// integer/float year-style columns should still count as one numeric run.
int run_group(ColumnKind k) {
  switch (k) {
  case ColumnKind::integer:
  case ColumnKind::floating:
    return 0;
  case ColumnKind::datetime:
    return 1;
  case ColumnKind::string:
    return 2;
  case ColumnKind::empty:
    return -1;
  }
  return -1;
}

void add_unpivot_candidates(const Table &table, std::vector<TransformStep> &steps) {
  size_t cols = table.column_count();
  size_t i = 0;
  while (i < cols) {
    int group = run_group(table.column_kinds[i]);
    size_t j = i;
    while (j + 1 < cols && run_group(table.column_kinds[j + 1]) == group)
      ++j;
    if (group >= 0 && j > i) {
      // The maximal run [i..j] plus every shorter run with the same end:
      // trailing homogeneous columns are the usual unpivot target while a
      // leading run member often turns out to be an id column.
      for (size_t k = i; k + 1 <= j; ++k)
        steps.push_back(
            {UnpivotParams{table.column_names[k], table.column_names[j]}});
    }
    i = j + 1;
  }
}

void add_pivot_candidates(const Table &table, const ProjectContext &ctx,
                          const ScorerConfig &config, std::vector<TransformStep> &steps) {
  auto profile = ctx.profile(table);
  for (size_t p = 0; p < table.column_count(); ++p) {
    if (table.column_kinds[p] != ColumnKind::string)
      continue;
    size_t distinct = profile->domains[p].size();
    if (distinct < 2 || distinct > static_cast<size_t>(config.caps.pivot_cardinality_cap))
      continue;
    for (size_t v = 0; v < table.column_count(); ++v)
      if (v != p)
        steps.push_back({PivotParams{table.column_names[p], table.column_names[v]}});
  }
}

std::vector<std::string> sample_raw_column(const Table &table, size_t col, int sample) {
  std::vector<std::string> out;
  for (const auto &row : table.rows) {
    if (out.size() >= static_cast<size_t>(std::max(1, sample)))
      break;
    if (!normalize_value(row[col]).empty())
      out.push_back(row[col]);
  }
  return out;
}

double direct_rate(const std::vector<std::string> &samples, const std::set<std::string> &domain) {
  if (samples.empty())
    return 0.0;
  size_t hits = 0;
  for (const auto &s : samples)
    hits += domain.count(normalize_value(s));
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

// Segment select_pos of each sample under a literal delimiter; values that
// normalize to empty are skipped, mirroring string_step_outputs.
std::vector<std::string> split_segments(const std::vector<std::string> &samples,
                                        const std::string &delimiter, int select_pos) {
  std::vector<std::string> out;
  for (const auto &cell : samples) {
    size_t start = 0;
    int seg = 0;
    std::string value;
    while (true) {
      size_t pos = cell.find(delimiter, start);
      if (seg == select_pos) {
        value = cell.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        break;
      }
      if (pos == std::string::npos)
        break;
      start = pos + delimiter.size();
      ++seg;
    }
    if (!normalize_value(value).empty())
      out.push_back(std::move(value));
  }
  return out;
}

// Join-directed probes: split / substring / concatenate candidates are kept
// only when the derived column aligns with some other table's column domain
// strictly better than every column the table already has — a derived
// column must unlock a join, not duplicate one.
void add_string_candidates(const Table &table, const std::vector<const Table *> &others,
                           const ProjectContext &ctx, const ScorerConfig &config,
                           std::vector<TransformStep> &steps) {
  if (others.empty())
    return;
  std::vector<const std::set<std::string> *> domains;
  for (const Table *other : others)
    for (const auto &domain : ctx.profile(*other)->domains)
      if (!domain.empty())
        domains.push_back(&domain);
  if (domains.empty())
    return;

  double threshold = config.caps.containment_threshold;
  int sample = config.caps.probe_row_sample;

  std::vector<std::vector<std::string>> column_samples(table.column_count());
  for (size_t c = 0; c < table.column_count(); ++c)
    column_samples[c] = sample_raw_column(table, c, sample);

  // Best direct alignment the table can already reach, per target domain.
  std::vector<double> table_direct(domains.size(), 0.0);
  for (size_t d = 0; d < domains.size(); ++d)
    for (size_t c = 0; c < table.column_count(); ++c)
      table_direct[d] = std::max(table_direct[d], direct_rate(column_samples[c], *domains[d]));

  std::vector<size_t> probe_cols;
  for (size_t c = 0; c < table.column_count(); ++c)
    if (table.column_kinds[c] == ColumnKind::string ||
        table.column_kinds[c] == ColumnKind::datetime)
      probe_cols.push_back(c);

  for (size_t c : probe_cols) {
    const auto &raw = column_samples[c];
    if (raw.empty())
      continue;
    bool has_delim[std::size(kProbeDelimiters)];
    for (size_t d = 0; d < std::size(kProbeDelimiters); ++d) {
      has_delim[d] = false;
      for (const auto &cell : raw)
        if (cell.find(kProbeDelimiters[d]) != std::string::npos) {
          has_delim[d] = true;
          break;
        }
    }
    for (size_t di = 0; di < domains.size(); ++di) {
      const auto *domain = domains[di];
      double best_direct = table_direct[di];
      WindowAlignment raw_window = best_window_alignment(raw, *domain);

      // Substring: adopt the best aligning window when it beats joining any
      // existing column as-is.
      if (raw_window.found && raw_window.fk_rate >= threshold &&
          raw_window.fk_rate > best_direct + kLift) {
        steps.push_back({SubstringParams{
            table.column_names[c], raw_window.start, raw_window.length,
            derived_column_name(table.column_names, table.column_names[c], "substring")}});
      }

      // Split: keep a segment that aligns directly, or one whose windows
      // align (the follow-up substring then lands the join).
      for (size_t d = 0; d < std::size(kProbeDelimiters); ++d) {
        if (!has_delim[d])
          continue;
        for (int pos = 0; pos < kMaxSelectPos; ++pos) {
          auto segments = split_segments(raw, kProbeDelimiters[d], pos);
          if (segments.empty())
            continue;
          bool keep = false;
          double seg_direct = direct_rate(segments, *domain);
          if (seg_direct >= threshold && seg_direct > best_direct + kLift) {
            keep = true;
          } else {
            // A stepping stone: the segment itself does not join, but a
            // fixed window of it does, so a follow-up substring lands it.
            WindowAlignment w = best_window_alignment(segments, *domain);
            keep = w.found && w.fk_rate >= threshold && w.fk_rate > best_direct + kLift;
          }
          if (keep)
            steps.push_back({SplitParams{
                table.column_names[c], kProbeDelimiters[d], pos,
                derived_column_name(table.column_names, table.column_names[c], "split")}});
        }
      }
    }
  }

  // Concatenate: ordered pairs of string columns against each domain.
  std::vector<size_t> string_cols;
  for (size_t c = 0; c < table.column_count(); ++c)
    if (table.column_kinds[c] == ColumnKind::string)
      string_cols.push_back(c);
  size_t limit = std::min<size_t>(table.row_count(), static_cast<size_t>(std::max(1, sample)));
  for (size_t a : string_cols) {
    for (size_t b : string_cols) {
      if (a == b)
        continue;
      for (size_t d = 0; d <= std::size(kProbeDelimiters); ++d) {
        std::string delim = d < std::size(kProbeDelimiters) ? kProbeDelimiters[d] : "";
        std::vector<std::string> outs;
        for (size_t r = 0; r < limit; ++r) {
          std::string v = table.cell(r, a) + delim + table.cell(r, b);
          if (!normalize_value(v).empty())
            outs.push_back(std::move(v));
        }
        if (outs.empty())
          continue;
        for (size_t di = 0; di < domains.size(); ++di) {
          double rate = direct_rate(outs, *domains[di]);
          if (rate >= threshold && rate > table_direct[di] + kLift) {
            std::vector<std::string> columns{table.column_names[a], table.column_names[b]};
            steps.push_back({ConcatenateParams{
                columns, delim,
                derived_column_name(table.column_names,
                                    table.column_names[a] + "+" + table.column_names[b],
                                    "concat")}});
            break; // one candidate per (pair, delimiter) is enough
          }
        }
      }
    }
  }
}

} // namespace

std::vector<ScoredStep> enumerate_scored_candidates(const Table &table,
                                                    const std::vector<const Table *> &others,
                                                    const ProjectContext &ctx,
                                                    const ScorerConfig &config) {
  std::vector<TransformStep> steps;
  steps.push_back({NoOpParams{}});
  if (table.column_count() >= 2) {
    add_unpivot_candidates(table, steps);
    add_pivot_candidates(table, ctx, config, steps);
    steps.push_back({TransposeParams{}});
    add_string_candidates(table, others, ctx, config, steps);
  }

  std::vector<ScoredStep> scored;
  std::set<std::string> seen;
  for (const auto &step : steps) {
    if (!seen.insert(step.canonical_key()).second)
      continue;
    scored.push_back({step, score_transform(step, table, others, ctx, config)});
  }
  // NoOp stays first; the rest rank by probability, ties by canonical key.
  std::sort(scored.begin() + 1, scored.end(), [](const ScoredStep &a, const ScoredStep &b) {
    if (a.probability != b.probability)
      return a.probability > b.probability;
    return a.step.canonical_key() < b.step.canonical_key();
  });
  auto cap = static_cast<size_t>(std::max(1, config.caps.per_node));
  if (scored.size() > cap)
    scored.resize(cap);
  return scored;
}

std::vector<TransformStep> enumerate_candidates(const Table &table,
                                                const std::vector<const Table *> &others,
                                                const ProjectContext &ctx,
                                                const ScorerConfig &config) {
  std::vector<TransformStep> out;
  for (auto &s : enumerate_scored_candidates(table, others, ctx, config))
    out.push_back(std::move(s.step));
  return out;
}

} // namespace autoprep
