#include "scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace autoprep {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double ScorerConfig::clamp(double p) const {
  return std::min(std::max(p, epsilon), 1.0 - epsilon);
}

const OperatorWeights *ScorerConfig::weights_for(const std::string &op) const {
  auto it = operators.find(op);
  return it == operators.end() ? nullptr : &it->second;
}

std::optional<double> ScorerConfig::override_for(const Table &table,
                                                 const TransformStep &step) const {
  if (overrides.empty())
    return std::nullopt;
  auto it = overrides.find(table_fingerprint_hex(table) + " " + step.canonical_key());
  if (it == overrides.end())
    return std::nullopt;
  return clamp(it->second);
}

ScorerConfig ScorerConfig::defaults() {
  ScorerConfig c;
  // NoOp: constant moderate prior so doing nothing wins absent evidence.
  c.operators["noop"] = {0.405465108108, {}}; // sigmoid -> 0.6
  c.operators["unpivot"] = {-2.2,
                            {{"headers_value_overlap", 2.4},
                             {"header_overlap", -1.0},
                             {"unpivot_range_numeric_headers", 0.5},
                             {"unpivot_range_datetime_headers", 0.5},
                             {"unpivot_range_float_headers", 0.25},
                             {"unpivot_range_sparsity", 1.0}}};
  c.operators["transpose"] = {-2.6,
                              {{"col_row_ratio", 0.35},
                               {"headers_value_overlap", 3.0},
                               {"value_domain_overlap", -1.5},
                               {"header_overlap", -1.0}}};
  c.operators["pivot"] = {-2.8,
                          {{"pivot_distinct_ratio", -2.0},
                           {"pivot_key_dup_frac", 2.0},
                           {"pivot_value_numeric", 1.2}}};
  OperatorWeights string_weights = {-3.0,
                                    {{"fk_side_join_pct", 3.2},
                                     {"key_side_join_pct", 2.0},
                                     {"window_fk_join_pct", 2.0},
                                     {"window_key_join_pct", 1.0},
                                     {"target_numeric_cols", 0.15},
                                     {"target_datetime_cols", 0.15}}};
  c.operators["split"] = string_weights;
  c.operators["substring"] = string_weights;
  c.operators["concatenate"] = string_weights;
  c.operators["join"] = {-7.2,
                         {{"containment", 6.0},
                          {"jaccard", 3.0},
                          {"pk_fk", 4.0},
                          {"kind_match", 0.5},
                          {"cardinality_ratio", 0.8}}};
  return c;
}

namespace {

std::string strip(const std::string &s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string &value, const std::string &origin, int line_no) {
  char *end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw Error(Status::invalid_argument, origin + ":" + std::to_string(line_no) +
                                              ": expected a number, got '" + value + "'");
  return v;
}

} // namespace

ScorerConfig ScorerConfig::parse(const std::string &text, const std::string &origin) {
  ScorerConfig config;
  config.operators.clear();
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = strip(line);
    if (t.empty() || t[0] == '#' || t[0] == ';')
      continue;
    if (t.front() == '[' && t.back() == ']') {
      section = strip(t.substr(1, t.size() - 2));
      continue;
    }
    if (section == "overrides") {
      // "<fingerprint> <step key> <probability>"; the step key may itself
      // contain '=' so overrides use whitespace framing instead.
      size_t first = t.find_first_of(" \t");
      size_t last = t.find_last_of(" \t");
      if (first == std::string::npos || last <= first)
        throw Error(Status::invalid_argument,
                    origin + ":" + std::to_string(line_no) + ": malformed override line");
      std::string fp = strip(t.substr(0, first));
      std::string step = strip(t.substr(first + 1, last - first - 1));
      double p = parse_number(strip(t.substr(last + 1)), origin, line_no);
      config.overrides[fp + " " + step] = p;
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(Status::invalid_argument,
                  origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = strip(t.substr(0, eq));
    std::string value = strip(t.substr(eq + 1));
    if (section.empty()) {
      if (key == "version")
        config.version = static_cast<int>(parse_number(value, origin, line_no));
      else
        throw Error(Status::invalid_argument, origin + ":" + std::to_string(line_no) +
                                                  ": unknown top-level key '" + key + "'");
    } else if (section == "caps") {
      if (key == "epsilon") {
        config.epsilon = parse_number(value, origin, line_no);
        if (!(config.epsilon > 0.0 && config.epsilon < 0.5))
          throw Error(Status::invalid_argument,
                      origin + ": epsilon must lie in (0, 0.5), got " + value);
      } else if (key == "candidates_per_node")
        config.caps.per_node = static_cast<int>(parse_number(value, origin, line_no));
      else if (key == "pivot_cardinality_cap")
        config.caps.pivot_cardinality_cap = static_cast<int>(parse_number(value, origin, line_no));
      else if (key == "containment_threshold")
        config.caps.containment_threshold = parse_number(value, origin, line_no);
      else if (key == "probe_row_sample")
        config.caps.probe_row_sample = static_cast<int>(parse_number(value, origin, line_no));
      else if (key == "leaf_pair_budget")
        config.caps.leaf_pair_budget =
            static_cast<long long>(parse_number(value, origin, line_no));
      else if (key == "precise_max_iterations")
        config.precise_max_iterations = static_cast<int>(parse_number(value, origin, line_no));
      else
        throw Error(Status::invalid_argument, origin + ":" + std::to_string(line_no) +
                                                  ": unknown caps key '" + key + "'");
    } else {
      OperatorWeights &row = config.operators[section];
      if (key == "bias")
        row.bias = parse_number(value, origin, line_no);
      else
        row.weights[key] = parse_number(value, origin, line_no);
    }
  }
  return config;
}

ScorerConfig ScorerConfig::load_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Status::bad_input_file, "cannot read scorer config: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.filename().string());
}

namespace {

double containment(const std::set<std::string> &own, const std::set<std::string> &other) {
  if (own.empty())
    return 0.0;
  size_t hits = 0;
  for (const auto &v : own)
    hits += other.count(v);
  return static_cast<double>(hits) / static_cast<double>(own.size());
}

size_t intersection_size(const std::set<std::string> &a, const std::set<std::string> &b) {
  const auto &small = a.size() <= b.size() ? a : b;
  const auto &large = a.size() <= b.size() ? b : a;
  size_t hits = 0;
  for (const auto &v : small)
    hits += large.count(v);
  return hits;
}

bool numeric_kind(ColumnKind k) { return k == ColumnKind::integer || k == ColumnKind::floating; }

double apply_weights(const OperatorWeights &row, const FeatureVector &features) {
  double z = row.bias;
  for (const auto &[name, w] : row.weights) {
    auto it = features.find(name);
    if (it != features.end())
      z += w * it->second;
  }
  return z;
}

} // namespace

FeatureVector extract_reshape_features(const Table &table, const std::vector<const Table *> &others,
                                       const ProjectContext &ctx) {
  auto self = ctx.profile(table);
  FeatureVector f;
  f["col_row_ratio"] = static_cast<double>(table.column_count()) /
                       static_cast<double>(std::max<size_t>(1, table.row_count()));
  f["numeric_header_count"] = static_cast<double>(self->numeric_headers);
  f["float_header_count"] = static_cast<double>(self->float_headers);
  f["datetime_header_count"] = static_cast<double>(self->datetime_headers);

  double header_overlap = 0.0;
  double headers_value_overlap = 0.0;
  std::vector<double> col_overlap(table.column_count(), 0.0);
  for (const Table *other : others) {
    auto op = ctx.profile(*other);
    header_overlap = std::max(header_overlap, containment(self->header_set, op->header_set));
    for (const auto &domain : op->domains) {
      headers_value_overlap =
          std::max(headers_value_overlap, containment(self->header_set, domain));
      for (size_t c = 0; c < table.column_count(); ++c)
        col_overlap[c] = std::max(col_overlap[c], containment(self->domains[c], domain));
    }
  }
  f["header_overlap"] = header_overlap;
  f["headers_value_overlap"] = headers_value_overlap;
  double mean = 0.0;
  for (double v : col_overlap)
    mean += v;
  f["value_domain_overlap"] = table.column_count() ? mean / table.column_count() : 0.0;
  return f;
}

std::vector<std::string> string_step_outputs(const Table &table, const TransformStep &step,
                                             int sample) {
  std::vector<std::string> out;
  size_t limit = std::min<size_t>(table.row_count(), static_cast<size_t>(std::max(1, sample)));
  auto emit = [&out](std::string v) {
    if (!normalize_value(v).empty())
      out.push_back(std::move(v));
  };
  if (const auto *split = std::get_if<SplitParams>(&step.params)) {
    auto idx = table.column_index(split->column);
    if (!idx)
      return out;
    for (size_t r = 0; r < limit; ++r) {
      const std::string &cell = table.cell(r, *idx);
      // Same segment selection as apply_split.
      size_t start = 0;
      int seg = 0;
      std::string value;
      while (true) {
        size_t pos = cell.find(split->delimiter, start);
        if (seg == split->select_pos) {
          value = cell.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
          break;
        }
        if (pos == std::string::npos)
          break;
        start = pos + split->delimiter.size();
        ++seg;
      }
      emit(value);
    }
  } else if (const auto *sub = std::get_if<SubstringParams>(&step.params)) {
    auto idx = table.column_index(sub->column);
    if (!idx)
      return out;
    for (size_t r = 0; r < limit; ++r) {
      const std::string &cell = table.cell(r, *idx);
      size_t start = static_cast<size_t>(std::max(0, sub->start));
      if (start < cell.size())
        emit(cell.substr(start, static_cast<size_t>(std::max(1, sub->length))));
    }
  } else if (const auto *cat = std::get_if<ConcatenateParams>(&step.params)) {
    std::vector<size_t> cols;
    for (const auto &name : cat->columns) {
      auto idx = table.column_index(name);
      if (!idx)
        return out;
      cols.push_back(*idx);
    }
    for (size_t r = 0; r < limit; ++r) {
      std::string v;
      for (size_t i = 0; i < cols.size(); ++i) {
        if (i)
          v += cat->delimiter;
        v += table.cell(r, cols[i]);
      }
      emit(v);
    }
  }
  return out;
}

WindowAlignment best_window_alignment(const std::vector<std::string> &samples,
                                      const std::set<std::string> &domain) {
  WindowAlignment best;
  if (samples.empty() || domain.empty())
    return best;
  size_t max_len = 0;
  for (const auto &s : samples)
    max_len = std::max(max_len, s.size());
  // Candidate window lengths are the domain's own value lengths (capped).
  std::set<int> lengths;
  for (const auto &v : domain) {
    if (!v.empty() && v.size() <= 16)
      lengths.insert(static_cast<int>(v.size()));
    if (lengths.size() >= 6)
      break;
  }
  int max_start = static_cast<int>(std::min<size_t>(max_len, 24));
  for (int length : lengths) {
    for (int start = 0; start + 1 <= max_start; ++start) {
      size_t hits = 0;
      std::set<std::string> outputs;
      for (const auto &s : samples) {
        if (static_cast<size_t>(start) >= s.size())
          continue;
        std::string w = normalize_value(s.substr(start, length));
        if (w.empty())
          continue;
        if (domain.count(w)) {
          ++hits;
          outputs.insert(std::move(w));
        }
      }
      double fk = static_cast<double>(hits) / static_cast<double>(samples.size());
      double key = static_cast<double>(outputs.size()) / static_cast<double>(domain.size());
      // Strict improvement only: scanning shorter windows and smaller starts
      // first makes ties resolve to the smallest qualifying window.
      bool better = fk > best.fk_rate + 1e-12 ||
                    (fk > best.fk_rate - 1e-12 && key > best.key_rate + 1e-12);
      if (fk > 0.0 && better)
        best = {true, start, length, fk, key};
    }
  }
  return best;
}

FeatureVector extract_string_features(const Table &table, const TransformStep &step,
                                      const std::vector<const Table *> &others,
                                      const ProjectContext &ctx, const ScorerConfig &config) {
  FeatureVector f{{"fk_side_join_pct", 0.0},    {"key_side_join_pct", 0.0},
                  {"window_fk_join_pct", 0.0},  {"window_key_join_pct", 0.0},
                  {"target_numeric_cols", 0.0}, {"target_datetime_cols", 0.0}};
  auto outputs = string_step_outputs(table, step, config.caps.probe_row_sample);
  if (outputs.empty())
    return f;
  std::set<std::string> output_set;
  for (const auto &v : outputs)
    output_set.insert(normalize_value(v));

  double best = -1.0;
  for (const Table *other : others) {
    auto op = ctx.profile(*other);
    for (size_t c = 0; c < op->domains.size(); ++c) {
      const auto &domain = op->domains[c];
      if (domain.empty())
        continue;
      size_t hits = 0;
      for (const auto &v : outputs)
        hits += domain.count(normalize_value(v));
      double fk = static_cast<double>(hits) / static_cast<double>(outputs.size());
      double key = static_cast<double>(intersection_size(output_set, domain)) /
                   static_cast<double>(domain.size());
      WindowAlignment window = best_window_alignment(outputs, domain);
      double score = fk + key + window.fk_rate + window.key_rate;
      if (score > best + 1e-12) {
        best = score;
        f["fk_side_join_pct"] = fk;
        f["key_side_join_pct"] = key;
        f["window_fk_join_pct"] = window.fk_rate;
        f["window_key_join_pct"] = window.key_rate;
        size_t numeric = 0, datetime = 0;
        for (ColumnKind k : op->kinds) {
          if (numeric_kind(k))
            ++numeric;
          else if (k == ColumnKind::datetime)
            ++datetime;
        }
        f["target_numeric_cols"] = static_cast<double>(numeric);
        f["target_datetime_cols"] = static_cast<double>(datetime);
      }
    }
  }
  return f;
}

namespace {

// Step-specific feature add-ons for the reshape operators.
void add_step_features(FeatureVector &f, const TransformStep &step, const Table &table,
                       const ProjectContext &ctx) {
  if (const auto *up = std::get_if<UnpivotParams>(&step.params)) {
    auto start = table.column_index(up->start_column);
    auto end = table.column_index(up->end_column);
    if (!start || !end || *start > *end)
      return;
    size_t range = *end - *start + 1;
    size_t numeric = 0, floats = 0, datetimes = 0, empty_cells = 0;
    for (size_t c = *start; c <= *end; ++c) {
      const std::string &h = table.column_names[c];
      if (cell_is_integer(h))
        ++numeric;
      else if (cell_is_float(h))
        ++floats;
      else if (cell_is_datetime(h))
        ++datetimes;
      for (const auto &row : table.rows)
        if (normalize_value(row[c]).empty())
          ++empty_cells;
    }
    f["unpivot_range_numeric_headers"] = static_cast<double>(numeric);
    f["unpivot_range_float_headers"] = static_cast<double>(floats);
    f["unpivot_range_datetime_headers"] = static_cast<double>(datetimes);
    size_t cells = table.row_count() * range;
    f["unpivot_range_sparsity"] =
        cells ? static_cast<double>(empty_cells) / static_cast<double>(cells) : 0.0;
  } else if (const auto *pv = std::get_if<PivotParams>(&step.params)) {
    auto pc = table.column_index(pv->pivot_column);
    auto vc = table.column_index(pv->value_column);
    if (!pc || !vc)
      return;
    auto profile = ctx.profile(table);
    double rows = static_cast<double>(std::max<size_t>(1, table.row_count()));
    f["pivot_distinct_ratio"] = static_cast<double>(profile->domains[*pc].size()) / rows;
    std::set<std::vector<std::string>> keys;
    for (const auto &row : table.rows) {
      std::vector<std::string> key;
      for (size_t c = 0; c < table.column_count(); ++c)
        if (c != *pc && c != *vc)
          key.push_back(row[c]);
      keys.insert(std::move(key));
    }
    f["pivot_key_dup_frac"] = 1.0 - static_cast<double>(keys.size()) / rows;
    f["pivot_value_numeric"] = numeric_kind(profile->kinds[*vc]) ? 1.0 : 0.0;
  }
}

} // namespace

double score_transform(const TransformStep &step, const Table &table,
                       const std::vector<const Table *> &others, const ProjectContext &ctx,
                       const ScorerConfig &config) {
  if (auto pinned = config.override_for(table, step))
    return *pinned;
  const OperatorWeights *row = config.weights_for(step.op_name());
  if (!row)
    return config.clamp(0.5); // no weights configured: indifferent prior
  FeatureVector features;
  switch (step.params.index()) {
  case 4: // split
  case 5: // concatenate
  case 6: // substring
    features = extract_string_features(table, step, others, ctx, config);
    break;
  default:
    features = extract_reshape_features(table, others, ctx);
    add_step_features(features, step, table, ctx);
    break;
  }
  return config.clamp(logistic(apply_weights(*row, features)));
}

double score_column_join(const Table &key_table, size_t key_col, const Table &fk_table,
                         size_t fk_col, const ProjectContext &ctx, const ScorerConfig &config) {
  auto kp = ctx.profile(key_table);
  auto fp = ctx.profile(fk_table);
  const auto &key_domain = kp->domains[key_col];
  const auto &fk_domain = fp->domains[fk_col];
  if (key_domain.empty() || fk_domain.empty())
    return 0.0;
  ColumnKind kk = kp->kinds[key_col];
  ColumnKind fk_kind = fp->kinds[fk_col];
  // Numeric and datetime domains cannot join.
  if ((numeric_kind(kk) && fk_kind == ColumnKind::datetime) ||
      (kk == ColumnKind::datetime && numeric_kind(fk_kind)))
    return 0.0;

  size_t inter = intersection_size(key_domain, fk_domain);
  double cont = std::max(static_cast<double>(inter) / static_cast<double>(key_domain.size()),
                         static_cast<double>(inter) / static_cast<double>(fk_domain.size()));
  double uni = static_cast<double>(key_domain.size() + fk_domain.size() - inter);
  double jaccard = uni > 0.0 ? static_cast<double>(inter) / uni : 0.0;
  double keyness = kp->non_empty[key_col]
                       ? static_cast<double>(key_domain.size()) /
                             static_cast<double>(kp->non_empty[key_col])
                       : 0.0;
  // FK-side hit rate against the key domain, weighted by distinct values.
  size_t fk_hits = 0, fk_total = 0;
  for (const auto &row : fk_table.rows) {
    std::string v = normalize_value(row[fk_col]);
    if (v.empty())
      continue;
    ++fk_total;
    fk_hits += key_domain.count(v);
  }
  double hit_rate = fk_total ? static_cast<double>(fk_hits) / static_cast<double>(fk_total) : 0.0;
  double kind_match = (kk == fk_kind) ? 1.0 : (numeric_kind(kk) && numeric_kind(fk_kind)) ? 0.75 : 0.25;
  // How close the FK side is to 1:1 with the key; many-to-one joins repeat.
  double cardinality_ratio =
      fp->non_empty[fk_col] ? static_cast<double>(fk_domain.size()) /
                                  static_cast<double>(fp->non_empty[fk_col])
                            : 0.0;

  FeatureVector f{{"containment", cont},
                  {"jaccard", jaccard},
                  {"pk_fk", keyness * hit_rate},
                  {"kind_match", kind_match},
                  {"cardinality_ratio", cardinality_ratio}};
  const OperatorWeights *row = config.weights_for("join");
  if (!row)
    return config.clamp(0.5);
  return config.clamp(logistic(apply_weights(*row, f)));
}

JoinScore table_join_score(const Table &a, const Table &b, const ProjectContext &ctx,
                           const ScorerConfig &config) {
  JoinScore best;
  best.raw = 0.0;
  for (size_t i = 0; i < a.column_count(); ++i) {
    for (size_t j = 0; j < b.column_count(); ++j) {
      double s = std::max(score_column_join(a, i, b, j, ctx, config),
                          score_column_join(b, j, a, i, ctx, config));
      if (s > best.raw + 1e-15) {
        best.raw = s;
        best.best_pair = {i, j};
      }
    }
  }
  best.placeholder = best.raw <= kJoinBoundary;
  best.normalized = std::max(best.raw, kJoinBoundary);
  if (best.placeholder) {
    best.best_pair.reset();
    best.normalized = kJoinBoundary;
  } else if (best.best_pair) {
    best.left_column = a.column_names[best.best_pair->first];
    best.right_column = b.column_names[best.best_pair->second];
  }
  return best;
}

} // namespace autoprep
