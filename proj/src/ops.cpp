#include "ops.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace autoprep {

namespace {

[[noreturn]] void fail(const std::string &op, const std::string &why) {
  throw Error(Status::apply_failed, op + ": " + why);
}

size_t require_column(const Table &table, const std::string &op, const std::string &column) {
  auto idx = table.column_index(column);
  if (!idx)
    fail(op, "no column named '" + column + "' in table '" + table.name + "'");
  return *idx;
}

} // namespace

const char *TransformStep::op_name() const {
  struct Visitor {
    const char *operator()(const NoOpParams &) const { return "noop"; }
    const char *operator()(const UnpivotParams &) const { return "unpivot"; }
    const char *operator()(const PivotParams &) const { return "pivot"; }
    const char *operator()(const TransposeParams &) const { return "transpose"; }
    const char *operator()(const SplitParams &) const { return "split"; }
    const char *operator()(const ConcatenateParams &) const { return "concatenate"; }
    const char *operator()(const SubstringParams &) const { return "substring"; }
  };
  return std::visit(Visitor{}, params);
}

namespace {

std::string join_names(const std::vector<std::string> &names, char sep) {
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i)
      out.push_back(sep);
    out += names[i];
  }
  return out;
}

std::string step_key(const TransformStep &step, bool include_output) {
  std::ostringstream out;
  out << step.op_name() << '(';
  struct Visitor {
    std::ostringstream &out;
    bool include_output;
    void operator()(const NoOpParams &) const {}
    void operator()(const UnpivotParams &p) const {
      out << "start_column=" << p.start_column << ",end_column=" << p.end_column;
    }
    void operator()(const PivotParams &p) const {
      out << "pivot_column=" << p.pivot_column << ",value_column=" << p.value_column;
    }
    void operator()(const TransposeParams &) const {}
    void operator()(const SplitParams &p) const {
      out << "column=" << p.column << ",delimiter=" << p.delimiter
          << ",select_pos=" << p.select_pos;
      if (include_output)
        out << ",output_column=" << p.output_column;
    }
    void operator()(const ConcatenateParams &p) const {
      out << "columns=" << join_names(p.columns, '+') << ",delimiter=" << p.delimiter;
      if (include_output)
        out << ",output_column=" << p.output_column;
    }
    void operator()(const SubstringParams &p) const {
      out << "column=" << p.column << ",start=" << p.start << ",length=" << p.length;
      if (include_output)
        out << ",output_column=" << p.output_column;
    }
  };
  std::visit(Visitor{out, include_output}, step.params);
  out << ')';
  return out.str();
}

} // namespace

std::string TransformStep::canonical_key() const { return step_key(*this, true); }

std::string eval_key(const TransformStep &step) { return step_key(step, false); }

bool operator==(const TransformStep &a, const TransformStep &b) {
  return a.canonical_key() == b.canonical_key();
}

std::string unique_column_name(const std::vector<std::string> &taken, const std::string &base) {
  auto used = [&taken](const std::string &name) {
    return std::find(taken.begin(), taken.end(), name) != taken.end();
  };
  if (!used(base))
    return base;
  int suffix = 2;
  std::string candidate;
  do {
    candidate = base + "_" + std::to_string(suffix++);
  } while (used(candidate));
  return candidate;
}

std::string derived_column_name(const std::vector<std::string> &taken, const std::string &source,
                                const char *op) {
  return unique_column_name(taken, source + "_" + op);
}

Table apply_unpivot(const Table &table, const std::string &start_column,
                    const std::string &end_column, const std::string &variable_name,
                    const std::string &value_name) {
  size_t start = require_column(table, "unpivot", start_column);
  size_t end = require_column(table, "unpivot", end_column);
  if (start > end)
    fail("unpivot", "start column '" + start_column + "' is after end column '" + end_column + "'");
  if (end - start + 1 < 2)
    fail("unpivot", "range must span at least two columns");

  Table out;
  out.name = table.name;
  std::vector<size_t> kept;
  for (size_t c = 0; c < table.column_count(); ++c)
    if (c < start || c > end) {
      kept.push_back(c);
      out.column_names.push_back(table.column_names[c]);
    }
  std::string var_name = unique_column_name(out.column_names, variable_name);
  out.column_names.push_back(var_name);
  out.column_names.push_back(unique_column_name(out.column_names, value_name));

  out.rows.reserve(table.row_count() * (end - start + 1));
  for (const auto &row : table.rows) {
    for (size_t c = start; c <= end; ++c) {
      std::vector<std::string> r;
      r.reserve(kept.size() + 2);
      for (size_t k : kept)
        r.push_back(row[k]);
      r.push_back(table.column_names[c]);
      r.push_back(row[c]);
      out.rows.push_back(std::move(r));
    }
  }
  infer_column_kinds(out);
  return out;
}

Table apply_pivot(const Table &table, const std::string &pivot_column,
                  const std::string &value_column) {
  size_t pc = require_column(table, "pivot", pivot_column);
  size_t vc = require_column(table, "pivot", value_column);
  if (pc == vc)
    fail("pivot", "pivot and value column must differ");

  std::vector<size_t> keys;
  Table out;
  out.name = table.name;
  for (size_t c = 0; c < table.column_count(); ++c)
    if (c != pc && c != vc) {
      keys.push_back(c);
      out.column_names.push_back(table.column_names[c]);
    }

  // Distinct pivot values in first-occurrence order become new columns.
  std::vector<std::string> pivot_values;
  std::map<std::string, size_t> pivot_col_of;
  for (const auto &row : table.rows) {
    if (!pivot_col_of.count(row[pc])) {
      pivot_col_of[row[pc]] = pivot_values.size();
      pivot_values.push_back(row[pc]);
    }
  }
  for (const auto &pv : pivot_values)
    out.column_names.push_back(unique_column_name(out.column_names, pv));

  // Distinct key tuples in first-occurrence order become output rows.
  std::map<std::vector<std::string>, size_t> row_of;
  for (const auto &row : table.rows) {
    std::vector<std::string> key;
    key.reserve(keys.size());
    for (size_t k : keys)
      key.push_back(row[k]);
    auto it = row_of.find(key);
    size_t r;
    if (it == row_of.end()) {
      r = out.rows.size();
      row_of.emplace(key, r);
      std::vector<std::string> new_row(out.column_names.size());
      for (size_t i = 0; i < keys.size(); ++i)
        new_row[i] = key[i];
      out.rows.push_back(std::move(new_row));
    } else {
      r = it->second;
    }
    size_t c = keys.size() + pivot_col_of[row[pc]];
    std::string &cell = out.rows[r][c];
    if (!cell.empty() && cell != row[vc])
      fail("pivot", "ambiguous cell for key (" + join_names({row[pc]}, ',') +
                        "): conflicting values '" + cell + "' and '" + row[vc] + "'");
    cell = row[vc];
  }
  infer_column_kinds(out);
  return out;
}

Table apply_transpose(const Table &table) {
  if (table.column_count() < 1)
    fail("transpose", "table has no columns");
  Table out;
  out.name = table.name;
  // The first header stays as the corner; the first column's cells become
  // the remaining headers and the remaining headers become the first column.
  out.column_names.push_back(table.column_names[0]);
  for (const auto &row : table.rows)
    out.column_names.push_back(row[0]);
  for (size_t c = 1; c < table.column_count(); ++c) {
    std::vector<std::string> row;
    row.reserve(table.row_count() + 1);
    row.push_back(table.column_names[c]);
    for (const auto &r : table.rows)
      row.push_back(r[c]);
    out.rows.push_back(std::move(row));
  }
  infer_column_kinds(out);
  return out;
}

namespace {

std::string split_select(const std::string &cell, const std::string &delimiter, int select_pos) {
  int index = 0;
  size_t start = 0;
  while (true) {
    size_t pos = cell.find(delimiter, start);
    if (index == select_pos)
      return cell.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (pos == std::string::npos)
      return ""; // select_pos out of range
    start = pos + delimiter.size();
    ++index;
  }
}

// Append a computed column; resolves the output name deterministically.
Table append_column(const Table &table, const std::string &requested_name,
                    const std::string &source, const char *op,
                    std::vector<std::string> values) {
  Table out = table;
  std::string name = requested_name.empty()
                         ? derived_column_name(out.column_names, source, op)
                         : unique_column_name(out.column_names, requested_name);
  out.column_names.push_back(name);
  for (size_t r = 0; r < out.rows.size(); ++r)
    out.rows[r].push_back(std::move(values[r]));
  infer_column_kinds(out);
  return out;
}

} // namespace

Table apply_split(const Table &table, const SplitParams &params) {
  size_t c = require_column(table, "split", params.column);
  if (params.delimiter.empty())
    fail("split", "delimiter must not be empty");
  if (params.select_pos < 0)
    fail("split", "select_pos must be non-negative");
  std::vector<std::string> values;
  values.reserve(table.row_count());
  for (const auto &row : table.rows)
    values.push_back(split_select(row[c], params.delimiter, params.select_pos));
  return append_column(table, params.output_column, params.column, "split", std::move(values));
}

Table apply_concatenate(const Table &table, const ConcatenateParams &params) {
  if (params.columns.size() < 2)
    fail("concatenate", "needs at least two columns");
  std::vector<size_t> cols;
  for (const auto &name : params.columns)
    cols.push_back(require_column(table, "concatenate", name));
  std::vector<std::string> values;
  values.reserve(table.row_count());
  for (const auto &row : table.rows) {
    std::string v;
    for (size_t i = 0; i < cols.size(); ++i) {
      if (i)
        v += params.delimiter;
      v += row[cols[i]];
    }
    values.push_back(std::move(v));
  }
  return append_column(table, params.output_column, join_names(params.columns, '+'), "concat",
                       std::move(values));
}

Table apply_substring(const Table &table, const SubstringParams &params) {
  size_t c = require_column(table, "substring", params.column);
  if (params.start < 0)
    fail("substring", "start must be non-negative");
  if (params.length < 1)
    fail("substring", "length must be positive");
  std::vector<std::string> values;
  values.reserve(table.row_count());
  for (const auto &row : table.rows) {
    const std::string &cell = row[c];
    size_t start = static_cast<size_t>(params.start);
    if (start >= cell.size())
      values.push_back("");
    else
      values.push_back(cell.substr(start, static_cast<size_t>(params.length)));
  }
  return append_column(table, params.output_column, params.column, "substring",
                       std::move(values));
}

Table apply_step(const Table &table, const TransformStep &step) {
  struct Visitor {
    const Table &table;
    Table operator()(const NoOpParams &) const { return table; }
    Table operator()(const UnpivotParams &p) const {
      return apply_unpivot(table, p.start_column, p.end_column);
    }
    Table operator()(const PivotParams &p) const {
      return apply_pivot(table, p.pivot_column, p.value_column);
    }
    Table operator()(const TransposeParams &) const { return apply_transpose(table); }
    Table operator()(const SplitParams &p) const { return apply_split(table, p); }
    Table operator()(const ConcatenateParams &p) const { return apply_concatenate(table, p); }
    Table operator()(const SubstringParams &p) const { return apply_substring(table, p); }
  };
  return std::visit(Visitor{table}, step.params);
}

} // namespace autoprep
