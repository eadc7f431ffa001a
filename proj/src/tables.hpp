#pragma once

// Core table model: string-cell tables loaded from CSV, column kind
// inference, normalized value domains, and the per-project context that
// caches derived per-table data used by the scorer.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace autoprep {

// Status codes shared with the C API; the boundary translates 1:1.
enum class Status : int {
  ok = 0,
  invalid_argument = 1,
  not_enough_tables = 2,
  bad_input_file = 3,
  apply_failed = 4,
  eval_mismatch = 5,
  budget_exceeded = 6,
  internal = 10,
};

// Error carrying a status code; thrown by ingestion, operator application
// and the solver entry points, caught at the C API boundary.
class Error : public std::runtime_error {
public:
  Error(Status status, const std::string &message)
      : std::runtime_error(message), status_(status) {}
  Status status() const { return status_; }

private:
  Status status_;
};

// Inferred column kind. A column takes a non-string kind only when at least
// 90% of its non-empty cells agree on that kind; otherwise it is string.
// A column with no non-empty cells is empty.
enum class ColumnKind { integer, floating, datetime, string, empty };

const char *column_kind_name(ColumnKind kind);

struct Table {
  std::string name;
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> rows; // rectangular; rows[i].size() == column_names.size()
  std::vector<ColumnKind> column_kinds;       // parallel to column_names

  size_t column_count() const { return column_names.size(); }
  size_t row_count() const { return rows.size(); }
  const std::string &cell(size_t row, size_t col) const { return rows[row][col]; }

  // Index of the first column with this exact name, if any.
  std::optional<size_t> column_index(const std::string &column) const;
};

// Ingestion statistics for ragged input rows.
struct LoadStats {
  size_t padded_rows = 0;    // short rows padded with empty cells
  size_t truncated_rows = 0; // long rows truncated to the header width
};

// Cell classification used by kind inference. Cells are trimmed before
// classification; storage preserves whitespace untouched.
bool cell_is_integer(const std::string &cell);
bool cell_is_float(const std::string &cell); // true for any numeric literal
bool cell_is_datetime(const std::string &cell);

// Trim ASCII whitespace and lower-case ASCII letters.
std::string normalize_value(const std::string &value);

// Infer per-column kinds (90% majority rule). Deterministic and idempotent.
void infer_column_kinds(Table &table);

// Distinct normalized non-empty values of one column.
std::set<std::string> value_domain(const Table &table, size_t col);

// Load one CSV file (RFC-4180-style quoting, header row required). The table
// name is the file stem. Duplicate headers get "_2", "_3", ... suffixes in
// ingestion order. A header-only file is rejected as an empty table.
Table load_csv(const std::filesystem::path &path, LoadStats *stats = nullptr);

// Parse CSV text that is already in memory; `name` becomes the table name.
Table parse_csv(const std::string &text, const std::string &name,
                LoadStats *stats = nullptr);

// Write a table as CSV with minimal quoting.
void write_csv(const Table &table, const std::filesystem::path &path);
std::string to_csv(const Table &table);

// Content fingerprint (FNV-1a over headers and cells); identical content
// yields identical fingerprints regardless of the table name.
uint64_t table_fingerprint(const Table &table);
std::string table_fingerprint_hex(const Table &table);

// Derived, memoizable per-table data consumed by the scorer.
struct TableProfile {
  uint64_t fingerprint = 0;
  std::vector<ColumnKind> kinds;
  std::vector<std::set<std::string>> domains; // normalized distinct values per column
  std::vector<size_t> non_empty;              // non-empty cell count per column
  std::set<std::string> header_set;           // normalized header names
  size_t numeric_headers = 0;                 // headers that parse as integers
  size_t float_headers = 0;                   // headers that parse as non-integer numbers
  size_t datetime_headers = 0;                // headers that parse as dates
};

// The tables of one project plus profile/feature caches. Caches are
// read-mostly and guarded by a mutex so concurrent readers stay safe;
// construction and solving themselves run single-threaded for determinism.
class ProjectContext {
public:
  ProjectContext() = default;
  explicit ProjectContext(std::vector<Table> tables, std::string name = "");

  // Movable so handles can own a loaded project; the cache mutex itself is
  // not moved. Copying stays disabled.
  ProjectContext(ProjectContext &&other) noexcept;
  ProjectContext &operator=(ProjectContext &&other) = delete;
  ProjectContext(const ProjectContext &) = delete;
  ProjectContext &operator=(const ProjectContext &) = delete;

  // Load every *.csv in a directory (sorted by filename). Fewer than two
  // tables raises not_enough_tables; unreadable or header-only files raise
  // bad_input_file listing every offending file.
  static ProjectContext load_dir(const std::filesystem::path &dir);

  const std::vector<Table> &tables() const { return tables_; }
  const std::string &name() const { return name_; }
  size_t size() const { return tables_.size(); }

  // Profile for any table (project tables or transformed snapshots),
  // memoized by content fingerprint.
  std::shared_ptr<const TableProfile> profile(const Table &table) const;

private:
  std::vector<Table> tables_;
  std::string name_;
  mutable std::mutex cache_mutex_;
  mutable std::map<uint64_t, std::shared_ptr<const TableProfile>> profiles_;
};

} // namespace autoprep
