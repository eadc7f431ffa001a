#include "tables.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace autoprep {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

std::string_view trimmed(const std::string &s) {
  size_t b = 0, e = s.size();
  while (b < e && is_space(s[b]))
    ++b;
  while (e > b && is_space(s[e - 1]))
    --e;
  return std::string_view(s).substr(b, e - b);
}

bool all_digits(std::string_view s) {
  if (s.empty())
    return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

// Validated numeric segment of a date: value range plus max width.
bool date_part(std::string_view s, int lo, int hi, size_t max_width, int *out = nullptr) {
  if (s.empty() || s.size() > max_width || !all_digits(s))
    return false;
  int v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  if (out)
    *out = v;
  return v >= lo && v <= hi;
}

std::vector<std::string_view> split_view(std::string_view s, char delim) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

bool valid_time(std::string_view s) {
  auto parts = split_view(s, ':');
  if (parts.size() != 2 && parts.size() != 3)
    return false;
  if (!date_part(parts[0], 0, 23, 2))
    return false;
  if (!date_part(parts[1], 0, 59, 2))
    return false;
  if (parts.size() == 3 && !date_part(parts[2], 0, 60, 2))
    return false;
  return true;
}

bool valid_date(std::string_view s) {
  char delim = 0;
  if (s.find('-') != std::string_view::npos)
    delim = '-';
  else if (s.find('/') != std::string_view::npos)
    delim = '/';
  else
    return false;
  auto parts = split_view(s, delim);
  if (parts.size() == 2) {
    // YYYY-MM
    return date_part(parts[0], 1000, 9999, 4) && date_part(parts[1], 1, 12, 2);
  }
  if (parts.size() != 3)
    return false;
  if (parts[0].size() == 4) {
    // YYYY-MM-DD
    return date_part(parts[0], 1000, 9999, 4) && date_part(parts[1], 1, 12, 2) &&
           date_part(parts[2], 1, 31, 2);
  }
  if (parts[2].size() == 4) {
    // DD-MM-YYYY or MM-DD-YYYY; accept either consistent reading.
    if (!date_part(parts[2], 1000, 9999, 4))
      return false;
    bool dmy = date_part(parts[0], 1, 31, 2) && date_part(parts[1], 1, 12, 2);
    bool mdy = date_part(parts[0], 1, 12, 2) && date_part(parts[1], 1, 31, 2);
    return dmy || mdy;
  }
  return false;
}

} // namespace

const char *column_kind_name(ColumnKind kind) {
  switch (kind) {
  case ColumnKind::integer:
    return "integer";
  case ColumnKind::floating:
    return "float";
  case ColumnKind::datetime:
    return "datetime";
  case ColumnKind::string:
    return "string";
  case ColumnKind::empty:
    return "empty";
  }
  return "string";
}

std::optional<size_t> Table::column_index(const std::string &column) const {
  for (size_t i = 0; i < column_names.size(); ++i)
    if (column_names[i] == column)
      return i;
  return std::nullopt;
}

bool cell_is_integer(const std::string &cell) {
  auto t = trimmed(cell);
  if (t.empty())
    return false;
  size_t i = (t[0] == '+' || t[0] == '-') ? 1 : 0;
  if (i >= t.size())
    return false;
  return all_digits(t.substr(i));
}

bool cell_is_float(const std::string &cell) {
  auto t = trimmed(cell);
  if (t.empty())
    return false;
  // Reject textual forms like "inf"/"-nan" that from_chars would accept:
  // after an optional sign the next character must be a digit or '.'.
  char first = t[0];
  size_t body = (first == '+' || first == '-') ? 1 : 0;
  if (body >= t.size())
    return false;
  char lead = t[body];
  if (lead != '.' && !std::isdigit(static_cast<unsigned char>(lead)))
    return false;
  double v = 0.0;
  auto begin = t.data() + ((first == '+') ? 1 : 0); // from_chars rejects leading '+'
  auto result = std::from_chars(begin, t.data() + t.size(), v);
  return result.ec == std::errc() && result.ptr == t.data() + t.size();
}

bool cell_is_datetime(const std::string &cell) {
  auto t = trimmed(cell);
  if (t.empty() || t.size() > 32)
    return false;
  // Optional time suffix after a space or 'T'.
  size_t sep = t.find(' ');
  if (sep == std::string_view::npos)
    sep = t.find('T');
  if (sep != std::string_view::npos) {
    if (!valid_time(t.substr(sep + 1)))
      return false;
    t = t.substr(0, sep);
  }
  return valid_date(t);
}

std::string normalize_value(const std::string &value) {
  auto t = trimmed(value);
  std::string out;
  out.reserve(t.size());
  for (char c : t)
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

namespace {

ColumnKind classify_cell(const std::string &cell) {
  if (trimmed(cell).empty())
    return ColumnKind::empty;
  if (cell_is_integer(cell))
    return ColumnKind::integer;
  if (cell_is_float(cell))
    return ColumnKind::floating;
  if (cell_is_datetime(cell))
    return ColumnKind::datetime;
  return ColumnKind::string;
}

ColumnKind infer_column_kind(const Table &table, size_t col) {
  size_t counts[4] = {0, 0, 0, 0}; // integer, floating, datetime, string
  size_t non_empty = 0;
  for (const auto &row : table.rows) {
    ColumnKind k = classify_cell(row[col]);
    if (k == ColumnKind::empty)
      continue;
    ++non_empty;
    ++counts[static_cast<int>(k)];
  }
  if (non_empty == 0)
    return ColumnKind::empty;
  // Integers also count toward floating: a 90% numeric column with mixed
  // integer/decimal cells is a float column.
  size_t numeric = counts[0] + counts[1];
  double threshold = 0.9 * static_cast<double>(non_empty);
  if (static_cast<double>(counts[0]) >= threshold)
    return ColumnKind::integer;
  if (static_cast<double>(numeric) >= threshold && counts[1] > 0)
    return ColumnKind::floating;
  if (static_cast<double>(counts[2]) >= threshold)
    return ColumnKind::datetime;
  return ColumnKind::string;
}

} // namespace

void infer_column_kinds(Table &table) {
  table.column_kinds.resize(table.column_count());
  for (size_t c = 0; c < table.column_count(); ++c)
    table.column_kinds[c] = infer_column_kind(table, c);
}

std::set<std::string> value_domain(const Table &table, size_t col) {
  std::set<std::string> domain;
  for (const auto &row : table.rows) {
    std::string v = normalize_value(row[col]);
    if (!v.empty())
      domain.insert(std::move(v));
  }
  return domain;
}

namespace {

// RFC-4180-style record reader: quoted fields may contain commas, newlines
// and doubled quotes; both \n and \r\n line endings are accepted.
std::vector<std::vector<std::string>> read_records(const std::string &text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&]() {
    end_field();
    // Skip records that are entirely empty (blank lines).
    if (record.size() > 1 || !record[0].empty())
      records.push_back(std::move(record));
    record.clear();
  };

  size_t i = 0;
  // Strip a UTF-8 BOM if present.
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0)
    i = 3;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
    case '"':
      if (!field_started && field.empty()) {
        in_quotes = true;
        field_started = true;
      } else {
        field.push_back(c); // stray quote inside an unquoted field
      }
      break;
    case ',':
      end_field();
      break;
    case '\r':
      if (i + 1 < text.size() && text[i + 1] == '\n')
        ++i;
      end_record();
      break;
    case '\n':
      end_record();
      break;
    default:
      field.push_back(c);
      field_started = true;
      break;
    }
  }
  if (!field.empty() || !record.empty() || field_started)
    end_record();
  return records;
}

std::vector<std::string> dedupe_headers(std::vector<std::string> headers) {
  std::set<std::string> seen;
  for (auto &h : headers) {
    if (seen.insert(h).second)
      continue;
    int suffix = 2;
    std::string candidate;
    do {
      candidate = h + "_" + std::to_string(suffix++);
    } while (seen.count(candidate));
    h = candidate;
    seen.insert(h);
  }
  return headers;
}

} // namespace

Table parse_csv(const std::string &text, const std::string &name, LoadStats *stats) {
  auto records = read_records(text);
  if (records.empty())
    throw Error(Status::bad_input_file, "empty table: '" + name + "' has no header row");
  Table table;
  table.name = name;
  table.column_names = dedupe_headers(std::move(records.front()));
  size_t width = table.column_names.size();
  LoadStats local;
  for (size_t r = 1; r < records.size(); ++r) {
    auto row = std::move(records[r]);
    if (row.size() < width) {
      row.resize(width);
      ++local.padded_rows;
    } else if (row.size() > width) {
      row.resize(width);
      ++local.truncated_rows;
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty())
    throw Error(Status::bad_input_file, "empty table: '" + name + "' has a header but no data rows");
  if (stats)
    *stats = local;
  infer_column_kinds(table);
  return table;
}

Table load_csv(const std::filesystem::path &path, LoadStats *stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(Status::bad_input_file, "cannot read file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), path.stem().string(), stats);
}

namespace {

void write_field(std::string &out, const std::string &field) {
  bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) {
    out += field;
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"')
      out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

} // namespace

std::string to_csv(const Table &table) {
  std::string out;
  for (size_t c = 0; c < table.column_count(); ++c) {
    if (c)
      out.push_back(',');
    write_field(out, table.column_names[c]);
  }
  out.push_back('\n');
  for (const auto &row : table.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c)
        out.push_back(',');
      write_field(out, row[c]);
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Table &table, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(Status::apply_failed, "cannot write file: " + path.string());
  out << to_csv(table);
}

uint64_t table_fingerprint(const Table &table) {
  uint64_t hash = 1469598103934665603ull; // FNV-1a offset basis
  auto mix = [&hash](const std::string &s) {
    for (unsigned char c : s) {
      hash ^= c;
      hash *= 1099511628211ull;
    }
    hash ^= 0x1f; // field separator
    hash *= 1099511628211ull;
  };
  mix(std::to_string(table.column_count()));
  for (const auto &h : table.column_names)
    mix(h);
  for (const auto &row : table.rows)
    for (const auto &cell : row)
      mix(cell);
  return hash;
}

std::string table_fingerprint_hex(const Table &table) {
  static const char digits[] = "0123456789abcdef";
  uint64_t fp = table_fingerprint(table);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[fp & 0xf];
    fp >>= 4;
  }
  return out;
}

ProjectContext::ProjectContext(std::vector<Table> tables, std::string name)
    : tables_(std::move(tables)), name_(std::move(name)) {
  for (auto &t : tables_)
    if (t.column_kinds.size() != t.column_count())
      infer_column_kinds(t);
}

ProjectContext::ProjectContext(ProjectContext &&other) noexcept
    : tables_(std::move(other.tables_)), name_(std::move(other.name_)) {
  std::lock_guard<std::mutex> lock(other.cache_mutex_);
  profiles_ = std::move(other.profiles_);
}

ProjectContext ProjectContext::load_dir(const std::filesystem::path &dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw Error(Status::bad_input_file, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Table> tables;
  std::vector<std::string> bad;
  for (const auto &f : files) {
    try {
      tables.push_back(load_csv(f));
    } catch (const Error &e) {
      bad.push_back(f.filename().string() + " (" + e.what() + ")");
    }
  }
  if (!bad.empty()) {
    std::string msg = "unreadable input files:";
    for (const auto &b : bad)
      msg += " " + b;
    throw Error(Status::bad_input_file, msg);
  }
  if (tables.size() < 2)
    throw Error(Status::not_enough_tables, "project needs at least two tables, found " +
                                               std::to_string(tables.size()));
  return ProjectContext(std::move(tables), dir.filename().string());
}

std::shared_ptr<const TableProfile> ProjectContext::profile(const Table &table) const {
  uint64_t fp = table_fingerprint(table);
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = profiles_.find(fp);
    if (it != profiles_.end())
      return it->second;
  }
  auto profile = std::make_shared<TableProfile>();
  profile->fingerprint = fp;
  Table copy = table; // kinds may be absent on snapshots
  if (copy.column_kinds.size() != copy.column_count())
    infer_column_kinds(copy);
  profile->kinds = copy.column_kinds;
  profile->domains.resize(copy.column_count());
  profile->non_empty.resize(copy.column_count(), 0);
  for (size_t c = 0; c < copy.column_count(); ++c) {
    profile->domains[c] = value_domain(copy, c);
    size_t count = 0;
    for (const auto &row : copy.rows)
      if (!normalize_value(row[c]).empty())
        ++count;
    profile->non_empty[c] = count;
  }
  for (const auto &h : copy.column_names) {
    profile->header_set.insert(normalize_value(h));
    if (cell_is_integer(h))
      ++profile->numeric_headers;
    else if (cell_is_float(h))
      ++profile->float_headers;
    else if (cell_is_datetime(h))
      ++profile->datetime_headers;
  }
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto [it, inserted] = profiles_.emplace(fp, std::move(profile));
  return it->second;
}

} // namespace autoprep
