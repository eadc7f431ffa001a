// CSV ingestion, column-kind inference, value domains, fingerprints and
// project loading.

#include "doctest.h"

#include "tables.hpp"

#include <filesystem>
#include <fstream>

using namespace autoprep;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const std::string &tag) {
  fs::path dir = fs::temp_directory_path() / ("autoprep_tables_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

} // namespace

TEST_CASE("parse_csv handles quoting, embedded separators and CRLF") {
  const std::string text =
      "name,\"notes, long\",count\r\n"
      "\"Smith, Jo\",\"says \"\"hi\"\"\",3\r\n"
      "plain,\"line1\nline2\",4\n";
  Table t = parse_csv(text, "quoted");
  CHECK(t.name == "quoted");
  REQUIRE(t.column_count() == 3);
  CHECK(t.column_names[1] == "notes, long");
  REQUIRE(t.row_count() == 2);
  CHECK(t.cell(0, 0) == "Smith, Jo");
  CHECK(t.cell(0, 1) == "says \"hi\"");
  CHECK(t.cell(1, 1) == "line1\nline2");
  CHECK(t.cell(1, 2) == "4");
}

TEST_CASE("parse_csv skips blank lines and strips a UTF-8 BOM") {
  const std::string text = "\xEF\xBB\xBFh1,h2\n\na,b\n\n\nc,d\n";
  Table t = parse_csv(text, "bom");
  CHECK(t.column_names[0] == "h1");
  REQUIRE(t.row_count() == 2);
  CHECK(t.cell(0, 0) == "a");
  CHECK(t.cell(1, 1) == "d");
}

TEST_CASE("parse_csv deduplicates headers in ingestion order") {
  Table t = parse_csv("a,a,b,a,a_2\n1,2,3,4,5\n", "dups");
  REQUIRE(t.column_count() == 5);
  CHECK(t.column_names[0] == "a");
  CHECK(t.column_names[1] == "a_2");
  CHECK(t.column_names[2] == "b");
  CHECK(t.column_names[3] == "a_3");
  // The literal "a_2" header was taken by the dedupe of column 1.
  CHECK(t.column_names[4] == "a_2_2");
}

TEST_CASE("parse_csv pads short rows and truncates long rows, reporting stats") {
  LoadStats stats;
  Table t = parse_csv("a,b,c\n1\n1,2,3,4,5\n1,2,3\n", "ragged", &stats);
  CHECK(stats.padded_rows == 1);
  CHECK(stats.truncated_rows == 1);
  REQUIRE(t.row_count() == 3);
  CHECK(t.cell(0, 1) == "");
  CHECK(t.rows[1].size() == 3);
}

TEST_CASE("parse_csv rejects empty input and header-only input") {
  CHECK_THROWS_AS(parse_csv("", "none"), Error);
  CHECK_THROWS_AS(parse_csv("a,b,c\n", "only_header"), Error);
  try {
    parse_csv("a,b\n", "only_header");
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::bad_input_file);
    CHECK(std::string(e.what()).find("only_header") != std::string::npos);
  }
}

TEST_CASE("cell classifiers accept plain literals and reject oddities") {
  CHECK(cell_is_integer("42"));
  CHECK(cell_is_integer("-7"));
  CHECK(cell_is_integer("+7"));
  CHECK(cell_is_integer(" 13 "));
  CHECK_FALSE(cell_is_integer("4.2"));
  CHECK_FALSE(cell_is_integer(""));
  CHECK_FALSE(cell_is_integer("--4"));
  CHECK_FALSE(cell_is_integer("4e2"));

  CHECK(cell_is_float("4.2"));
  CHECK(cell_is_float("-0.5"));
  CHECK(cell_is_float(".5"));
  CHECK(cell_is_float("1e3"));
  CHECK(cell_is_float("42")); // integers are numeric too
  CHECK_FALSE(cell_is_float("inf"));
  CHECK_FALSE(cell_is_float("-inf"));
  CHECK_FALSE(cell_is_float("nan"));
  CHECK_FALSE(cell_is_float("-nan"));
  CHECK_FALSE(cell_is_float("1.2.3"));
  CHECK_FALSE(cell_is_float("12abc"));

  CHECK(cell_is_datetime("2010-01-31"));
  CHECK(cell_is_datetime("2010-01"));
  CHECK(cell_is_datetime("31/12/2010"));
  CHECK(cell_is_datetime("12/31/2010"));
  CHECK(cell_is_datetime("2010-01-31 23:59"));
  CHECK(cell_is_datetime("2010-01-31T23:59:59"));
  CHECK_FALSE(cell_is_datetime("2010"));       // bare year is an integer
  CHECK_FALSE(cell_is_datetime("2010-13"));    // month out of range
  CHECK_FALSE(cell_is_datetime("2010-01-32")); // day out of range
  CHECK_FALSE(cell_is_datetime("31-31-2010")); // neither DMY nor MDY
  CHECK_FALSE(cell_is_datetime("a-b-c"));
  CHECK_FALSE(cell_is_datetime("2010-01-31 25:00"));
}

TEST_CASE("normalize_value trims and lower-cases ASCII") {
  CHECK(normalize_value("  Hello World\t") == "hello world");
  CHECK(normalize_value("ABC") == "abc");
  CHECK(normalize_value("   ") == "");
}

TEST_CASE("column kinds follow the 90% majority rule") {
  std::string csv = "i90,f,d,s,e,mixed_if\n";
  const char *rows[10] = {
      "1,1.5,2010-01-01,x,,1",  "2,2.5,2010-01-02,y,,2",
      "3,3.5,2010-01-03,z,,3",  "4,4.5,2010-01-04,w,,4",
      "5,5.5,2010-01-05,v,,5",  "6,6.5,2010-01-06,u,,6",
      "7,7.5,2010-01-07,t,,7",  "8,8.5,2010-01-08,s,,8.5",
      "9,9.5,2010-01-09,r,,9.5", "x,10.5,2010-01-10,q,,10",
  };
  csv += rows[0];
  for (int i = 1; i < 10; ++i) {
    csv += "\n";
    csv += rows[i];
  }
  csv += "\n";
  Table t = parse_csv(csv, "kinds");
  auto kind = [&](const char *name) {
    return t.column_kinds[*t.column_index(name)];
  };
  CHECK(kind("f") == ColumnKind::floating);
  CHECK(kind("d") == ColumnKind::datetime);
  CHECK(kind("s") == ColumnKind::string);
  CHECK(kind("e") == ColumnKind::empty);
  // 9 integers + 1 string is exactly 90%: integer.
  CHECK(kind("i90") == ColumnKind::integer);
  // 8 integers + 2 decimals: integers alone miss 90%, but all cells are
  // numeric and a decimal is present, so the column is floating.
  CHECK(kind("mixed_if") == ColumnKind::floating);
}

TEST_CASE("a column of 8 integers and 2 strings stays string") {
  std::string csv = "c\n1\n2\n3\n4\n5\n6\n7\n8\nx\ny\n";
  Table t = parse_csv(csv, "mixed");
  CHECK(t.column_kinds[0] == ColumnKind::string);
}

TEST_CASE("value_domain collects distinct normalized non-empty values") {
  Table t = parse_csv("c\nA\n a \nB\n\nb\n", "dom");
  auto d = value_domain(t, 0);
  CHECK(d == std::set<std::string>{"a", "b"});
}

TEST_CASE("fingerprint depends on content, not table name; hex is stable") {
  Table a = parse_csv("x,y\n1,2\n", "first");
  Table b = parse_csv("x,y\n1,2\n", "second");
  Table c = parse_csv("x,y\n1,3\n", "third");
  CHECK(table_fingerprint(a) == table_fingerprint(b));
  CHECK(table_fingerprint(a) != table_fingerprint(c));
  CHECK(table_fingerprint_hex(a).size() == 16);
  CHECK(table_fingerprint_hex(a) == table_fingerprint_hex(b));
}

TEST_CASE("fingerprint distinguishes column layout from cell layout") {
  // Same flattened cell stream, different shapes.
  Table a = parse_csv("h1,h2\na,b\n", "wide");
  Table b = parse_csv("h1\nh2\na\nb\n", "tall");
  CHECK(table_fingerprint(a) != table_fingerprint(b));
}

TEST_CASE("to_csv round-trips through parse_csv with minimal quoting") {
  const std::string text =
      "name,notes,count\n\"Smith, Jo\",\"says \"\"hi\"\"\",3\nplain,ok,4\n";
  Table t = parse_csv(text, "rt");
  std::string emitted = to_csv(t);
  Table back = parse_csv(emitted, "rt");
  CHECK(back.column_names == t.column_names);
  CHECK(back.rows == t.rows);
  // Unquoted fields stay unquoted.
  CHECK(emitted.find("plain,ok,4\n") != std::string::npos);
}

TEST_CASE("load_csv names the table after the file stem") {
  fs::path dir = make_temp_dir("stem");
  write_file(dir / "sales_2020.csv", "a,b\n1,2\n");
  Table t = load_csv(dir / "sales_2020.csv");
  CHECK(t.name == "sales_2020");
  fs::remove_all(dir);
}

TEST_CASE("load_dir loads sorted tables and builds profiles") {
  fs::path dir = make_temp_dir("ok");
  write_file(dir / "b.csv", "x\n1\n");
  write_file(dir / "a.csv", "y\n2\n");
  write_file(dir / "ignored.txt", "not a csv");
  ProjectContext ctx = ProjectContext::load_dir(dir);
  REQUIRE(ctx.size() == 2);
  CHECK(ctx.tables()[0].name == "a");
  CHECK(ctx.tables()[1].name == "b");
  CHECK(ctx.name() == dir.filename().string());
  auto profile = ctx.profile(ctx.tables()[0]);
  REQUIRE(profile != nullptr);
  CHECK(profile->kinds[0] == ColumnKind::integer);
  CHECK(profile->domains[0] == std::set<std::string>{"2"});
  // Memoized: the same content returns the same profile object.
  CHECK(ctx.profile(ctx.tables()[0]).get() == profile.get());
  fs::remove_all(dir);
}

TEST_CASE("load_dir rejects projects with fewer than two tables") {
  fs::path dir = make_temp_dir("small");
  write_file(dir / "only.csv", "a\n1\n");
  try {
    ProjectContext::load_dir(dir);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::not_enough_tables);
  }
  fs::remove_all(dir);
}

TEST_CASE("load_dir aggregates every unreadable file into one error") {
  fs::path dir = make_temp_dir("bad");
  write_file(dir / "good.csv", "a\n1\n");
  write_file(dir / "empty1.csv", "");
  write_file(dir / "empty2.csv", "h1,h2\n");
  try {
    ProjectContext::load_dir(dir);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::bad_input_file);
    std::string msg = e.what();
    CHECK(msg.find("empty1.csv") != std::string::npos);
    CHECK(msg.find("empty2.csv") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("load_dir rejects a path that is not a directory") {
  try {
    ProjectContext::load_dir(fs::temp_directory_path() / "no_such_dir_here");
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.status() == Status::bad_input_file);
  }
}

TEST_CASE("profile header kind counters split numeric, float and date headers") {
  Table t = parse_csv("2010,2011,3.5,2010-01-01,name\n1,2,3,4,5\n", "heads");
  ProjectContext ctx({t}, "p");
  auto profile = ctx.profile(ctx.tables()[0]);
  CHECK(profile->numeric_headers == 2);
  CHECK(profile->float_headers == 1);
  CHECK(profile->datetime_headers == 1);
  CHECK(profile->header_set.count("name") == 1);
}
