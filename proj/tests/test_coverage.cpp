#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "coverage.hpp"
#include "helpers.hpp"
#include "util.hpp"

using namespace covagent;
using covagent_test::fresh_dir;

namespace {

CoverageDatabase db_from_hits(const std::vector<std::pair<std::string, long long>>& entries) {
  CoverageDatabase db;
  for (const auto& [id, hits] : entries) {
    db.add_point(CoveragePoint{id, PointKind::Functional, hits});
  }
  return db;
}

}  // namespace

TEST_CASE("canonical parse reads one point per line") {
  CoverageDatabase db = parse_canonical("line top.sv:12 3\n", "test");
  REQUIRE(db.size() == 1);
  const CoveragePoint& point = db.points().at("top.sv:12");
  CHECK(point.kind == PointKind::Line);
  CHECK(point.hits == 3);
  CHECK(point.covered());
  CHECK(db.percentage() == doctest::Approx(100.0));
}

TEST_CASE("canonical parse ignores comments and blank lines") {
  CoverageDatabase db = parse_canonical("# header\n\nbranch b.1 0\n  \nfsm f.1 2\n", "test");
  CHECK(db.size() == 2);
  CHECK(db.covered_count() == 1);
}

TEST_CASE("empty input parses to an empty database at zero percent") {
  CoverageDatabase db = parse_canonical("", "test");
  CHECK(db.size() == 0);
  CHECK(db.percentage() == doctest::Approx(0.0));
}

TEST_CASE("duplicate id cites both declaration lines") {
  const std::string text = "line a 1\nline b 1\nline c 1\nline d 1\n# pad\nline e 1\n"
                           "line f 1\nline g 1\nline d 9\n";
  try {
    parse_canonical(text, "dup.covdb");
    FAIL("expected a parse error");
  } catch (const Error& error) {
    CHECK(error.kind() == ErrorKind::Parse);
    const std::string what = error.what();
    CHECK(what.find("line 9") != std::string::npos);
    CHECK(what.find("line 4") != std::string::npos);
    CHECK(what.find("'d'") != std::string::npos);
  }
}

TEST_CASE("unknown kind and malformed hits are parse errors") {
  CHECK_THROWS_AS(parse_canonical("statement s 1\n", "test"), Error);
  CHECK_THROWS_AS(parse_canonical("line ok notanumber\n", "test"), Error);
  CHECK_THROWS_AS(parse_canonical("line missing-hits\n", "test"), Error);
  CHECK_THROWS_AS(parse_canonical("line neg -2\n", "test"), Error);
}

TEST_CASE("info-style input normalizes to line points and sums repeats") {
  const std::string text =
      "SF:src/top.sv\nDA:10,1\nDA:11,0\nDA:10,4\nend_of_record\n"
      "SF:src/sub.sv\nDA:3,2\nend_of_record\n";
  CoverageDatabase db = parse_info(text, "test.info");
  REQUIRE(db.size() == 3);
  CHECK(db.points().at("src/top.sv:10").hits == 5);
  CHECK(db.points().at("src/top.sv:11").hits == 0);
  CHECK(db.points().at("src/sub.sv:3").hits == 2);
  CHECK_THROWS_AS(parse_info("DA:1,1\n", "test.info"), Error);
}

TEST_CASE("merge sums hits over the shared universe") {
  CoverageDatabase a = db_from_hits({{"A", 1}, {"B", 0}, {"C", 0}});
  CoverageDatabase b = db_from_hits({{"A", 0}, {"B", 2}, {"C", 0}});
  CoverageDatabase c = db_from_hits({{"A", 3}, {"B", 0}, {"C", 0}});
  CoverageDatabase merged = merge(merge(a, b), c);
  CHECK(merged.points().at("A").hits == 4);
  CHECK(merged.points().at("B").hits == 2);
  CHECK(merged.points().at("C").hits == 0);
  // Covered set {A, B} of a 3-point universe.
  CHECK(merged.percentage() == doctest::Approx(200.0 / 3.0));
}

TEST_CASE("merge with an all-zero twin is an identity on the covered set") {
  CoverageDatabase a = db_from_hits({{"A", 2}, {"B", 0}});
  CoverageDatabase zero = db_from_hits({{"A", 0}, {"B", 0}});
  CoverageDatabase merged = merge(a, zero);
  CHECK(merged.covered_ids() == a.covered_ids());
  CHECK(merged.percentage() == doctest::Approx(a.percentage()));
}

TEST_CASE("merge rejects mismatched universes listing the symmetric difference") {
  CoverageDatabase a = db_from_hits({{"A", 1}, {"OnlyInFirst", 0}});
  CoverageDatabase b = db_from_hits({{"A", 1}, {"OnlyInSecond", 0}});
  try {
    merge(a, b);
    FAIL("expected a merge error");
  } catch (const Error& error) {
    CHECK(error.kind() == ErrorKind::Merge);
    const std::string what = error.what();
    CHECK(what.find("OnlyInFirst") != std::string::npos);
    CHECK(what.find("OnlyInSecond") != std::string::npos);
  }
}

TEST_CASE("merge rejects kind disagreement for a shared id") {
  CoverageDatabase a;
  a.add_point(CoveragePoint{"X", PointKind::Line, 1});
  CoverageDatabase b;
  b.add_point(CoveragePoint{"X", PointKind::Branch, 1});
  CHECK_THROWS_AS(merge(a, b), Error);
}

TEST_CASE("merge concatenates provenance in argument order") {
  CoverageDatabase a = db_from_hits({{"A", 1}});
  a.provenance().push_back(Provenance{1, 1});
  CoverageDatabase b = db_from_hits({{"A", 0}});
  b.provenance().push_back(Provenance{1, 2});
  b.provenance().push_back(Provenance{2, 1});
  CoverageDatabase merged = merge(a, b);
  REQUIRE(merged.provenance().size() == 3);
  CHECK(merged.provenance()[0].iteration == 1);
  CHECK(merged.provenance()[0].seed == 1);
  CHECK(merged.provenance()[2].iteration == 2);
}

TEST_CASE("merge properties hold on randomized databases") {
  std::mt19937 rng(7);
  std::vector<std::string> universe;
  for (int i = 0; i < 30; ++i) {
    universe.push_back("p" + std::to_string(i));
  }
  auto random_db = [&] {
    CoverageDatabase db;
    for (const std::string& id : universe) {
      db.add_point(CoveragePoint{id, PointKind::Functional,
                                 static_cast<long long>(rng() % 3 == 0 ? rng() % 5 : 0)});
    }
    return db;
  };
  for (int trial = 0; trial < 25; ++trial) {
    CoverageDatabase a = random_db();
    CoverageDatabase b = random_db();
    CoverageDatabase c = random_db();
    CHECK(merge(a, b).covered_ids() == merge(b, a).covered_ids());
    CHECK(merge(merge(a, b), c).covered_ids() == merge(a, merge(b, c)).covered_ids());
    CoverageDatabase self = merge(a, a);
    CHECK(self.covered_ids() == a.covered_ids());
    CHECK(self.percentage() == doctest::Approx(a.percentage()));
    CHECK(merge(a, b).percentage() >= std::max(a.percentage(), b.percentage()) - 1e-12);
  }
}

TEST_CASE("snapshot round trip preserves points and provenance") {
  CoverageDatabase db;
  db.add_point(CoveragePoint{"m.alpha", PointKind::Functional, 4});
  db.add_point(CoveragePoint{"m.beta", PointKind::Fsm, 0});
  db.add_point(CoveragePoint{"top.sv:7", PointKind::Line, 1});
  db.provenance().push_back(Provenance{2, 5});
  const auto dir = fresh_dir("coverage-snapshot");
  const auto path = dir / "round.covdb";
  snapshot(db, path);
  CoverageDatabase loaded = load_snapshot(path);
  REQUIRE(loaded.size() == db.size());
  for (const auto& [id, point] : db.points()) {
    CHECK(loaded.points().at(id).hits == point.hits);
    CHECK(loaded.points().at(id).kind == point.kind);
  }
  REQUIRE(loaded.provenance().size() == 1);
  CHECK(loaded.provenance()[0].iteration == 2);
  CHECK(loaded.provenance()[0].seed == 5);
}

TEST_CASE("malformed provenance header is a parse error") {
  const auto dir = fresh_dir("coverage-badprov");
  const auto path = dir / "bad.covdb";
  write_text_file(path, "#!provenance 1\nline a 1\n");
  CHECK_THROWS_AS(load_snapshot(path), Error);
}

TEST_CASE("point ids group by file line or dotted prefix") {
  PointLocation file_loc = locate_point("src/top.sv:12");
  CHECK(file_loc.group == "src/top.sv");
  CHECK(file_loc.has_line);
  CHECK(file_loc.line == 12);
  CHECK(locate_point("ctrl.mode_idle").group == "ctrl");
  CHECK(locate_point("a.b.c").group == "a.b");
  CHECK(locate_point("flat").group == "flat");
}

TEST_CASE("feedback reports target reached at 100 percent") {
  CoverageDatabase db = db_from_hits({{"g.a", 1}, {"g.b", 2}});
  const std::string text = feedback(db, SourceIndex{}, 10);
  CHECK(text.find("coverage 100.00% (2/2 points covered)") != std::string::npos);
  CHECK(text.find("coverage target reached") != std::string::npos);
  CHECK(text.find("uncovered points (") == std::string::npos);
}

TEST_CASE("feedback orders groups by descending uncovered count") {
  CoverageDatabase db = db_from_hits({{"big.a", 0},
                                      {"big.b", 0},
                                      {"big.c", 0},
                                      {"big.d", 0},
                                      {"big.e", 0},
                                      {"small.x", 0},
                                      {"small.y", 0},
                                      {"small.z", 0},
                                      {"done.ok", 1}});
  const std::string text = feedback(db, SourceIndex{}, 10);
  const auto big_pos = text.find("group big (5 uncovered):");
  const auto small_pos = text.find("group small (3 uncovered):");
  REQUIRE(big_pos != std::string::npos);
  REQUIRE(small_pos != std::string::npos);
  CHECK(big_pos < small_pos);
}

TEST_CASE("feedback ties between equal groups break lexicographically") {
  CoverageDatabase db = db_from_hits({{"zeta.a", 0}, {"alpha.a", 0}});
  const std::string text = feedback(db, SourceIndex{}, 10);
  CHECK(text.find("group alpha") < text.find("group zeta"));
}

TEST_CASE("feedback truncates groups at the limit with an overflow marker") {
  CoverageDatabase db = db_from_hits(
      {{"g.p1", 0}, {"g.p2", 0}, {"g.p3", 0}, {"g.p4", 0}, {"g.p5", 0}});
  const std::string text = feedback(db, SourceIndex{}, 2);
  CHECK(text.find("g.p1") != std::string::npos);
  CHECK(text.find("g.p2") != std::string::npos);
  CHECK(text.find("g.p3") == std::string::npos);
  CHECK(text.find("+3 more") != std::string::npos);
}

TEST_CASE("feedback annotates points from the source index") {
  CoverageDatabase db = db_from_hits({{"src/top.sv:2", 0}, {"misc.note", 0}, {"misc.bare", 0}});
  SourceIndex sources;
  sources.add_file("src/top.sv", "module top;\n  assign x = y;\nendmodule\n");
  sources.annotate("misc.note", "eq(mode, 3)");
  const std::string text = feedback(db, sources, 10);
  CHECK(text.find("assign x = y;") != std::string::npos);
  CHECK(text.find("eq(mode, 3)") != std::string::npos);
  CHECK(text.find("<source unavailable>") != std::string::npos);
}

TEST_CASE("feedback never names a covered point") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    CoverageDatabase db;
    std::vector<std::string> covered;
    for (int i = 0; i < 40; ++i) {
      const bool hit = rng() % 2 == 0;
      // Fixed-width numbering keeps every id the same length so no id can
      // appear as a substring of another in the rendered text.
      std::string id = "grp" + std::to_string(i % 5) + ".pt" + (i < 10 ? "0" : "") +
                       std::to_string(i);
      db.add_point(CoveragePoint{id, PointKind::Functional, hit ? 1 : 0});
      if (hit) {
        covered.push_back(id);
      }
    }
    const std::string text = feedback(db, SourceIndex{}, 50);
    for (const std::string& id : covered) {
      CHECK(text.find(id) == std::string::npos);
    }
  }
}

TEST_CASE("feedback rejects empty databases and non-positive limits") {
  CHECK_THROWS_AS(feedback(CoverageDatabase{}, SourceIndex{}, 10), Error);
  CoverageDatabase db = db_from_hits({{"a", 0}});
  CHECK_THROWS_AS(feedback(db, SourceIndex{}, 0), Error);
}

TEST_CASE("database json round trip") {
  CoverageDatabase db = db_from_hits({{"x.a", 3}, {"x.b", 0}});
  db.provenance().push_back(Provenance{1, 4});
  CoverageDatabase loaded = CoverageDatabase::from_json(db.to_json());
  CHECK(loaded.points().at("x.a").hits == 3);
  CHECK(loaded.points().at("x.b").hits == 0);
  REQUIRE(loaded.provenance().size() == 1);
  CHECK(loaded.provenance()[0].seed == 4);
}
