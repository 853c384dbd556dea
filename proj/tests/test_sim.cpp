#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "coverage.hpp"
#include "helpers.hpp"
#include "sim.hpp"
#include "util.hpp"

using namespace covagent;
using covagent_test::fixture_path;
using covagent_test::fresh_dir;

namespace {

DesignManifest tiny_manifest(const std::string& points_json) {
  const std::string text = R"({
    "name": "tiny",
    "inputs": [{"name": "a", "width": 8}, {"name": "b", "width": 1}],
    "points": )" + points_json + "}";
  return DesignManifest::from_json(Json::parse(text), "tiny");
}

// Runs one mock simulation of `script` and returns the resulting database.
CoverageDatabase simulate_once(const DesignManifest& manifest, const std::string& script,
                               long long seed, const std::string& tag) {
  const auto dir = fresh_dir("sim-" + tag);
  const auto tb = dir / "tb.s";
  write_text_file(tb, script);
  MockSimulator sim(manifest);
  CompileResult compiled = sim.compile(tb);
  REQUIRE_MESSAGE(compiled.ok, compiled.log);
  const auto out = dir / "out.covdb";
  SimResult result = sim.simulate(seed, out);
  REQUIRE_MESSAGE(result.ok, result.log);
  return load_snapshot(out);
}

}  // namespace

TEST_CASE("lcg produces the frozen reference draws") {
  Lcg lcg1(1);
  CHECK(lcg1.next(8) == 124);
  CHECK(lcg1.next(8) == 27);
  CHECK(lcg1.next(8) == 14);
  Lcg lcg2(2);
  CHECK(lcg2.next(8) == 169);
  CHECK(lcg2.next(8) == 4);
  CHECK(lcg2.next(8) == 3);
  Lcg bit(1);
  const std::vector<std::uint64_t> expected{0, 1, 0, 1, 0, 1};
  for (std::uint64_t want : expected) {
    CHECK(bit.next(1) == want);
  }
}

TEST_CASE("mask_to_width truncates to the declared width") {
  CHECK(mask_to_width(0x1FF, 8) == 0xFF);
  CHECK(mask_to_width(0x3, 1) == 1);
  CHECK(mask_to_width(~0ULL, 64) == ~0ULL);
  CHECK(mask_to_width(0, 32) == 0);
}

TEST_CASE("manifest fixture loads with twelve points") {
  DesignManifest manifest = DesignManifest::load(fixture_path("fixture.manifest.json"));
  CHECK(manifest.name == "fixture_core");
  CHECK(manifest.inputs.size() == 5);
  CHECK(manifest.internals.size() == 2);
  CHECK(manifest.points.size() == 12);
  CHECK(manifest.universe().size() == 12);
  CHECK(manifest.universe().percentage() == doctest::Approx(0.0));
}

TEST_CASE("manifest validation rejects structural errors") {
  auto parse = [](const std::string& text) {
    return DesignManifest::from_json(Json::parse(text), "inline");
  };
  // Width out of bounds.
  CHECK_THROWS_AS(
      parse(R"({"name":"m","inputs":[{"name":"a","width":65}],)"
            R"("points":[{"id":"p","predicate":{"op":"eq","signal":"a","value":0}}]})"),
      Error);
  // Duplicate signal name across inputs and internals.
  CHECK_THROWS_AS(
      parse(R"({"name":"m","inputs":[{"name":"a","width":1}],)"
            R"("internals":[{"name":"a","width":1,"kind":"tied","value":0}],)"
            R"("points":[{"id":"p","predicate":{"op":"eq","signal":"a","value":0}}]})"),
      Error);
  // Predicate references an undeclared signal.
  CHECK_THROWS_AS(
      parse(R"({"name":"m","inputs":[{"name":"a","width":1}],)"
            R"("points":[{"id":"p","predicate":{"op":"eq","signal":"ghost","value":0}}]})"),
      Error);
  // Empty range.
  CHECK_THROWS_AS(
      parse(R"({"name":"m","inputs":[{"name":"a","width":8}],)"
            R"("points":[{"id":"p","predicate":{"op":"range","signal":"a","lo":5,"hi":2}}]})"),
      Error);
  // Tied value wider than the signal.
  CHECK_THROWS_AS(
      parse(R"({"name":"m","inputs":[{"name":"a","width":1}],)"
            R"("internals":[{"name":"t","width":1,"kind":"tied","value":2}],)"
            R"("points":[{"id":"p","predicate":{"op":"eq","signal":"a","value":0}}]})"),
      Error);
  // Unknown flag.
  CHECK_THROWS_AS(
      parse(R"({"name":"m","inputs":[{"name":"a","width":1}],)"
            R"("points":[{"id":"p","predicate":{"op":"eq","signal":"a","value":0},)"
            R"("flags":["mystery"]}]})"),
      Error);
}

TEST_CASE("stimulus script parse handles drive and random directives") {
  StimulusScript script = StimulusScript::parse("drive a=1 b=0\nrandom 4\ndrive a=255\n", "tb");
  REQUIRE(script.directives.size() == 3);
  CHECK(script.directives[0].kind == StimulusScript::Directive::Kind::Drive);
  CHECK(script.directives[0].assigns.size() == 2);
  CHECK(script.directives[1].kind == StimulusScript::Directive::Kind::Random);
  CHECK(script.directives[1].count == 4);
  CHECK(script.total_vectors() == 6);
}

TEST_CASE("stimulus script parse errors cite the offending line") {
  auto check_error = [](const std::string& text, const std::string& needle) {
    try {
      StimulusScript::parse(text, "tb");
      FAIL_CHECK("expected parse error for: " << text);
    } catch (const Error& error) {
      CHECK(std::string(error.what()).find(needle) != std::string::npos);
    }
  };
  check_error("drive\n", "line 1");
  check_error("drive a=1\nrandom 0\n", "line 2");
  check_error("random -3\n", "line 1");
  check_error("drive a==1\n", "line 1");
  check_error("jump a=1\n", "line 1");
}

TEST_CASE("script validation flags undeclared and internal signals") {
  DesignManifest manifest = DesignManifest::load(fixture_path("fixture.manifest.json"));
  StimulusScript bad = StimulusScript::parse("drive ghost=1\ndrive tied_dbg=1\n", "tb");
  std::vector<std::string> errors = validate_script(manifest, bad);
  REQUIRE(errors.size() == 2);
  CHECK(errors[0].find("unknown signal") != std::string::npos);
  CHECK(errors[1].find("internal") != std::string::npos);
  StimulusScript good = StimulusScript::parse("drive mode=1 data=3\nrandom 2\n", "tb");
  CHECK(validate_script(manifest, good).empty());
}

TEST_CASE("direct eq predicate satisfaction") {
  DesignManifest manifest =
      tiny_manifest(R"([{"id": "P1", "predicate": {"op": "eq", "signal": "a", "value": 1}}])");
  CoverageDatabase hit = simulate_once(manifest, "drive a=1\n", 1, "eq-hit");
  CHECK(hit.points().at("P1").hits == 1);
  CHECK(hit.percentage() == doctest::Approx(100.0));
  CoverageDatabase miss = simulate_once(manifest, "drive a=0\n", 1, "eq-miss");
  CHECK(miss.points().at("P1").hits == 0);
  CHECK(miss.percentage() == doctest::Approx(0.0));
}

TEST_CASE("seq predicate needs consecutive vectors") {
  const std::string points = R"([{"id": "S", "kind": "fsm", "predicate": {"op": "seq",
    "steps": [{"signal": "a", "value": 1}, {"signal": "b", "value": 1}]}}])";
  DesignManifest manifest = tiny_manifest(points);
  // a=1 then b=1 on the next vector: hit.
  CoverageDatabase hit = simulate_once(manifest, "drive a=1 b=0\ndrive a=0 b=1\n", 1, "seq-hit");
  CHECK(hit.points().at("S").hits == 1);
  // Both on the same single vector only: no two-vector window matches.
  CoverageDatabase miss = simulate_once(manifest, "drive a=1 b=1\n", 1, "seq-miss");
  CHECK(miss.points().at("S").hits == 0);
}

TEST_CASE("seq matches count overlapping windows") {
  const std::string points = R"([{"id": "S", "kind": "fsm", "predicate": {"op": "seq",
    "steps": [{"signal": "b", "value": 1}, {"signal": "b", "value": 1}]}}])";
  DesignManifest manifest = tiny_manifest(points);
  // b=1 for four consecutive vectors: windows at offsets 0,1,2.
  CoverageDatabase db =
      simulate_once(manifest, "drive b=1\ndrive b=1\ndrive b=1\ndrive b=1\n", 1, "seq-overlap");
  CHECK(db.points().at("S").hits == 3);
}

TEST_CASE("undriven signals hold their previous value") {
  const std::string points = R"([{"id": "H", "kind": "fsm", "predicate": {"op": "seq",
    "steps": [{"signal": "a", "value": 7}, {"signal": "a", "value": 7}]}}])";
  DesignManifest manifest = tiny_manifest(points);
  // Second directive drives only b; a holds 7 so the two-vector seq matches.
  CoverageDatabase db = simulate_once(manifest, "drive a=7\ndrive b=1\n", 1, "hold");
  CHECK(db.points().at("H").hits == 1);
}

TEST_CASE("counter internals advance once per vector") {
  const std::string text = R"({
    "name": "cnt",
    "inputs": [{"name": "a", "width": 1}],
    "internals": [{"name": "t", "width": 8, "kind": "counter", "value": 250}],
    "points": [
      {"id": "wrap", "predicate": {"op": "eq", "signal": "t", "value": 2}},
      {"id": "start", "predicate": {"op": "eq", "signal": "t", "value": 250}}
    ]})";
  DesignManifest manifest = DesignManifest::from_json(Json::parse(text), "cnt");
  // Vectors t=0..9 give counter values 250..255,0,1,2,3: both points hit.
  CoverageDatabase db = simulate_once(manifest, "random 10\n", 3, "counter");
  CHECK(db.points().at("start").hits == 1);
  CHECK(db.points().at("wrap").hits == 1);
}

TEST_CASE("random draws follow declaration order one per input per vector") {
  // Inputs a(8) then b(1): vector 1 draws a=124 then b=1 with seed 1
  // (second 1-bit draw of the stream is 27 & 1 = 1).
  const std::string points = R"([
    {"id": "A", "predicate": {"op": "eq", "signal": "a", "value": 124}},
    {"id": "B", "predicate": {"op": "eq", "signal": "b", "value": 1}}])";
  DesignManifest manifest = tiny_manifest(points);
  CoverageDatabase db = simulate_once(manifest, "random 1\n", 1, "order");
  CHECK(db.points().at("A").hits == 1);
  CHECK(db.points().at("B").hits == 1);
}

TEST_CASE("identical manifest script and seed give identical snapshot bytes") {
  DesignManifest manifest = DesignManifest::load(fixture_path("fixture.manifest.json"));
  const std::string script = "drive mode=1 data=9\nrandom 6\n";
  const auto dir = fresh_dir("sim-determinism");
  const auto tb = dir / "tb.s";
  write_text_file(tb, script);
  std::string previous;
  for (int round = 0; round < 3; ++round) {
    MockSimulator sim(manifest);
    REQUIRE(sim.compile(tb).ok);
    const auto out = dir / ("out" + std::to_string(round) + ".covdb");
    REQUIRE(sim.simulate(42, out).ok);
    const std::string bytes = read_text_file(out);
    if (round > 0) {
      CHECK(bytes == previous);
    }
    previous = bytes;
  }
}

TEST_CASE("merged coverage is independent of seed order") {
  DesignManifest manifest = DesignManifest::load(fixture_path("fixture.manifest.json"));
  const auto dir = fresh_dir("sim-permutation");
  const auto tb = dir / "tb.s";
  write_text_file(tb, "random 5\n");
  MockSimulator sim(manifest);
  REQUIRE(sim.compile(tb).ok);
  std::vector<long long> seeds{1, 2, 3, 4, 5};
  std::vector<CoverageDatabase> dbs;
  for (long long seed : seeds) {
    const auto out = dir / ("s" + std::to_string(seed) + ".covdb");
    REQUIRE(sim.simulate(seed, out).ok);
    dbs.push_back(load_snapshot(out));
  }
  CoverageDatabase forward = dbs[0];
  for (std::size_t i = 1; i < dbs.size(); ++i) {
    forward = merge(forward, dbs[i]);
  }
  CoverageDatabase reverse = dbs[4];
  for (int i = 3; i >= 0; --i) {
    reverse = merge(reverse, dbs[static_cast<std::size_t>(i)]);
  }
  CHECK(forward.covered_ids() == reverse.covered_ids());
  CHECK(forward.percentage() == doctest::Approx(reverse.percentage()));
}

TEST_CASE("compile rejects invalid scripts as compile errors") {
  DesignManifest manifest = DesignManifest::load(fixture_path("fixture.manifest.json"));
  const auto dir = fresh_dir("sim-compile-fail");
  const auto tb = dir / "tb.s";
  write_text_file(tb, "drive ghost=1\n");
  MockSimulator sim(manifest);
  CompileResult result = sim.compile(tb);
  CHECK_FALSE(result.ok);
  CHECK(result.log.find("unknown signal") != std::string::npos);
  // Simulation without a successful compile fails.
  SimResult sim_result = sim.simulate(1, dir / "out.covdb");
  CHECK_FALSE(sim_result.ok);
}

TEST_CASE("vector cap aborts runaway scripts with a timeout note") {
  DesignManifest manifest =
      tiny_manifest(R"([{"id": "P", "predicate": {"op": "eq", "signal": "a", "value": 1}}])");
  const auto dir = fresh_dir("sim-cap");
  const auto tb = dir / "tb.s";
  write_text_file(tb, "random 100\n");
  MockSimulator sim(manifest, 50);
  REQUIRE(sim.compile(tb).ok);
  SimResult result = sim.simulate(1, dir / "out.covdb");
  CHECK_FALSE(result.ok);
  CHECK(result.timed_out);
}

TEST_CASE("source index annotates points with predicate descriptions") {
  DesignManifest manifest = DesignManifest::load(fixture_path("fixture.manifest.json"));
  MockSimulator sim(manifest);
  SourceIndex sources = sim.source_index();
  auto idle = sources.lookup("ctrl.mode_idle");
  REQUIRE(idle.has_value());
  CHECK(idle->find("eq(mode, 0)") != std::string::npos);
  auto seq = sources.lookup("hs.req_then_ack");
  REQUIRE(seq.has_value());
  CHECK(seq->find("seq(") != std::string::npos);
}
