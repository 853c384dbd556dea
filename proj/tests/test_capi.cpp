#include <doctest.h>

#include <covagent/covagent.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "helpers.hpp"

using covagent_test::fixture_path;
using covagent_test::fresh_dir;

namespace {

// Owned C string with automatic release.
struct OwnedText {
  char* value = nullptr;
  ~OwnedText() { covagent_string_free(value); }
  std::string str() const { return value == nullptr ? std::string() : std::string(value); }
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Loads the fixture config with the workspace redirected to a fresh dir.
covagent_config* fixture_config(const std::filesystem::path& workspace) {
  covagent_config* config = nullptr;
  REQUIRE(covagent_config_load(fixture_path("fixture.config.json").c_str(), &config) ==
          COVAGENT_OK);
  REQUIRE(config != nullptr);
  REQUIRE(covagent_config_set_workspace(config, workspace.c_str()) == COVAGENT_OK);
  return config;
}

}  // namespace

TEST_CASE("the library reports a version and never a null error string") {
  REQUIRE(covagent_version() != nullptr);
  CHECK(std::string(covagent_version()) == "1.0.0");
  CHECK(covagent_last_error() != nullptr);
}

TEST_CASE("null and missing-file config arguments are rejected") {
  covagent_config* config = nullptr;
  CHECK(covagent_config_load(nullptr, &config) == COVAGENT_ERR_INVALID);
  CHECK(covagent_config_load("whatever.json", nullptr) == COVAGENT_ERR_INVALID);

  CHECK(covagent_config_load("/nonexistent/covagent.json", &config) == COVAGENT_ERR_IO);
  CHECK(config == nullptr);
  CHECK(std::strlen(covagent_last_error()) > 0);
}

TEST_CASE("a config missing required keys fails as a config error") {
  const auto dir = fresh_dir("capi-bad-config");
  write_file(dir / "bad.json", "{\"spec_path\": \"spec.md\"}\n");
  covagent_config* config = nullptr;
  CHECK(covagent_config_load((dir / "bad.json").string().c_str(), &config) ==
        COVAGENT_ERR_CONFIG);
  CHECK(config == nullptr);
}

TEST_CASE("setters validate and reject out-of-range values") {
  const auto ws = fresh_dir("capi-setters");
  covagent_config* config = fixture_config(ws / "work");
  CHECK(covagent_config_set_model(config, "gpt-5.2-mini") == COVAGENT_OK);
  CHECK(covagent_config_set_token_budget(config, 123456) == COVAGENT_OK);
  CHECK(covagent_config_set_max_iterations(config, 7) == COVAGENT_OK);
  CHECK(covagent_config_use_mock_simulator(config) == COVAGENT_OK);

  CHECK(covagent_config_set_token_budget(config, 0) == COVAGENT_ERR_CONFIG);
  CHECK(covagent_config_set_max_iterations(config, -3) == COVAGENT_ERR_CONFIG);
  CHECK(covagent_config_set_model(nullptr, "m") == COVAGENT_ERR_INVALID);
  CHECK(covagent_config_set_workspace(config, nullptr) == COVAGENT_ERR_INVALID);
  covagent_config_free(config);
  covagent_config_free(nullptr);
}

TEST_CASE("a scripted replay through the c api reproduces the recorded run") {
  const auto ws = fresh_dir("capi-replay");
  covagent_config* config = fixture_config(ws);
  covagent_run* run = nullptr;
  REQUIRE(covagent_replay(config, fixture_path("fixture.script.json").c_str(), &run) ==
          COVAGENT_OK);
  REQUIRE(run != nullptr);

  CHECK(covagent_run_coverage_percent(run) == doctest::Approx(1000.0 / 12.0).epsilon(1e-9));
  CHECK(covagent_run_covered_points(run) == 10);
  CHECK(covagent_run_total_points(run) == 12);
  CHECK(covagent_run_iterations(run) == 2);
  CHECK(std::string(covagent_run_termination_reason(run)) == "iteration_limit");
  CHECK(covagent_run_total_tokens(run) == 10960);
  CHECK(covagent_run_cost_dollars(run) == doctest::Approx(0.04835).epsilon(1e-9));
  CHECK(covagent_run_residual_holes(run) == 2);
  CHECK(covagent_run_ceiling_holes(run) == 2);
  CHECK(covagent_run_frontier_holes(run) == 0);
  CHECK(std::string(covagent_run_workspace(run)).find("capi-replay") != std::string::npos);

  OwnedText profile;
  REQUIRE(covagent_run_profile_text(run, &profile.value) == COVAGENT_OK);
  CHECK(profile.str().find("total billed: 10960 (input 7000, output 1360, reasoning 2600)") !=
        std::string::npos);
  CHECK(profile.str().find("llm calls:    4") != std::string::npos);
  CHECK(profile.str().find("cost:         $0.0483") != std::string::npos);

  OwnedText report;
  REQUIRE(covagent_run_report_text(run, &report.value) == COVAGENT_OK);
  CHECK(report.str().find("final coverage:   83.33% (10/12 points)") != std::string::npos);
  CHECK(report.str().find("coverage hole taxonomy: 2 residual holes (ceiling 2, frontier 0)") !=
        std::string::npos);

  OwnedText exclusions;
  REQUIRE(covagent_run_exclusions_text(run, &exclusions.value) == COVAGENT_OK);
  CHECK(exclusions.str().find("exclude bound.cyc_max # M2") != std::string::npos);
  CHECK(exclusions.str().find("exclude tied.dbg_active # M1") != std::string::npos);

  OwnedText curve;
  REQUIRE(covagent_run_curve_csv(run, &curve.value) == COVAGENT_OK);
  CHECK(curve.str() ==
        "cumulative_tokens,coverage_percent\n"
        "0,0.0000\n"
        "1100,0.0000\n"
        "3720,75.0000\n"
        "6960,83.3333\n"
        "10960,83.3333\n");

  // The replay left the workspace reports on disk; the CSV matches the
  // accessor byte for byte.
  for (const char* artifact :
       {"state.json", "logs/trace.ndjson", "cov/final.covdb", "cov/cumulative.covdb",
        "reports/tokens.json", "reports/curve.csv", "reports/report.json",
        "reports/report.txt", "reports/exclusions.txt"}) {
    CHECK(std::filesystem::exists(ws / artifact));
  }
  CHECK(read_file(ws / "reports/curve.csv") == curve.str());
  CHECK(read_file(ws / "reports/exclusions.txt") == exclusions.str());

  covagent_run_free(run);
  covagent_config_free(config);
}

TEST_CASE("a checkpoint reloads into the same summary numbers") {
  const auto ws = fresh_dir("capi-reload");
  covagent_config* config = fixture_config(ws);
  covagent_run* run = nullptr;
  REQUIRE(covagent_replay(config, fixture_path("fixture.script.json").c_str(), &run) ==
          COVAGENT_OK);
  covagent_run_free(run);
  covagent_config_free(config);

  covagent_run* reloaded = nullptr;
  REQUIRE(covagent_load_state((ws / "state.json").string().c_str(), &reloaded) == COVAGENT_OK);
  REQUIRE(reloaded != nullptr);
  CHECK(covagent_run_coverage_percent(reloaded) ==
        doctest::Approx(1000.0 / 12.0).epsilon(1e-9));
  CHECK(covagent_run_iterations(reloaded) == 2);
  CHECK(std::string(covagent_run_termination_reason(reloaded)) == "iteration_limit");
  CHECK(covagent_run_residual_holes(reloaded) == 2);
  CHECK(covagent_run_ceiling_holes(reloaded) == 2);
  covagent_run_free(reloaded);

  covagent_run* missing = nullptr;
  CHECK(covagent_load_state("/nonexistent/state.json", &missing) == COVAGENT_ERR_IO);
  CHECK(missing == nullptr);
}

TEST_CASE("replay argument errors leave the out pointer null") {
  const auto ws = fresh_dir("capi-replay-errors");
  covagent_config* config = fixture_config(ws);
  covagent_run* run = nullptr;
  CHECK(covagent_replay(nullptr, "script.json", &run) == COVAGENT_ERR_INVALID);
  CHECK(covagent_replay(config, nullptr, &run) == COVAGENT_ERR_INVALID);
  CHECK(covagent_replay(config, "/nonexistent/script.json", &run) == COVAGENT_ERR_IO);
  CHECK(run == nullptr);
  covagent_config_free(config);
}

TEST_CASE("run accessors tolerate a null run handle") {
  CHECK(covagent_run_coverage_percent(nullptr) == 0.0);
  CHECK(covagent_run_covered_points(nullptr) == 0);
  CHECK(covagent_run_total_points(nullptr) == 0);
  CHECK(covagent_run_iterations(nullptr) == 0);
  CHECK(std::string(covagent_run_termination_reason(nullptr)).empty());
  CHECK(covagent_run_total_tokens(nullptr) == 0);
  CHECK(covagent_run_cost_dollars(nullptr) == 0.0);
  CHECK(covagent_run_residual_holes(nullptr) == 0);
  CHECK(covagent_run_ceiling_holes(nullptr) == 0);
  CHECK(covagent_run_frontier_holes(nullptr) == 0);
  CHECK(std::string(covagent_run_workspace(nullptr)).empty());

  char* text = nullptr;
  CHECK(covagent_run_profile_text(nullptr, &text) == COVAGENT_ERR_INVALID);
  CHECK(covagent_run_report_text(nullptr, &text) == COVAGENT_ERR_INVALID);
  CHECK(covagent_run_exclusions_text(nullptr, &text) == COVAGENT_ERR_INVALID);
  CHECK(covagent_run_curve_csv(nullptr, &text) == COVAGENT_ERR_INVALID);
  covagent_run_free(nullptr);
  covagent_string_free(nullptr);
}

TEST_CASE("merging snapshot files sums per-point hits over one universe") {
  const auto dir = fresh_dir("capi-merge");
  write_file(dir / "a.covdb", "line a 0\nbranch b 2\ntoggle c 1\n");
  write_file(dir / "b.covdb", "line a 3\nbranch b 0\ntoggle c 4\n");
  const std::string a = (dir / "a.covdb").string();
  const std::string b = (dir / "b.covdb").string();
  const std::string out = (dir / "merged.covdb").string();
  const char* inputs[] = {a.c_str(), b.c_str()};
  REQUIRE(covagent_merge_files(inputs, 2, out.c_str()) == COVAGENT_OK);

  const std::string merged = read_file(out);
  CHECK(merged.find("line a 3") != std::string::npos);
  CHECK(merged.find("branch b 2") != std::string::npos);
  CHECK(merged.find("toggle c 5") != std::string::npos);

  // Mismatched universes refuse to merge.
  write_file(dir / "c.covdb", "line a 1\n");
  const std::string c = (dir / "c.covdb").string();
  const char* mismatched[] = {a.c_str(), c.c_str()};
  CHECK(covagent_merge_files(mismatched, 2, out.c_str()) == COVAGENT_ERR_MERGE);

  CHECK(covagent_merge_files(nullptr, 1, out.c_str()) == COVAGENT_ERR_INVALID);
  CHECK(covagent_merge_files(inputs, 0, out.c_str()) == COVAGENT_ERR_INVALID);
  CHECK(covagent_merge_files(inputs, 2, nullptr) == COVAGENT_ERR_INVALID);
}
