#include "toolkit.hpp"

#include <algorithm>
#include <map>

#include "lint.hpp"

namespace covagent {

namespace fs = std::filesystem;

namespace {

bool path_under(const fs::path& candidate, const fs::path& root) {
  if (candidate == root) {
    return true;
  }
  auto mismatch = std::mismatch(root.begin(), root.end(), candidate.begin(), candidate.end());
  return mismatch.first == root.end();
}

std::string coverage_brief(const CoverageDatabase& db) {
  return std::to_string(db.covered_count()) + "/" + std::to_string(db.size()) + " points (" +
         format_percent(db.percentage()) + "%)";
}

}  // namespace

Toolkit::Toolkit(const RunConfig& config, SimBackend& sim)
    : config_(config),
      sim_(sim),
      workspace_(config.workspace_dir),
      spec_file_(config.spec_path),
      design_roots_(config.design_paths),
      top_module_(top_module_name(config.top_module_header)) {}

void Toolkit::begin_batch(int completed_iterations) {
  iteration_ = completed_iterations;
  batch_cycles_ = 0;
}

fs::path Toolkit::resolve_in_workspace(const std::string& path) const {
  if (path.empty()) {
    fail(ErrorKind::Sandbox, "empty path");
  }
  fs::path p(path);
  fs::path candidate = p.is_absolute() ? p : workspace_ / p;
  // weakly_canonical resolves symlinks in every existing component, so a
  // link pointing outside the sandbox cannot smuggle a path past the check.
  return fs::weakly_canonical(candidate);
}

fs::path Toolkit::resolve_read(const std::string& path) const {
  fs::path canon = resolve_in_workspace(path);
  if (path_under(canon, fs::weakly_canonical(workspace_))) {
    return canon;
  }
  if (canon == fs::weakly_canonical(spec_file_)) {
    return canon;
  }
  for (const fs::path& root : design_roots_) {
    if (path_under(canon, fs::weakly_canonical(root))) {
      return canon;
    }
  }
  fail(ErrorKind::Sandbox,
       "path escapes the sandbox (workspace plus read-only spec/design inputs): " + path);
}

fs::path Toolkit::resolve_write(const std::string& path) const {
  fs::path canon = resolve_in_workspace(path);
  if (!path_under(canon, fs::weakly_canonical(workspace_))) {
    fail(ErrorKind::Sandbox, "write access is restricted to the workspace: " + path);
  }
  return canon;
}

bool Toolkit::is_testbench_path(const std::string& path) const {
  try {
    return path_under(resolve_in_workspace(path), fs::weakly_canonical(workspace_ / "tb"));
  } catch (const Error&) {
    return false;
  }
}

bool Toolkit::is_design_path(const std::string& path) const {
  try {
    fs::path canon = resolve_in_workspace(path);
    if (canon == fs::weakly_canonical(spec_file_)) {
      return true;
    }
    for (const fs::path& root : design_roots_) {
      if (path_under(canon, fs::weakly_canonical(root))) {
        return true;
      }
    }
  } catch (const Error&) {
  }
  return false;
}

ToolResult Toolkit::failure(const std::string& call_id, const std::string& payload) const {
  return ToolResult{call_id, false, cap_head_tail(payload, kToolResultCap), PayloadHint::ErrorLog};
}

ToolResult Toolkit::read_file(const std::string& call_id, const std::string& path) {
  try {
    fs::path canon = resolve_read(path);
    if (fs::is_directory(canon)) {
      return failure(call_id, "cannot read a directory: " + path + " (use list_directory)");
    }
    std::string content = read_text_file(canon);
    PayloadHint hint = is_design_path(path) ? PayloadHint::DesignContent : PayloadHint::Other;
    return ToolResult{call_id, true, cap_head(content, kReadFileCap), hint};
  } catch (const Error& e) {
    return failure(call_id, e.what());
  }
}

ToolResult Toolkit::write_file(const std::string& call_id, const std::string& path,
                               const std::string& content) {
  try {
    fs::path canon = resolve_write(path);
    if (path_under(canon, fs::weakly_canonical(workspace_ / "tb"))) {
      std::vector<LintViolation> violations = lint_stimulus(content, top_module_);
      if (!violations.empty()) {
        std::string payload = "stimulus constraint lint rejected " + path + ":";
        for (const LintViolation& violation : violations) {
          payload += "\n  line " + std::to_string(violation.line) + " (" + violation.rule +
                     "): " + violation.line_text;
        }
        payload +=
            "\nstimulus may drive top-level ports only; remove hierarchical references, "
            "force/release, and submodule instantiations";
        return failure(call_id, payload);
      }
    }
    std::error_code ec;
    fs::create_directories(canon.parent_path(), ec);
    write_text_file(canon, content);
    return ToolResult{call_id, true,
                      "wrote " + std::to_string(content.size()) + " bytes to " + path,
                      PayloadHint::Other};
  } catch (const Error& e) {
    return failure(call_id, e.what());
  }
}

ToolResult Toolkit::list_directory(const std::string& call_id, const std::string& path) {
  try {
    fs::path canon = resolve_read(path);
    if (!fs::exists(canon)) {
      return failure(call_id, "directory not found: " + path);
    }
    if (!fs::is_directory(canon)) {
      return failure(call_id, "not a directory: " + path);
    }
    std::vector<fs::directory_entry> entries;
    for (const fs::directory_entry& entry : fs::directory_iterator(canon)) {
      entries.push_back(entry);
    }
    std::sort(entries.begin(), entries.end(),
              [](const fs::directory_entry& a, const fs::directory_entry& b) {
                return a.path().filename() < b.path().filename();
              });
    std::string payload = "contents of " + path + ":";
    for (const fs::directory_entry& entry : entries) {
      if (entry.is_directory()) {
        payload += "\n  d " + entry.path().filename().string();
      } else {
        payload += "\n  f " + entry.path().filename().string() + " (" +
                   std::to_string(entry.is_regular_file() ? entry.file_size() : 0) + " bytes)";
      }
    }
    if (entries.empty()) {
      payload += "\n  (empty)";
    }
    return ToolResult{call_id, true, cap_head_tail(payload, kToolResultCap), PayloadHint::Other};
  } catch (const Error& e) {
    return failure(call_id, e.what());
  } catch (const fs::filesystem_error& e) {
    return failure(call_id, std::string("cannot list directory: ") + e.what());
  }
}

ToolResult Toolkit::compile_design(const std::string& call_id, const std::string& tb_path) {
  try {
    fs::path canon = resolve_read(tb_path);
    if (!fs::exists(canon)) {
      return failure(call_id, "testbench not found: " + tb_path);
    }
    CompileResult result = sim_.compile(canon);
    if (!result.ok) {
      compiled_ = false;
      std::string prefix = result.environment ? "environment error: " : "compile failed:\n";
      return failure(call_id, prefix + result.log);
    }
    compiled_ = true;
    return ToolResult{call_id, true, cap_head_tail(result.log, kToolResultCap),
                      PayloadHint::Other};
  } catch (const Error& e) {
    return failure(call_id, e.what());
  }
}

ToolResult Toolkit::run_simulation(const std::string& call_id, long long seed) {
  try {
    if (!compiled_) {
      return failure(call_id, "no successfully compiled testbench; call compile_design first");
    }
    int k = iteration_ + 1;
    std::string rel = "cov/iter" + std::to_string(k) + "_seed" + std::to_string(seed) + ".covdb";
    fs::path out = fs::weakly_canonical(workspace_) / rel;
    std::error_code ec;
    fs::create_directories(out.parent_path(), ec);
    SimResult result = sim_.simulate(seed, out);
    if (!result.ok) {
      return failure(call_id, "simulation failed (seed " + std::to_string(seed) + "):\n" +
                                  result.log);
    }
    CoverageDatabase db = load_snapshot(out);
    db.provenance().clear();
    db.provenance().push_back(Provenance{k, static_cast<int>(seed)});
    snapshot(db, out);
    return ToolResult{call_id, true,
                      cap_head_tail(result.log, kToolResultCap) + "\ncoverage written: " + rel,
                      PayloadHint::Other};
  } catch (const Error& e) {
    return failure(call_id, e.what());
  }
}

ToolResult Toolkit::parse_coverage(const std::string& call_id, const std::string& cov_path) {
  try {
    fs::path canon = resolve_read(cov_path);
    if (!fs::exists(canon)) {
      return failure(call_id, "coverage file not found: " + cov_path);
    }
    CoverageDatabase db = load_snapshot(canon);
    std::string payload = "coverage summary for " + cov_path + ":\n  total points: " +
                          std::to_string(db.size()) + "\n  covered: " + coverage_brief(db);
    std::map<std::string, int> groups;
    for (const std::string& id : db.uncovered_ids()) {
      groups[locate_point(id).group] += 1;
    }
    if (!groups.empty()) {
      std::vector<std::pair<std::string, int>> ordered(groups.begin(), groups.end());
      std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
          return a.second > b.second;
        }
        return a.first < b.first;
      });
      payload += "\n  uncovered groups:";
      std::size_t shown = std::min<std::size_t>(ordered.size(), 5);
      for (std::size_t i = 0; i < shown; ++i) {
        payload += " " + ordered[i].first + " (" + std::to_string(ordered[i].second) + ")";
      }
      if (ordered.size() > shown) {
        payload += " ...";
      }
    }
    return ToolResult{call_id, true, cap_head_tail(payload, kToolResultCap),
                      PayloadHint::CoverageResult};
  } catch (const Error& e) {
    return failure(call_id, e.what());
  }
}

ToolResult Toolkit::run_verification_cycle(const std::string& call_id,
                                           const std::string& tb_content) {
  try {
    if (batch_cycles_ >= 1) {
      return failure(call_id,
                     "only one run_verification_cycle is allowed per turn; the previous cycle in "
                     "this turn already advanced the iteration");
    }
    int k = iteration_ + 1;
    fs::path ws = fs::weakly_canonical(workspace_);
    std::string tb_rel = "tb/iter" + std::to_string(k) + ".sv";
    fs::path log_dir = ws / "logs" / ("iter" + std::to_string(k));
    std::error_code ec;
    fs::create_directories(log_dir, ec);

    // Stage 1: write the testbench (lint gate included).
    ToolResult write_result = write_file(call_id, tb_rel, tb_content);
    if (!write_result.ok) {
      return failure(call_id, "stage write_file failed: " + write_result.payload);
    }

    // Stage 2: compile.
    CompileResult compile_result = sim_.compile(ws / tb_rel);
    write_text_file(log_dir / "compile.log", compile_result.log + "\n");
    if (!compile_result.ok) {
      compiled_ = false;
      std::string prefix =
          compile_result.environment ? "environment error: " : "";
      return failure(call_id, "stage compile failed: " + prefix + compile_result.log);
    }
    compiled_ = true;

    // Stage 3: simulate once per seed.
    std::vector<fs::path> seed_paths;
    std::vector<std::string> seed_briefs;
    for (int seed = 1; seed <= config_.seeds_per_iteration; ++seed) {
      std::string rel = "cov/iter" + std::to_string(k) + "_seed" + std::to_string(seed) + ".covdb";
      fs::path out = ws / rel;
      fs::create_directories(out.parent_path(), ec);
      SimResult sim_result = sim_.simulate(seed, out);
      write_text_file(log_dir / ("sim_seed" + std::to_string(seed) + ".log"),
                      sim_result.log + "\n");
      if (!sim_result.ok) {
        return failure(call_id, "stage simulate failed (seed " + std::to_string(seed) + "): " +
                                    sim_result.log);
      }
      seed_paths.push_back(out);
    }

    // Stage 4: parse each seed's output, stamping provenance.
    std::vector<CoverageDatabase> seed_dbs;
    for (int seed = 1; seed <= config_.seeds_per_iteration; ++seed) {
      try {
        CoverageDatabase db = load_snapshot(seed_paths[static_cast<std::size_t>(seed - 1)]);
        db.provenance().clear();
        db.provenance().push_back(Provenance{k, seed});
        snapshot(db, seed_paths[static_cast<std::size_t>(seed - 1)]);
        seed_briefs.push_back("  seed " + std::to_string(seed) + ": " + coverage_brief(db));
        seed_dbs.push_back(std::move(db));
      } catch (const Error& e) {
        return failure(call_id, "stage parse_coverage failed (seed " + std::to_string(seed) +
                                    "): " + e.what());
      }
    }

    // Stage 5: merge in seed order.
    CoverageDatabase merged;
    try {
      merged = seed_dbs.front();
      for (std::size_t i = 1; i < seed_dbs.size(); ++i) {
        merged = merge(merged, seed_dbs[i]);
      }
    } catch (const Error& e) {
      return failure(call_id, std::string("stage merge failed: ") + e.what());
    }
    std::string merged_rel = "cov/iter" + std::to_string(k) + "_merged.covdb";
    snapshot(merged, ws / merged_rel);

    ++batch_cycles_;
    pending_.push_back(CycleOutcome{k, merged_rel});

    std::string payload = "verification cycle " + std::to_string(k) + " complete (" +
                          std::to_string(config_.seeds_per_iteration) + " seeds)";
    for (const std::string& brief : seed_briefs) {
      payload += "\n" + brief;
    }
    payload += "\n  merged: " + coverage_brief(merged);
    payload += "\ntestbench: " + tb_rel;
    payload += "\nmerged coverage: " + merged_rel;
    return ToolResult{call_id, true, cap_head_tail(payload, kToolResultCap),
                      PayloadHint::CoverageResult};
  } catch (const Error& e) {
    return failure(call_id, e.what());
  }
}

std::vector<CycleOutcome> Toolkit::take_pending_cycles() {
  std::vector<CycleOutcome> out = std::move(pending_);
  pending_.clear();
  return out;
}

ToolResult Toolkit::execute(const ToolCall& call) {
  if (!call.arguments_ok) {
    return failure(call.id, "malformed tool-call arguments for '" + call.name +
                                "': expected a JSON object, got: " +
                                cap_head_tail(call.arguments_raw, 200));
  }
  auto string_arg = [&](const char* name) -> std::optional<std::string> {
    if (!call.arguments.contains(name) || !call.arguments.at(name).is_string()) {
      return std::nullopt;
    }
    return call.arguments.at(name).get<std::string>();
  };
  auto int_arg = [&](const char* name) -> std::optional<long long> {
    if (!call.arguments.contains(name) || !call.arguments.at(name).is_number_integer()) {
      return std::nullopt;
    }
    return call.arguments.at(name).get<long long>();
  };
  auto missing = [&](const char* name) {
    return failure(call.id, "tool '" + call.name + "' requires parameter '" + name + "'");
  };

  if (call.name == "read_file") {
    std::optional<std::string> path = string_arg("path");
    return path ? read_file(call.id, *path) : missing("path");
  }
  if (call.name == "write_file") {
    std::optional<std::string> path = string_arg("path");
    if (!path) {
      return missing("path");
    }
    std::optional<std::string> content = string_arg("content");
    return content ? write_file(call.id, *path, *content) : missing("content");
  }
  if (call.name == "list_directory") {
    std::optional<std::string> path = string_arg("path");
    return path ? list_directory(call.id, *path) : missing("path");
  }
  if (call.name == "compile_design") {
    std::optional<std::string> tb_path = string_arg("tb_path");
    return tb_path ? compile_design(call.id, *tb_path) : missing("tb_path");
  }
  if (call.name == "run_simulation") {
    std::optional<long long> seed = int_arg("seed");
    return seed ? run_simulation(call.id, *seed) : missing("seed");
  }
  if (call.name == "parse_coverage") {
    std::optional<std::string> cov_path = string_arg("cov_path");
    return cov_path ? parse_coverage(call.id, *cov_path) : missing("cov_path");
  }
  if (call.name == "run_verification_cycle") {
    std::optional<std::string> tb_content = string_arg("tb_content");
    return tb_content ? run_verification_cycle(call.id, *tb_content) : missing("tb_content");
  }
  return failure(call.id,
                 "unknown tool '" + call.name +
                     "'; available tools: read_file, write_file, list_directory, compile_design, "
                     "run_simulation, parse_coverage, run_verification_cycle");
}

std::vector<ToolSchema> Toolkit::schemas() {
  return {
      ToolSchema{"read_file",
                 "Read a text file from the workspace or the read-only spec/design inputs. Large "
                 "files are truncated.",
                 {ToolParam{"path", "string", "File path, relative to the workspace or absolute."}}},
      ToolSchema{"write_file",
                 "Write a file inside the workspace. Testbenches under tb/ must pass the stimulus "
                 "constraint lint (top-level ports only).",
                 {ToolParam{"path", "string", "Destination path inside the workspace."},
                  ToolParam{"content", "string", "Exact file content to write."}}},
      ToolSchema{"list_directory",
                 "List a directory's entries in sorted order with type markers.",
                 {ToolParam{"path", "string", "Directory path, relative to the workspace."}}},
      ToolSchema{"compile_design",
                 "Compile a testbench against the design under test. Must succeed before "
                 "run_simulation.",
                 {ToolParam{"tb_path", "string", "Path of the testbench to compile."}}},
      ToolSchema{"run_simulation",
                 "Run one simulation of the most recently compiled testbench with the given seed "
                 "and collect coverage.",
                 {ToolParam{"seed", "integer", "Random seed for this simulation run."}}},
      ToolSchema{"parse_coverage",
                 "Summarize a coverage database file: totals, percentage, and the largest "
                 "uncovered groups.",
                 {ToolParam{"cov_path", "string", "Path of the coverage database to summarize."}}},
      ToolSchema{"run_verification_cycle",
                 "Atomic verification cycle: write the testbench, compile it, simulate once per "
                 "configured seed, parse and merge coverage. Preferred over chaining the "
                 "individual tools.",
                 {ToolParam{"tb_content", "string", "Full testbench content to verify."}}},
  };
}

}  // namespace covagent
