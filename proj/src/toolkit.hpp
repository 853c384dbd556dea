#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "llm.hpp"
#include "sim.hpp"
#include "state.hpp"
#include "util.hpp"

namespace covagent {

// How a tool payload should be tagged when appended to the conversation.
enum class PayloadHint { Other, DesignContent, ErrorLog, CoverageResult };

struct ToolResult {
  std::string call_id;
  bool ok = false;
  std::string payload;
  PayloadHint hint = PayloadHint::Other;
};

// A completed composite verification cycle awaiting state absorption.
struct CycleOutcome {
  int iteration_index = 0;
  // Workspace-relative path of the merged coverage snapshot.
  std::string merged_path;
};

inline constexpr std::size_t kReadFileCap = 200000;
inline constexpr std::size_t kToolResultCap = 4000;
inline constexpr int kErrorExcerptLines = 5;

// Executes tool calls against the workspace and simulator. All failures are
// returned as error results, never thrown: tool errors are conversation data
// the agent can react to. Paths resolve relative to the workspace and are
// confined to it plus the read-only spec/design inputs.
class Toolkit {
public:
  Toolkit(const RunConfig& config, SimBackend& sim);

  // Called before each tool batch with the number of completed iterations;
  // resets the per-batch cycle guard.
  void begin_batch(int completed_iterations);

  ToolResult execute(const ToolCall& call);

  ToolResult read_file(const std::string& call_id, const std::string& path);
  ToolResult write_file(const std::string& call_id, const std::string& path,
                        const std::string& content);
  ToolResult list_directory(const std::string& call_id, const std::string& path);
  ToolResult compile_design(const std::string& call_id, const std::string& tb_path);
  ToolResult run_simulation(const std::string& call_id, long long seed);
  ToolResult parse_coverage(const std::string& call_id, const std::string& cov_path);
  ToolResult run_verification_cycle(const std::string& call_id, const std::string& tb_content);

  std::vector<CycleOutcome> take_pending_cycles();

  // True when the path argument names a location under the workspace tb/
  // directory (used for call classification before any resolution happens).
  bool is_testbench_path(const std::string& path) const;
  // True when the path resolves into the read-only spec/design inputs.
  bool is_design_path(const std::string& path) const;

  static std::vector<ToolSchema> schemas();

private:
  std::filesystem::path resolve_read(const std::string& path) const;
  std::filesystem::path resolve_write(const std::string& path) const;
  std::filesystem::path resolve_in_workspace(const std::string& path) const;
  ToolResult failure(const std::string& call_id, const std::string& payload) const;

  const RunConfig& config_;
  SimBackend& sim_;
  std::filesystem::path workspace_;
  std::filesystem::path spec_file_;
  std::vector<std::filesystem::path> design_roots_;
  std::string top_module_;
  bool compiled_ = false;
  int iteration_ = 0;
  int batch_cycles_ = 0;
  std::vector<CycleOutcome> pending_;
};

}  // namespace covagent
