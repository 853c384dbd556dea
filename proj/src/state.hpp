#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coverage.hpp"
#include "ledger.hpp"
#include "util.hpp"

namespace covagent {

enum class SimulatorMode { Mock, Command };

struct SimulatorConfig {
  SimulatorMode mode = SimulatorMode::Command;
  std::string compile_cmd;
  std::string sim_cmd;
  CoverageFormat coverage_format = CoverageFormat::Canonical;
  double timeout_seconds = 60.0;
};

struct ApiConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string key_env = "OPENAI_API_KEY";
};

struct RunConfig {
  std::filesystem::path spec_path;
  std::vector<std::filesystem::path> design_paths;
  std::string top_module_header;
  std::filesystem::path workspace_dir;
  int seeds_per_iteration = 5;
  int max_iterations = 25;
  long long token_budget = 500000;
  double coverage_target = 100.0;
  double temperature = 0.4;
  PricingTable pricing;
  std::string model_id = "gpt-5.2";
  int feedback_limit = 10;
  SimulatorConfig simulator;
  ApiConfig api;

  void validate() const;
  Json to_json() const;
  // Relative spec/design/workspace paths resolve against `base_dir` (the
  // directory holding the config file), so configs are location-independent.
  static RunConfig from_json(const Json& value, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& file);
};

enum class Role { System, User, Assistant, Tool };

const char* to_string(Role role);
std::optional<Role> role_from(std::string_view name);

enum class MessageTag { SystemPrompt, CoverageFeedback, ErrorLog, Termination, DesignContent, Other };

const char* to_string(MessageTag tag);
std::optional<MessageTag> message_tag_from(std::string_view name);

struct ToolCall {
  std::string id;
  std::string name;
  std::string arguments_raw;
  Json arguments;
  bool arguments_ok = false;

  static ToolCall make(std::string id, std::string name, std::string arguments_raw);
};

struct Message {
  Role role = Role::User;
  std::string content;
  std::vector<ToolCall> tool_calls;
  std::string tool_call_id;
  MessageTag tag = MessageTag::Other;

  Json to_json() const;
  static Message from_json(const Json& value);
};

struct FailureRecord {
  std::string tool;
  int iteration = 0;
  std::string excerpt;
  bool resolved = false;

  Json to_json() const;
  static FailureRecord from_json(const Json& value);
};

enum class TerminationReason { TargetReached, IterationLimit, TokenBudget, AgentDeclared };

const char* to_string(TerminationReason reason);
std::optional<TerminationReason> termination_reason_from(std::string_view name);

// A verification cycle completed by the tool layer but not yet folded into
// the iteration counter and cumulative coverage.
struct PendingCycle {
  int iteration_index = 0;
  // Workspace-relative path of the cycle's merged coverage snapshot.
  std::string merged_path;
};

struct AgentState {
  RunConfig config;
  std::vector<Message> messages;
  int iteration = 0;
  CoverageDatabase cumulative_coverage;
  std::vector<CoverageDatabase> per_iteration_coverage;
  std::vector<FailureRecord> failure_tracker;
  TokenLedger ledger;
  bool terminated = false;
  std::optional<TerminationReason> termination_reason;

  // Node bookkeeping carried across graph steps.
  bool initialized = false;
  int feedback_iteration = 0;
  int no_tool_streak = 0;
  std::vector<PendingCycle> pending_cycles;
  std::vector<FailureRecord> pending_failures;

  double coverage_percent() const { return cumulative_coverage.percentage(); }
  // Termination reason set but Finalize not yet run.
  bool terminal() const { return termination_reason.has_value(); }
  // Union-merge of all per-iteration databases; the cumulative database must
  // equal this at every step boundary.
  CoverageDatabase remerge() const;

  Json to_json() const;
  static AgentState from_json(const Json& value, const std::filesystem::path& base_dir);
  void save(const std::filesystem::path& path) const;
  static AgentState load(const std::filesystem::path& path);
};

// Fresh state for a validated config whose spec and design paths exist.
AgentState new_state(const RunConfig& config);

}  // namespace covagent
