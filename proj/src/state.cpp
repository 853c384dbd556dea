#include "state.hpp"

#include <algorithm>
#include <set>

namespace covagent {

namespace fs = std::filesystem;

namespace {

fs::path resolve_against(const fs::path& base_dir, const fs::path& path) {
  if (path.empty() || path.is_absolute() || base_dir.empty()) {
    return path.lexically_normal();
  }
  return (base_dir / path).lexically_normal();
}

void require_known_keys(const Json& object, const std::set<std::string>& known,
                        const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (!known.count(key)) {
      fail(ErrorKind::Config, "unknown key '" + key + "' in " + where);
    }
  }
}

const char* to_string(SimulatorMode mode) {
  return mode == SimulatorMode::Mock ? "mock" : "command";
}

const char* to_string(CoverageFormat format) {
  switch (format) {
    case CoverageFormat::Canonical: return "canonical";
    case CoverageFormat::Info: return "info";
    case CoverageFormat::Manifest: return "manifest";
  }
  return "unknown";
}

}  // namespace

void RunConfig::validate() const {
  if (spec_path.empty()) {
    fail(ErrorKind::Config, "spec_path must be set");
  }
  if (design_paths.empty()) {
    fail(ErrorKind::Config, "design_paths must name at least one design input");
  }
  if (workspace_dir.empty()) {
    fail(ErrorKind::Config, "workspace_dir must be set");
  }
  if (top_module_header.empty()) {
    fail(ErrorKind::Config, "top_module_header must be non-empty");
  }
  if (seeds_per_iteration < 1) {
    fail(ErrorKind::Config, "seeds_per_iteration must be >= 1");
  }
  if (max_iterations < 1) {
    fail(ErrorKind::Config, "max_iterations must be >= 1");
  }
  if (token_budget < 1) {
    fail(ErrorKind::Config, "token_budget must be >= 1");
  }
  if (!(coverage_target > 0.0 && coverage_target <= 100.0)) {
    fail(ErrorKind::Config, "coverage_target must be in (0, 100]");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    fail(ErrorKind::Config, "temperature must be in [0, 2]");
  }
  if (feedback_limit < 1) {
    fail(ErrorKind::Config, "feedback_limit must be >= 1");
  }
  if (pricing.input_price < 0.0 || pricing.output_price < 0.0 || pricing.reasoning_price < 0.0) {
    fail(ErrorKind::Config, "pricing must be non-negative");
  }
  if (model_id.empty()) {
    fail(ErrorKind::Config, "model_id must be non-empty");
  }
  if (!(simulator.timeout_seconds > 0.0)) {
    fail(ErrorKind::Config, "simulator.timeout_seconds must be positive");
  }
  if (simulator.mode == SimulatorMode::Command &&
      (simulator.compile_cmd.empty() || simulator.sim_cmd.empty())) {
    fail(ErrorKind::Config, "command simulator requires compile_cmd and sim_cmd");
  }
}

Json RunConfig::to_json() const {
  Json designs = Json::array();
  for (const fs::path& path : design_paths) {
    designs.push_back(path.string());
  }
  return Json{
      {"spec_path", spec_path.string()},
      {"design_paths", designs},
      {"top_module_header", top_module_header},
      {"workspace_dir", workspace_dir.string()},
      {"seeds_per_iteration", seeds_per_iteration},
      {"max_iterations", max_iterations},
      {"token_budget", token_budget},
      {"coverage_target", coverage_target},
      {"temperature", temperature},
      {"pricing",
       Json{{"input_price", pricing.input_price},
            {"output_price", pricing.output_price},
            {"reasoning_price", pricing.reasoning_price}}},
      {"model_id", model_id},
      {"feedback_limit", feedback_limit},
      {"simulator",
       Json{{"mode", to_string(simulator.mode)},
            {"compile_cmd", simulator.compile_cmd},
            {"sim_cmd", simulator.sim_cmd},
            {"coverage_format", to_string(simulator.coverage_format)},
            {"timeout_seconds", simulator.timeout_seconds}}},
      {"api", Json{{"base_url", api.base_url}, {"key_env", api.key_env}}},
  };
}

RunConfig RunConfig::from_json(const Json& value, const fs::path& base_dir) {
  if (!value.is_object()) {
    fail(ErrorKind::Config, "configuration must be a JSON object");
  }
  require_known_keys(value,
                     {"spec_path", "design_paths", "top_module_header", "workspace_dir",
                      "seeds_per_iteration", "max_iterations", "token_budget", "coverage_target",
                      "temperature", "pricing", "model_id", "feedback_limit", "simulator", "api"},
                     "configuration");
  RunConfig config;
  if (!value.contains("spec_path") || !value.contains("design_paths") ||
      !value.contains("top_module_header") || !value.contains("workspace_dir")) {
    fail(ErrorKind::Config,
         "configuration requires spec_path, design_paths, top_module_header, workspace_dir");
  }
  config.spec_path = resolve_against(base_dir, value.at("spec_path").get<std::string>());
  for (const Json& entry : value.at("design_paths")) {
    config.design_paths.push_back(resolve_against(base_dir, entry.get<std::string>()));
  }
  config.top_module_header = value.at("top_module_header").get<std::string>();
  config.workspace_dir = resolve_against(base_dir, value.at("workspace_dir").get<std::string>());
  if (value.contains("seeds_per_iteration")) {
    config.seeds_per_iteration = value.at("seeds_per_iteration").get<int>();
  }
  if (value.contains("max_iterations")) {
    config.max_iterations = value.at("max_iterations").get<int>();
  }
  if (value.contains("token_budget")) {
    config.token_budget = value.at("token_budget").get<long long>();
  }
  if (value.contains("coverage_target")) {
    config.coverage_target = value.at("coverage_target").get<double>();
  }
  if (value.contains("temperature")) {
    config.temperature = value.at("temperature").get<double>();
  }
  if (value.contains("pricing")) {
    const Json& pricing = value.at("pricing");
    require_known_keys(pricing, {"input_price", "output_price", "reasoning_price"}, "pricing");
    if (pricing.contains("input_price")) {
      config.pricing.input_price = pricing.at("input_price").get<double>();
    }
    if (pricing.contains("output_price")) {
      config.pricing.output_price = pricing.at("output_price").get<double>();
    }
    if (pricing.contains("reasoning_price")) {
      config.pricing.reasoning_price = pricing.at("reasoning_price").get<double>();
    }
  }
  if (value.contains("model_id")) {
    config.model_id = value.at("model_id").get<std::string>();
  }
  if (value.contains("feedback_limit")) {
    config.feedback_limit = value.at("feedback_limit").get<int>();
  }
  if (value.contains("simulator")) {
    const Json& simulator = value.at("simulator");
    require_known_keys(simulator,
                       {"mode", "compile_cmd", "sim_cmd", "coverage_format", "timeout_seconds"},
                       "simulator");
    if (simulator.contains("mode")) {
      std::string mode = simulator.at("mode").get<std::string>();
      if (mode == "mock") {
        config.simulator.mode = SimulatorMode::Mock;
      } else if (mode == "command") {
        config.simulator.mode = SimulatorMode::Command;
      } else {
        fail(ErrorKind::Config, "simulator.mode must be 'mock' or 'command', got '" + mode + "'");
      }
    }
    if (simulator.contains("compile_cmd")) {
      config.simulator.compile_cmd = simulator.at("compile_cmd").get<std::string>();
    }
    if (simulator.contains("sim_cmd")) {
      config.simulator.sim_cmd = simulator.at("sim_cmd").get<std::string>();
    }
    if (simulator.contains("coverage_format")) {
      std::string format = simulator.at("coverage_format").get<std::string>();
      std::optional<CoverageFormat> parsed = coverage_format_from(format);
      if (!parsed) {
        fail(ErrorKind::Config, "unknown simulator.coverage_format '" + format + "'");
      }
      config.simulator.coverage_format = *parsed;
    }
    if (simulator.contains("timeout_seconds")) {
      config.simulator.timeout_seconds = simulator.at("timeout_seconds").get<double>();
    }
  }
  if (value.contains("api")) {
    const Json& api = value.at("api");
    require_known_keys(api, {"base_url", "key_env"}, "api");
    if (api.contains("base_url")) {
      config.api.base_url = api.at("base_url").get<std::string>();
    }
    if (api.contains("key_env")) {
      config.api.key_env = api.at("key_env").get<std::string>();
    }
  }
  config.validate();
  return config;
}

RunConfig RunConfig::load(const fs::path& file) {
  std::string text = read_text_file(file);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::Config, "cannot parse " + file.string() + ": " + e.what());
  }
  return from_json(value, fs::absolute(file).parent_path());
}

const char* to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
  }
  return "unknown";
}

std::optional<Role> role_from(std::string_view name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  if (name == "tool") return Role::Tool;
  return std::nullopt;
}

const char* to_string(MessageTag tag) {
  switch (tag) {
    case MessageTag::SystemPrompt: return "system_prompt";
    case MessageTag::CoverageFeedback: return "coverage_feedback";
    case MessageTag::ErrorLog: return "error_log";
    case MessageTag::Termination: return "termination";
    case MessageTag::DesignContent: return "design_content";
    case MessageTag::Other: return "other";
  }
  return "unknown";
}

std::optional<MessageTag> message_tag_from(std::string_view name) {
  if (name == "system_prompt") return MessageTag::SystemPrompt;
  if (name == "coverage_feedback") return MessageTag::CoverageFeedback;
  if (name == "error_log") return MessageTag::ErrorLog;
  if (name == "termination") return MessageTag::Termination;
  if (name == "design_content") return MessageTag::DesignContent;
  if (name == "other") return MessageTag::Other;
  return std::nullopt;
}

ToolCall ToolCall::make(std::string id, std::string name, std::string arguments_raw) {
  ToolCall call;
  call.id = std::move(id);
  call.name = std::move(name);
  call.arguments_raw = std::move(arguments_raw);
  call.arguments = Json::parse(call.arguments_raw, nullptr, false);
  call.arguments_ok = !call.arguments.is_discarded() && call.arguments.is_object();
  if (!call.arguments_ok) {
    call.arguments = Json();
  }
  return call;
}

Json Message::to_json() const {
  Json out = Json{{"role", to_string(role)}, {"tag", to_string(tag)}, {"content", content}};
  if (!tool_calls.empty()) {
    Json calls = Json::array();
    for (const ToolCall& call : tool_calls) {
      calls.push_back(Json{{"id", call.id}, {"name", call.name}, {"arguments", call.arguments_raw}});
    }
    out["tool_calls"] = calls;
  }
  if (!tool_call_id.empty()) {
    out["tool_call_id"] = tool_call_id;
  }
  return out;
}

Message Message::from_json(const Json& value) {
  Message message;
  std::string role = value.at("role").get<std::string>();
  std::optional<Role> parsed_role = role_from(role);
  if (!parsed_role) {
    fail(ErrorKind::Parse, "unknown message role '" + role + "'");
  }
  message.role = *parsed_role;
  std::string tag = value.at("tag").get<std::string>();
  std::optional<MessageTag> parsed_tag = message_tag_from(tag);
  if (!parsed_tag) {
    fail(ErrorKind::Parse, "unknown message tag '" + tag + "'");
  }
  message.tag = *parsed_tag;
  message.content = value.at("content").get<std::string>();
  if (value.contains("tool_calls")) {
    for (const Json& entry : value.at("tool_calls")) {
      message.tool_calls.push_back(ToolCall::make(entry.at("id").get<std::string>(),
                                                  entry.at("name").get<std::string>(),
                                                  entry.at("arguments").get<std::string>()));
    }
  }
  if (value.contains("tool_call_id")) {
    message.tool_call_id = value.at("tool_call_id").get<std::string>();
  }
  return message;
}

Json FailureRecord::to_json() const {
  return Json{{"tool", tool}, {"iteration", iteration}, {"excerpt", excerpt}, {"resolved", resolved}};
}

FailureRecord FailureRecord::from_json(const Json& value) {
  FailureRecord record;
  record.tool = value.at("tool").get<std::string>();
  record.iteration = value.at("iteration").get<int>();
  record.excerpt = value.at("excerpt").get<std::string>();
  record.resolved = value.at("resolved").get<bool>();
  return record;
}

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::TargetReached: return "target_reached";
    case TerminationReason::IterationLimit: return "iteration_limit";
    case TerminationReason::TokenBudget: return "token_budget";
    case TerminationReason::AgentDeclared: return "agent_declared";
  }
  return "unknown";
}

std::optional<TerminationReason> termination_reason_from(std::string_view name) {
  if (name == "target_reached") return TerminationReason::TargetReached;
  if (name == "iteration_limit") return TerminationReason::IterationLimit;
  if (name == "token_budget") return TerminationReason::TokenBudget;
  if (name == "agent_declared") return TerminationReason::AgentDeclared;
  return std::nullopt;
}

CoverageDatabase AgentState::remerge() const {
  if (per_iteration_coverage.empty()) {
    return CoverageDatabase{};
  }
  CoverageDatabase merged = per_iteration_coverage.front();
  for (std::size_t i = 1; i < per_iteration_coverage.size(); ++i) {
    merged = merge(merged, per_iteration_coverage[i]);
  }
  return merged;
}

Json AgentState::to_json() const {
  Json messages_json = Json::array();
  for (const Message& message : messages) {
    messages_json.push_back(message.to_json());
  }
  Json per_iteration = Json::array();
  for (const CoverageDatabase& db : per_iteration_coverage) {
    per_iteration.push_back(db.to_json());
  }
  Json failures = Json::array();
  for (const FailureRecord& record : failure_tracker) {
    failures.push_back(record.to_json());
  }
  Json pending_cycles_json = Json::array();
  for (const PendingCycle& cycle : pending_cycles) {
    pending_cycles_json.push_back(
        Json{{"iteration_index", cycle.iteration_index}, {"merged_path", cycle.merged_path}});
  }
  Json pending_failures_json = Json::array();
  for (const FailureRecord& record : pending_failures) {
    pending_failures_json.push_back(record.to_json());
  }
  return Json{
      {"config", config.to_json()},
      {"iteration", iteration},
      {"terminated", terminated},
      {"termination_reason", termination_reason ? Json(to_string(*termination_reason)) : Json()},
      {"initialized", initialized},
      {"feedback_iteration", feedback_iteration},
      {"no_tool_streak", no_tool_streak},
      {"cumulative_coverage", cumulative_coverage.to_json()},
      {"per_iteration_coverage", per_iteration},
      {"failure_tracker", failures},
      {"pending_cycles", pending_cycles_json},
      {"pending_failures", pending_failures_json},
      {"ledger", ledger.to_json()},
      {"messages", messages_json},
  };
}

AgentState AgentState::from_json(const Json& value, const fs::path& base_dir) {
  AgentState state;
  state.config = RunConfig::from_json(value.at("config"), base_dir);
  state.iteration = value.at("iteration").get<int>();
  state.terminated = value.at("terminated").get<bool>();
  if (!value.at("termination_reason").is_null()) {
    std::string reason = value.at("termination_reason").get<std::string>();
    std::optional<TerminationReason> parsed = termination_reason_from(reason);
    if (!parsed) {
      fail(ErrorKind::Parse, "unknown termination reason '" + reason + "'");
    }
    state.termination_reason = *parsed;
  }
  state.initialized = value.at("initialized").get<bool>();
  state.feedback_iteration = value.at("feedback_iteration").get<int>();
  state.no_tool_streak = value.at("no_tool_streak").get<int>();
  state.cumulative_coverage = CoverageDatabase::from_json(value.at("cumulative_coverage"));
  for (const Json& entry : value.at("per_iteration_coverage")) {
    state.per_iteration_coverage.push_back(CoverageDatabase::from_json(entry));
  }
  for (const Json& entry : value.at("failure_tracker")) {
    state.failure_tracker.push_back(FailureRecord::from_json(entry));
  }
  for (const Json& entry : value.at("pending_cycles")) {
    state.pending_cycles.push_back(PendingCycle{entry.at("iteration_index").get<int>(),
                                                entry.at("merged_path").get<std::string>()});
  }
  for (const Json& entry : value.at("pending_failures")) {
    state.pending_failures.push_back(FailureRecord::from_json(entry));
  }
  state.ledger = TokenLedger::from_json(value.at("ledger"));
  for (const Json& entry : value.at("messages")) {
    state.messages.push_back(Message::from_json(entry));
  }
  return state;
}

void AgentState::save(const fs::path& path) const {
  write_text_file_atomic(path, to_json().dump(2) + "\n");
}

AgentState AgentState::load(const fs::path& path) {
  std::string text = read_text_file(path);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::Parse, "cannot parse " + path.string() + ": " + e.what());
  }
  // Checkpoints store absolute paths, so no base directory is needed; passing
  // the checkpoint's own directory keeps hand-edited relative paths working.
  return from_json(value, fs::absolute(path).parent_path());
}

AgentState new_state(const RunConfig& config) {
  config.validate();
  if (!fs::exists(config.spec_path)) {
    fail(ErrorKind::Config, "spec_path does not exist: " + config.spec_path.string());
  }
  for (const fs::path& path : config.design_paths) {
    if (!fs::exists(path)) {
      fail(ErrorKind::Config, "design path does not exist: " + path.string());
    }
  }
  AgentState state;
  state.config = config;
  return state;
}

}  // namespace covagent
