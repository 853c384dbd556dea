#include "graph.hpp"

#include <chrono>
#include <filesystem>
#include <utility>

#include "taxonomy.hpp"

namespace covagent {

const char* to_string(GraphNode node) {
  switch (node) {
    case GraphNode::Initialize: return "Initialize";
    case GraphNode::Agent: return "Agent";
    case GraphNode::Tools: return "Tools";
    case GraphNode::UpdateState: return "UpdateState";
    case GraphNode::PruneContext: return "PruneContext";
    case GraphNode::Finalize: return "Finalize";
  }
  return "Initialize";
}

std::string system_prompt_text(const RunConfig& config) {
  std::string text;
  text += "You are an expert hardware verification engineer. Your goal is to reach ";
  text += format_percent(config.coverage_target);
  text += "% coverage on the design under test by generating SystemVerilog stimulus.\n";
  text += "\nSpecification file: " + config.spec_path.string() + "\n";
  text += "Design files:\n";
  for (const auto& path : config.design_paths) {
    text += "  - " + path.string() + "\n";
  }
  text += "\nTop module header (verbatim):\n";
  text += config.top_module_header;
  if (text.back() != '\n') text += '\n';
  text += "\nStimulus constraints:\n";
  text += "- Drive the design only through the top-level ports declared above.\n";
  text +=
      "- Hierarchical references into the design, force/release statements, and "
      "instantiation of any module other than the top module are rejected by the "
      "testbench lint.\n";
  text += "- Declare every testbench signal explicitly with an exact width before use.\n";
  text +=
      "- Use constrained randomization to sweep wide value ranges; use directed "
      "sequences for precise multi-cycle conditions.\n";
  text += "\nWorkflow:\n";
  text +=
      "- Tools: read_file, write_file, list_directory, compile_design, "
      "run_simulation, parse_coverage, run_verification_cycle.\n";
  text += "- Prefer run_verification_cycle: it writes the testbench, compiles it, simulates ";
  text += std::to_string(config.seeds_per_iteration);
  text += " seeds, and parses and merges their coverage in one atomic step.\n";
  text +=
      "- After each completed iteration you receive prioritized feedback listing "
      "uncovered points by group.\n";
  text += "\nCoverage-improvement strategies:\n";
  text += "- Read the specification and design sources before generating stimulus.\n";
  text +=
      "- Exercise every control mode, boundary value, and handshake ordering the "
      "specification names.\n";
  text += "- Target the feedback groups with the most uncovered points first.\n";
  text += "- Combine broad random sweeps with directed tests for rare conditions.\n";
  return text;
}

GraphEngine::GraphEngine(const RunConfig& config, LlmBackend& llm, SimBackend& sim)
    : llm_(llm), sim_(sim), state_(new_state(config)), toolkit_(state_.config, sim) {}

void GraphEngine::checkpoint() {
  state_.save(state_.config.workspace_dir / "state.json");
}

void GraphEngine::trace_event(const char* event, GraphNode node) {
  if (!trace_.is_open()) return;
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  Json line;
  line["event"] = event;
  line["node"] = to_string(node);
  line["iteration"] = state_.iteration;
  line["total_tokens"] = state_.ledger.total_billed();
  line["ts_ms"] = now;
  trace_ << line.dump() << '\n';
  trace_.flush();
}

void GraphEngine::initialize() {
  if (state_.initialized) {
    fail(ErrorKind::State, "graph already initialized");
  }
  const auto& workspace = state_.config.workspace_dir;
  for (const char* sub : {"tb", "cov", "logs", "reports"}) {
    std::error_code ec;
    const auto dir = workspace / sub;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      fail(ErrorKind::Setup,
           "cannot create workspace directory '" + dir.string() + "': " + ec.message());
    }
  }
  trace_.open(workspace / "logs" / "trace.ndjson", std::ios::trunc);
  if (!trace_) {
    fail(ErrorKind::Setup, "cannot open trace log under '" + workspace.string() + "'");
  }
  trace_event("enter", GraphNode::Initialize);
  Message prompt;
  prompt.role = Role::System;
  prompt.tag = MessageTag::SystemPrompt;
  prompt.content = system_prompt_text(state_.config);
  state_.messages.push_back(std::move(prompt));
  state_.initialized = true;
  state_.ledger.sample_curve(0.0);
  checkpoint();
  trace_event("exit", GraphNode::Initialize);
}

CallRecord GraphEngine::build_call_record(const std::vector<Message>& request,
                                          const Message& assistant, const Usage& usage,
                                          const std::string& phase,
                                          long long tool_schemas_estimate) const {
  CallRecord record;
  record.index = static_cast<int>(state_.ledger.records().size());
  record.phase = phase;
  record.message_count = static_cast<int>(request.size());
  record.tool_schemas_estimate = tool_schemas_estimate;
  record.usage = usage;
  for (const auto& message : request) {
    long long weight = estimate_tokens(message.content);
    for (const auto& call : message.tool_calls) {
      weight += estimate_tokens(call.name) + estimate_tokens(call.arguments_raw);
    }
    record.tagged_input_estimates[to_string(message.tag)] += weight;
  }
  for (const auto& call : assistant.tool_calls) {
    record.produced_tool_calls.push_back(call.name);
    if (call.name == "run_verification_cycle") {
      record.wrote_testbench = true;
    } else if (call.name == "write_file" && call.arguments_ok &&
               call.arguments.contains("path") && call.arguments["path"].is_string()) {
      if (toolkit_.is_testbench_path(call.arguments["path"].get<std::string>())) {
        record.wrote_testbench = true;
      }
    } else if ((call.name == "read_file" || call.name == "list_directory") &&
               call.arguments_ok && call.arguments.contains("path") &&
               call.arguments["path"].is_string()) {
      if (toolkit_.is_design_path(call.arguments["path"].get<std::string>())) {
        record.read_design = true;
      }
    }
  }
  for (auto it = request.rbegin(); it != request.rend(); ++it) {
    if (it->role == Role::Tool) {
      record.follows_error_log = it->tag == MessageTag::ErrorLog;
      break;
    }
  }
  for (auto it = request.rbegin(); it != request.rend(); ++it) {
    if (it->tag != MessageTag::Other) {
      record.design_newest = it->tag == MessageTag::DesignContent;
      break;
    }
  }
  return record;
}

void GraphEngine::agent_step() {
  if (!state_.initialized) {
    fail(ErrorKind::State, "agent step before initialization");
  }
  if (state_.terminated) {
    fail(ErrorKind::State, "agent step after termination");
  }
  trace_event("enter", GraphNode::Agent);
  const auto schemas = Toolkit::schemas();
  long long schemas_estimate = 0;
  for (const auto& schema : schemas) {
    schemas_estimate += estimate_tokens(schema.canonical_text());
  }
  ChatParams params{state_.config.model_id, state_.config.temperature};
  auto [assistant, usage] = llm_.chat(state_.messages, schemas, params);
  assistant.role = Role::Assistant;
  assistant.tag = MessageTag::Other;
  state_.ledger.append(
      build_call_record(state_.messages, assistant, usage, "Agent", schemas_estimate));
  if (assistant.tool_calls.empty()) {
    state_.no_tool_streak += 1;
  } else {
    state_.no_tool_streak = 0;
  }
  state_.messages.push_back(std::move(assistant));
  checkpoint();
  trace_event("exit", GraphNode::Agent);
}

void GraphEngine::tools_step() {
  if (state_.messages.empty() || state_.messages.back().role != Role::Assistant ||
      state_.messages.back().tool_calls.empty()) {
    fail(ErrorKind::State, "tools step requires a trailing assistant message with tool calls");
  }
  trace_event("enter", GraphNode::Tools);
  toolkit_.begin_batch(state_.iteration);
  const std::vector<ToolCall> calls = state_.messages.back().tool_calls;
  for (const auto& call : calls) {
    ToolResult result = toolkit_.execute(call);
    Message message;
    message.role = Role::Tool;
    message.tool_call_id = result.call_id;
    message.content = result.payload;
    if (!result.ok) {
      message.tag = MessageTag::ErrorLog;
      state_.pending_failures.push_back(FailureRecord{
          call.name, state_.iteration, first_lines(result.payload, kErrorExcerptLines), false});
    } else if (result.hint == PayloadHint::DesignContent) {
      message.tag = MessageTag::DesignContent;
    } else {
      message.tag = MessageTag::Other;
    }
    state_.messages.push_back(std::move(message));
  }
  for (auto& cycle : toolkit_.take_pending_cycles()) {
    state_.pending_cycles.push_back(PendingCycle{cycle.iteration_index, cycle.merged_path});
  }
  checkpoint();
  trace_event("exit", GraphNode::Tools);
}

void GraphEngine::update_state() {
  trace_event("enter", GraphNode::UpdateState);
  const bool absorbed_cycle = !state_.pending_cycles.empty();
  for (const auto& cycle : state_.pending_cycles) {
    state_.per_iteration_coverage.push_back(
        load_snapshot(state_.config.workspace_dir / cycle.merged_path));
    state_.iteration += 1;
  }
  state_.pending_cycles.clear();
  if (absorbed_cycle) {
    state_.cumulative_coverage = state_.remerge();
    snapshot(state_.cumulative_coverage,
             state_.config.workspace_dir / "cov" / "cumulative.covdb");
  }
  for (auto& failure : state_.pending_failures) {
    state_.failure_tracker.push_back(std::move(failure));
  }
  state_.pending_failures.clear();
  if (!state_.termination_reason) {
    if (state_.coverage_percent() >= state_.config.coverage_target) {
      state_.termination_reason = TerminationReason::TargetReached;
    } else if (state_.iteration >= state_.config.max_iterations) {
      state_.termination_reason = TerminationReason::IterationLimit;
    } else if (state_.ledger.total_billed() >= state_.config.token_budget) {
      state_.termination_reason = TerminationReason::TokenBudget;
    } else if (state_.no_tool_streak >= 2) {
      state_.termination_reason = TerminationReason::AgentDeclared;
    }
  }
  state_.ledger.sample_curve(state_.coverage_percent());
  checkpoint();
  trace_event("exit", GraphNode::UpdateState);
}

void GraphEngine::prune_context() {
  trace_event("enter", GraphNode::PruneContext);
  std::size_t last_error = state_.messages.size();
  for (std::size_t i = 0; i < state_.messages.size(); ++i) {
    if (state_.messages[i].tag == MessageTag::ErrorLog) last_error = i;
  }
  const std::string placeholder = kPrunedErrorPlaceholder;
  for (std::size_t i = 0; i < state_.messages.size(); ++i) {
    if (i == last_error) continue;
    Message& message = state_.messages[i];
    if (message.tag == MessageTag::ErrorLog && message.content.size() > placeholder.size()) {
      message.content = placeholder;
    }
  }
  checkpoint();
  trace_event("exit", GraphNode::PruneContext);
}

Message GraphEngine::feedback_message() const {
  Message message;
  message.role = Role::User;
  message.tag = MessageTag::CoverageFeedback;
  message.content =
      feedback(state_.cumulative_coverage, sim_.source_index(), state_.config.feedback_limit);
  return message;
}

RouteDecision GraphEngine::route() {
  if (!state_.initialized) {
    fail(ErrorKind::State, "route before initialization");
  }
  RouteDecision decision;
  if (state_.terminal()) {
    decision.next = GraphNode::Finalize;
    Message message;
    message.role = Role::User;
    message.tag = MessageTag::Termination;
    message.content = termination_message_text();
    decision.injected = std::move(message);
    return decision;
  }
  decision.next = GraphNode::Agent;
  if (state_.iteration > 0 && state_.iteration != state_.feedback_iteration &&
      !state_.cumulative_coverage.empty()) {
    Message message = feedback_message();
    decision.injected = message;
    state_.messages.push_back(std::move(message));
    state_.feedback_iteration = state_.iteration;
    checkpoint();
  }
  return decision;
}

std::string GraphEngine::termination_message_text() const {
  const TerminationReason reason =
      state_.termination_reason.value_or(TerminationReason::AgentDeclared);
  const auto& db = state_.cumulative_coverage;
  std::string text = "The verification run has ended. Termination reason: ";
  text += to_string(reason);
  text += ".\n";
  text += "Final cumulative coverage: " + format_percent(db.percentage()) + "% (" +
          std::to_string(db.covered_count()) + "/" + std::to_string(db.size()) +
          " points covered).\n";
  const auto residual = db.uncovered_ids();
  if (residual.empty()) {
    text += "\nNo uncovered points remain. Reply with an empty classification array.\n";
    return text;
  }
  text += "\nResidual uncovered points:\n";
  for (const auto& id : residual) {
    text += "  - " + std::string(to_string(db.points().at(id).kind)) + " " + id + "\n";
  }
  text += "\nClassify every residual point into exactly one category:\n";
  for (const auto& category : hole_categories()) {
    text += "  " + std::string(category.code) + " " + category.name + " (" + category.tag +
            "): " + category.description + "\n";
  }
  text +=
      "\nThe M categories mark points unreachable from the top-level ports or "
      "excludable (tied-off hardware, infeasible bounds, defensive code); the R "
      "categories mark reachable points that need more verification effort. If you "
      "suspect a design bug rather than a stimulus gap, say so in the rationale.\n";
  text +=
      "\nRespond with a fenced JSON code block containing an array of objects "
      "{\"point_id\", \"category\", \"rationale\"}, one per residual point. Do not "
      "call tools.\n";
  return text;
}

void GraphEngine::finalize() {
  if (!state_.terminal()) {
    fail(ErrorKind::State, "finalize requires a pending termination reason");
  }
  if (state_.terminated) {
    fail(ErrorKind::State, "finalize already ran");
  }
  trace_event("enter", GraphNode::Finalize);
  snapshot(state_.cumulative_coverage, state_.config.workspace_dir / "cov" / "final.covdb");
  Message termination;
  termination.role = Role::User;
  termination.tag = MessageTag::Termination;
  termination.content = termination_message_text();
  state_.messages.push_back(std::move(termination));
  ChatParams params{state_.config.model_id, state_.config.temperature};
  auto [assistant, usage] = llm_.chat(state_.messages, {}, params);
  assistant.role = Role::Assistant;
  assistant.tag = MessageTag::Other;
  state_.ledger.append(build_call_record(state_.messages, assistant, usage, "Finalize", 0));
  state_.messages.push_back(std::move(assistant));
  state_.terminated = true;
  state_.ledger.sample_curve(state_.coverage_percent());
  checkpoint();
  trace_event("exit", GraphNode::Finalize);
}

AgentState& GraphEngine::run() {
  try {
    if (!state_.initialized) {
      initialize();
    }
    while (true) {
      agent_step();
      if (!state_.messages.back().tool_calls.empty()) {
        tools_step();
      }
      update_state();
      prune_context();
      const RouteDecision decision = route();
      if (decision.next == GraphNode::Finalize) {
        finalize();
        break;
      }
    }
  } catch (...) {
    if (state_.initialized) {
      try {
        checkpoint();
      } catch (...) {
      }
    }
    throw;
  }
  return state_;
}

}  // namespace covagent
