#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "llm.hpp"
#include "sim.hpp"
#include "state.hpp"
#include "toolkit.hpp"
#include "util.hpp"

namespace covagent {

enum class GraphNode { Initialize, Agent, Tools, UpdateState, PruneContext, Finalize };

const char* to_string(GraphNode node);

// Router output: the next node to run plus the message the router injects
// into the conversation (coverage feedback before Agent, the termination
// instruction before Finalize). `injected` is absent when nothing is added.
struct RouteDecision {
  GraphNode next = GraphNode::Agent;
  std::optional<Message> injected;
};

inline constexpr const char* kPrunedErrorPlaceholder =
    "[error log removed by context pruning]";

// The system prompt for a run: role statement, input paths, the verbatim
// top-module header, stimulus constraints, and coverage strategies.
std::string system_prompt_text(const RunConfig& config);

// Drives the agent loop as a fixed six-node graph:
//   Initialize -> (Agent -> [Tools] -> UpdateState -> PruneContext -> route)*
//   -> Finalize
// Each node checkpoints the full state to <workspace>/state.json on exit, so
// an aborted run leaves its last consistent state on disk. Node entry/exit
// events stream to <workspace>/logs/trace.ndjson.
class GraphEngine {
 public:
  GraphEngine(const RunConfig& config, LlmBackend& llm, SimBackend& sim);

  // Creates workspace subdirectories, opens the trace stream, and appends
  // the system prompt. Calling twice is a state error; an unwritable
  // workspace is a setup error.
  void initialize();

  // One LLM call with the seven tool schemas; appends the assistant message
  // and a ledger record. Requires an initialized, non-terminated state.
  void agent_step();

  // Executes every tool call of the trailing assistant message in order,
  // appending one tool message per call. Tool failures become error_log
  // messages and failure records; they never abort the loop.
  void tools_step();

  // Absorbs completed verification cycles (iteration advance, cumulative
  // re-merge), files pending failures, evaluates termination conditions in
  // priority order, and samples the coverage curve.
  void update_state();

  // Replaces every error_log message except the most recent with a one-line
  // placeholder; retained context size never grows.
  void prune_context();

  // Chooses the next node. In a non-terminal state this appends coverage
  // feedback (at most once per iteration) and returns Agent; in a terminal
  // state it returns Finalize carrying the termination instruction, which
  // finalize() appends.
  RouteDecision route();

  // Snapshots cumulative coverage to cov/final.covdb, appends the
  // termination message, issues the closing LLM call without tools, and
  // marks the state terminated. Requires a pending termination reason.
  void finalize();

  // Full loop; returns the terminated state. On error the last consistent
  // state is checkpointed before the exception propagates.
  AgentState& run();

  AgentState& state() { return state_; }
  const AgentState& state() const { return state_; }
  Toolkit& toolkit() { return toolkit_; }

  std::string termination_message_text() const;

 private:
  void checkpoint();
  void trace_event(const char* event, GraphNode node);
  CallRecord
  build_call_record(const std::vector<Message>& request, const Message& assistant,
                    const Usage& usage, const std::string& phase,
                    long long tool_schemas_estimate) const;
  Message feedback_message() const;

  LlmBackend& llm_;
  SimBackend& sim_;
  AgentState state_;
  Toolkit toolkit_;
  std::ofstream trace_;
};

}  // namespace covagent
