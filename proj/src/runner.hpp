#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "graph.hpp"
#include "llm.hpp"
#include "sim.hpp"
#include "state.hpp"
#include "taxonomy.hpp"
#include "util.hpp"

namespace covagent {

// Simulator selection from the config: mock mode loads the design manifest
// from the first design path; command mode shells out to the configured
// compile/simulate templates.
std::unique_ptr<SimBackend> make_sim_backend(const RunConfig& config);

// The assistant analysis following the termination instruction, or empty
// when the transcript holds none.
std::string final_analysis_text(const AgentState& state);

// Taxonomy over the residual uncovered points of a terminated state. The
// manifest feeds the rule heuristics; pass nullptr when none is available.
TaxonomyResult classify_state(const AgentState& state, const DesignManifest* manifest);

// Writes reports/{tokens.json,curve.csv,report.json,report.txt,exclusions.txt}
// under the state's workspace.
void write_reports(const AgentState& state, const TaxonomyResult& taxonomy);

struct RunOutcome {
  AgentState state;
  TaxonomyResult taxonomy;
};

// Full run against an arbitrary backend: graph loop, taxonomy, reports.
RunOutcome run_with_backend(const RunConfig& config, LlmBackend& backend);

// Full deterministic run replaying a recorded turn script.
RunOutcome replay(const RunConfig& config, const std::filesystem::path& script_path);

// Full live run against the configured OpenAI-compatible endpoint; the API
// key comes from the environment variable named in config.api.key_env.
RunOutcome run_live(const RunConfig& config);

// Re-derives taxonomy and reports from a terminated checkpoint.
RunOutcome classify_checkpoint(const std::filesystem::path& state_path);

}  // namespace covagent
