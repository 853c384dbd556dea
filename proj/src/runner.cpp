#include "runner.hpp"

#include <cstdlib>
#include <optional>
#include <utility>

#include "ledger.hpp"
#include "lint.hpp"

namespace covagent {

namespace {

std::string design_display_name(const RunConfig& config) {
  std::string name = top_module_name(config.top_module_header);
  if (name.empty()) {
    name = config.design_paths.front().stem().string();
  }
  return name;
}

// Loads the manifest for configs whose rule heuristics can run; `storage`
// owns the manifest for the returned pointer's lifetime.
const DesignManifest* manifest_for(const RunConfig& config,
                                   std::optional<DesignManifest>& storage) {
  if (config.simulator.mode != SimulatorMode::Mock) {
    return nullptr;
  }
  storage = DesignManifest::load(config.design_paths.front());
  return &*storage;
}

}  // namespace

std::unique_ptr<SimBackend> make_sim_backend(const RunConfig& config) {
  if (config.simulator.mode == SimulatorMode::Mock) {
    return std::make_unique<MockSimulator>(DesignManifest::load(config.design_paths.front()));
  }
  return std::make_unique<CommandSimulator>(config.simulator, config.design_paths,
                                            design_display_name(config));
}

std::string final_analysis_text(const AgentState& state) {
  std::size_t termination = state.messages.size();
  for (std::size_t i = 0; i < state.messages.size(); ++i) {
    if (state.messages[i].tag == MessageTag::Termination) termination = i;
  }
  if (termination == state.messages.size()) {
    return "";
  }
  for (std::size_t i = termination + 1; i < state.messages.size(); ++i) {
    if (state.messages[i].role == Role::Assistant) {
      return state.messages[i].content;
    }
  }
  return "";
}

TaxonomyResult classify_state(const AgentState& state, const DesignManifest* manifest) {
  return classify_residual(state.cumulative_coverage, final_analysis_text(state), manifest);
}

void write_reports(const AgentState& state, const TaxonomyResult& taxonomy) {
  const auto reports = state.config.workspace_dir / "reports";
  std::error_code ec;
  std::filesystem::create_directories(reports, ec);
  if (ec) {
    fail(ErrorKind::Setup,
         "cannot create reports directory '" + reports.string() + "': " + ec.message());
  }
  write_tokens_json(state.ledger, state.coverage_percent(), state.config.pricing,
                    reports / "tokens.json");
  write_curve_csv(state.ledger, reports / "curve.csv");
  write_text_file_atomic(reports / "report.json",
                         final_report_json(state, taxonomy).dump(2) + "\n");
  write_text_file_atomic(reports / "report.txt", final_report_text(state, taxonomy));
  write_text_file_atomic(reports / "exclusions.txt",
                         exclusion_list_text(taxonomy.classifications));
}

RunOutcome run_with_backend(const RunConfig& config, LlmBackend& backend) {
  auto sim = make_sim_backend(config);
  GraphEngine engine(config, backend, *sim);
  engine.run();
  std::optional<DesignManifest> storage;
  TaxonomyResult taxonomy = classify_state(engine.state(), manifest_for(config, storage));
  write_reports(engine.state(), taxonomy);
  return RunOutcome{std::move(engine.state()), std::move(taxonomy)};
}

RunOutcome replay(const RunConfig& config, const std::filesystem::path& script_path) {
  ScriptedBackend backend =
      ScriptedBackend::load(script_path, ScriptedBackend::substitutions_for(config));
  return run_with_backend(config, backend);
}

RunOutcome run_live(const RunConfig& config) {
  const char* key = std::getenv(config.api.key_env.c_str());
  if (key == nullptr || *key == '\0') {
    fail(ErrorKind::Config,
         "environment variable '" + config.api.key_env + "' is not set (API key)");
  }
  OpenAiOptions options;
  options.base_url = config.api.base_url;
  options.api_key = key;
  OpenAiBackend backend(std::move(options));
  return run_with_backend(config, backend);
}

RunOutcome classify_checkpoint(const std::filesystem::path& state_path) {
  AgentState state = AgentState::load(state_path);
  std::optional<DesignManifest> storage;
  TaxonomyResult taxonomy = classify_state(state, manifest_for(state.config, storage));
  write_reports(state, taxonomy);
  return RunOutcome{std::move(state), std::move(taxonomy)};
}

}  // namespace covagent
