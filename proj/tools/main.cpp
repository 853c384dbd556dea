#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covagent/covagent.h"

namespace {

int print_failure() {
  std::fprintf(stderr, "error: %s\n", covagent_last_error());
  return 1;
}

struct Overrides {
  std::string workspace;
  std::string model;
  long long budget = -1;
  int max_iter = -1;
  bool mock_sim = false;
};

void add_override_options(CLI::App* cmd, Overrides& overrides) {
  cmd->add_option("--workspace", overrides.workspace, "Override the workspace directory");
  cmd->add_option("--model", overrides.model, "Override the model id");
  cmd->add_option("--budget", overrides.budget, "Override the token budget");
  cmd->add_option("--max-iter", overrides.max_iter, "Override the iteration limit");
  cmd->add_flag("--mock-sim", overrides.mock_sim, "Use the built-in mock simulator");
}

covagent_status apply_overrides(covagent_config* config, const Overrides& overrides) {
  covagent_status status = COVAGENT_OK;
  if (status == COVAGENT_OK && !overrides.workspace.empty()) {
    status = covagent_config_set_workspace(config, overrides.workspace.c_str());
  }
  if (status == COVAGENT_OK && !overrides.model.empty()) {
    status = covagent_config_set_model(config, overrides.model.c_str());
  }
  if (status == COVAGENT_OK && overrides.budget >= 0) {
    status = covagent_config_set_token_budget(config, overrides.budget);
  }
  if (status == COVAGENT_OK && overrides.max_iter >= 0) {
    status = covagent_config_set_max_iterations(config, overrides.max_iter);
  }
  if (status == COVAGENT_OK && overrides.mock_sim) {
    status = covagent_config_use_mock_simulator(config);
  }
  return status;
}

void print_summary(const covagent_run* run) {
  std::printf("termination:    %s\n", covagent_run_termination_reason(run));
  std::printf("coverage:       %.2f%% (%zu/%zu points)\n", covagent_run_coverage_percent(run),
              covagent_run_covered_points(run), covagent_run_total_points(run));
  std::printf("iterations:     %d\n", covagent_run_iterations(run));
  std::printf("tokens billed:  %lld\n", covagent_run_total_tokens(run));
  std::printf("cost:           $%.4f\n", covagent_run_cost_dollars(run));
  std::printf("residual holes: %zu (ceiling %zu, frontier %zu)\n",
              covagent_run_residual_holes(run), covagent_run_ceiling_holes(run),
              covagent_run_frontier_holes(run));
  std::printf("reports:        %s/reports\n", covagent_run_workspace(run));
}

// 0 when the coverage target was reached, 2 otherwise.
int completion_exit_code(const covagent_run* run) {
  return std::strcmp(covagent_run_termination_reason(run), "target_reached") == 0 ? 0 : 2;
}

int execute_run(const std::string& config_path, const std::string& script_path,
                const Overrides& overrides) {
  covagent_config* config = nullptr;
  if (covagent_config_load(config_path.c_str(), &config) != COVAGENT_OK) {
    return print_failure();
  }
  if (apply_overrides(config, overrides) != COVAGENT_OK) {
    covagent_config_free(config);
    return print_failure();
  }
  covagent_run* run = nullptr;
  const covagent_status status =
      script_path.empty() ? covagent_run_live(config, &run)
                          : covagent_replay(config, script_path.c_str(), &run);
  covagent_config_free(config);
  if (status != COVAGENT_OK) {
    return print_failure();
  }
  print_summary(run);
  const int exit_code = completion_exit_code(run);
  covagent_run_free(run);
  return exit_code;
}

int print_run_text(const std::string& state_path,
                   covagent_status (*getter)(const covagent_run*, char**),
                   const std::string& out_path) {
  covagent_run* run = nullptr;
  if (covagent_load_state(state_path.c_str(), &run) != COVAGENT_OK) {
    return print_failure();
  }
  char* text = nullptr;
  if (getter(run, &text) != COVAGENT_OK) {
    covagent_run_free(run);
    return print_failure();
  }
  int exit_code = 0;
  if (out_path.empty()) {
    std::fputs(text, stdout);
  } else {
    std::FILE* file = std::fopen(out_path.c_str(), "wb");
    if (file == nullptr) {
      std::fprintf(stderr, "error: cannot open '%s' for writing\n", out_path.c_str());
      exit_code = 1;
    } else {
      std::fputs(text, file);
      std::fclose(file);
      std::printf("wrote %s\n", out_path.c_str());
    }
  }
  covagent_string_free(text);
  covagent_run_free(run);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coverage-closure agent: LLM-driven stimulus generation to closure"};
  app.require_subcommand(1);

  std::string config_path;
  std::string script_path;
  std::string state_path;
  std::string out_path;
  std::string merge_out;
  std::vector<std::string> merge_inputs;
  Overrides overrides;

  CLI::App* run_cmd =
      app.add_subcommand("run", "Run the agent loop against the live provider");
  run_cmd->add_option("--config", config_path, "Run configuration file")->required();
  add_override_options(run_cmd, overrides);

  CLI::App* replay_cmd =
      app.add_subcommand("replay", "Run the agent loop against a recorded turn script");
  replay_cmd->add_option("--config", config_path, "Run configuration file")->required();
  replay_cmd->add_option("--script", script_path, "Recorded turn script")->required();
  add_override_options(replay_cmd, overrides);

  CLI::App* profile_cmd =
      app.add_subcommand("profile", "Print the token profile of a finished run");
  profile_cmd->add_option("--state", state_path, "Run checkpoint (state.json)")->required();

  CLI::App* classify_cmd = app.add_subcommand(
      "classify", "Re-derive the coverage-hole taxonomy of a finished run");
  classify_cmd->add_option("--state", state_path, "Run checkpoint (state.json)")->required();

  CLI::App* merge_cmd = app.add_subcommand("merge", "Union-merge coverage snapshot files");
  merge_cmd->add_option("--out", merge_out, "Merged snapshot output path")->required();
  merge_cmd->add_option("inputs", merge_inputs, "Snapshot files to merge")
      ->required()
      ->expected(-1);

  CLI::App* curve_cmd =
      app.add_subcommand("curve", "Print the tokens-versus-coverage curve as CSV");
  curve_cmd->add_option("--state", state_path, "Run checkpoint (state.json)")->required();
  curve_cmd->add_option("--out", out_path, "Write the CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    return execute_run(config_path, "", overrides);
  }
  if (replay_cmd->parsed()) {
    return execute_run(config_path, script_path, overrides);
  }
  if (profile_cmd->parsed()) {
    return print_run_text(state_path, covagent_run_profile_text, "");
  }
  if (classify_cmd->parsed()) {
    return print_run_text(state_path, covagent_run_report_text, "");
  }
  if (merge_cmd->parsed()) {
    std::vector<const char*> inputs;
    inputs.reserve(merge_inputs.size());
    for (const std::string& input : merge_inputs) {
      inputs.push_back(input.c_str());
    }
    if (covagent_merge_files(inputs.data(), inputs.size(), merge_out.c_str()) != COVAGENT_OK) {
      return print_failure();
    }
    std::printf("wrote %s\n", merge_out.c_str());
    return 0;
  }
  if (curve_cmd->parsed()) {
    return print_run_text(state_path, covagent_run_curve_csv, out_path);
  }
  return 1;
}
