#include "covagent/covagent.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>

#include "runner.hpp"

struct covagent_config {
  covagent::RunConfig config;
};

struct covagent_run {
  covagent::RunOutcome outcome;
  // Stable storage for const char* accessors.
  std::string workspace;
  std::string reason;
};

namespace {

thread_local std::string g_last_error;

covagent_status status_from(covagent::ErrorKind kind) {
  using covagent::ErrorKind;
  switch (kind) {
    case ErrorKind::Config: return COVAGENT_ERR_CONFIG;
    case ErrorKind::Setup: return COVAGENT_ERR_SETUP;
    case ErrorKind::Io: return COVAGENT_ERR_IO;
    case ErrorKind::Parse: return COVAGENT_ERR_PARSE;
    case ErrorKind::Sandbox: return COVAGENT_ERR_SANDBOX;
    case ErrorKind::Provider: return COVAGENT_ERR_PROVIDER;
    case ErrorKind::Script: return COVAGENT_ERR_SCRIPT;
    case ErrorKind::Merge: return COVAGENT_ERR_MERGE;
    case ErrorKind::State: return COVAGENT_ERR_STATE;
    case ErrorKind::Environment: return COVAGENT_ERR_ENVIRONMENT;
    case ErrorKind::Invalid: return COVAGENT_ERR_INVALID;
  }
  return COVAGENT_ERR_INTERNAL;
}

template <typename Fn>
covagent_status guarded(Fn&& fn) {
  try {
    fn();
    return COVAGENT_OK;
  } catch (const covagent::Error& error) {
    g_last_error = error.what();
    return status_from(error.kind());
  } catch (const std::exception& error) {
    g_last_error = error.what();
    return COVAGENT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return COVAGENT_ERR_INTERNAL;
  }
}

covagent_status invalid(const char* message) {
  g_last_error = message;
  return COVAGENT_ERR_INVALID;
}

char* heap_copy(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) return nullptr;
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

covagent_status emit_string(const std::string& text, char** out_text) {
  char* copy = heap_copy(text);
  if (copy == nullptr) {
    g_last_error = "out of memory";
    return COVAGENT_ERR_INTERNAL;
  }
  *out_text = copy;
  return COVAGENT_OK;
}

covagent_run* wrap_outcome(covagent::RunOutcome outcome) {
  auto* run = new covagent_run{std::move(outcome), {}, {}};
  run->workspace = run->outcome.state.config.workspace_dir.string();
  if (run->outcome.state.termination_reason) {
    run->reason = covagent::to_string(*run->outcome.state.termination_reason);
  }
  return run;
}

std::string profile_text(const covagent::AgentState& state) {
  using covagent::format_fixed;
  const covagent::Usage usage = state.ledger.usage_totals();
  std::string out = "token profile\n";
  out += "=============\n";
  out += "total billed: " + std::to_string(state.ledger.total_billed()) + " (input " +
         std::to_string(usage.input_tokens) + ", output " + std::to_string(usage.output_tokens) +
         ", reasoning " + std::to_string(usage.reasoning_tokens) + ")\n";
  out += "llm calls:    " + std::to_string(state.ledger.records().size()) + "\n";
  out += "cost:         $" + format_fixed(state.ledger.cost(state.config.pricing), 4) + "\n";
  if (usage.flagged) {
    out += "note: at least one call lacked a component breakdown; missing components "
           "are recorded as 0\n";
  }
  out += "\n" + covagent::allocation_text(state.ledger);
  const auto efficiency = state.ledger.efficiency(state.coverage_percent());
  out += "\nefficiency\n";
  out += "  stimulus-generation tokens per coverage percent: " +
         format_fixed(efficiency.sg_tokens_per_coverage_percent, 1) + "\n";
  out += "  stimulus-generation output share: " +
         format_fixed(efficiency.sg_output_share_percent, 1) + "%\n";
  return out;
}

}  // namespace

extern "C" {

const char* covagent_version(void) { return "1.0.0"; }

const char* covagent_last_error(void) { return g_last_error.c_str(); }

covagent_status covagent_config_load(const char* path, covagent_config** out) {
  if (path == nullptr || out == nullptr) return invalid("covagent_config_load: NULL argument");
  *out = nullptr;
  return guarded([&] {
    auto config = std::make_unique<covagent_config>();
    config->config = covagent::RunConfig::load(path);
    *out = config.release();
  });
}

covagent_status covagent_config_set_workspace(covagent_config* config, const char* dir) {
  if (config == nullptr || dir == nullptr) {
    return invalid("covagent_config_set_workspace: NULL argument");
  }
  return guarded([&] {
    config->config.workspace_dir =
        std::filesystem::absolute(dir).lexically_normal();
    config->config.validate();
  });
}

covagent_status covagent_config_set_model(covagent_config* config, const char* model_id) {
  if (config == nullptr || model_id == nullptr) {
    return invalid("covagent_config_set_model: NULL argument");
  }
  return guarded([&] {
    config->config.model_id = model_id;
    config->config.validate();
  });
}

covagent_status covagent_config_set_token_budget(covagent_config* config, long long budget) {
  if (config == nullptr) return invalid("covagent_config_set_token_budget: NULL config");
  return guarded([&] {
    config->config.token_budget = budget;
    config->config.validate();
  });
}

covagent_status covagent_config_set_max_iterations(covagent_config* config, int value) {
  if (config == nullptr) return invalid("covagent_config_set_max_iterations: NULL config");
  return guarded([&] {
    config->config.max_iterations = value;
    config->config.validate();
  });
}

covagent_status covagent_config_use_mock_simulator(covagent_config* config) {
  if (config == nullptr) return invalid("covagent_config_use_mock_simulator: NULL config");
  return guarded([&] {
    config->config.simulator.mode = covagent::SimulatorMode::Mock;
    config->config.validate();
  });
}

void covagent_config_free(covagent_config* config) { delete config; }

covagent_status covagent_replay(const covagent_config* config, const char* script_path,
                                covagent_run** out) {
  if (config == nullptr || script_path == nullptr || out == nullptr) {
    return invalid("covagent_replay: NULL argument");
  }
  *out = nullptr;
  return guarded([&] { *out = wrap_outcome(covagent::replay(config->config, script_path)); });
}

covagent_status covagent_run_live(const covagent_config* config, covagent_run** out) {
  if (config == nullptr || out == nullptr) return invalid("covagent_run_live: NULL argument");
  *out = nullptr;
  return guarded([&] { *out = wrap_outcome(covagent::run_live(config->config)); });
}

covagent_status covagent_load_state(const char* state_path, covagent_run** out) {
  if (state_path == nullptr || out == nullptr) {
    return invalid("covagent_load_state: NULL argument");
  }
  *out = nullptr;
  return guarded([&] { *out = wrap_outcome(covagent::classify_checkpoint(state_path)); });
}

void covagent_run_free(covagent_run* run) { delete run; }

double covagent_run_coverage_percent(const covagent_run* run) {
  return run == nullptr ? 0.0 : run->outcome.state.coverage_percent();
}

size_t covagent_run_covered_points(const covagent_run* run) {
  return run == nullptr ? 0 : run->outcome.state.cumulative_coverage.covered_count();
}

size_t covagent_run_total_points(const covagent_run* run) {
  return run == nullptr ? 0 : run->outcome.state.cumulative_coverage.size();
}

int covagent_run_iterations(const covagent_run* run) {
  return run == nullptr ? 0 : run->outcome.state.iteration;
}

const char* covagent_run_termination_reason(const covagent_run* run) {
  return run == nullptr ? "" : run->reason.c_str();
}

long long covagent_run_total_tokens(const covagent_run* run) {
  return run == nullptr ? 0 : run->outcome.state.ledger.total_billed();
}

double covagent_run_cost_dollars(const covagent_run* run) {
  if (run == nullptr) return 0.0;
  return run->outcome.state.ledger.cost(run->outcome.state.config.pricing);
}

size_t covagent_run_residual_holes(const covagent_run* run) {
  return run == nullptr ? 0 : run->outcome.taxonomy.classifications.size();
}

size_t covagent_run_ceiling_holes(const covagent_run* run) {
  if (run == nullptr) return 0;
  size_t count = 0;
  for (const auto& classification : run->outcome.taxonomy.classifications) {
    if (covagent::is_ceiling(classification.category)) count += 1;
  }
  return count;
}

size_t covagent_run_frontier_holes(const covagent_run* run) {
  if (run == nullptr) return 0;
  return run->outcome.taxonomy.classifications.size() - covagent_run_ceiling_holes(run);
}

const char* covagent_run_workspace(const covagent_run* run) {
  return run == nullptr ? "" : run->workspace.c_str();
}

covagent_status covagent_run_profile_text(const covagent_run* run, char** out_text) {
  if (run == nullptr || out_text == nullptr) {
    return invalid("covagent_run_profile_text: NULL argument");
  }
  return guarded([&] {
    const covagent_status status = emit_string(profile_text(run->outcome.state), out_text);
    if (status != COVAGENT_OK) covagent::fail(covagent::ErrorKind::Invalid, g_last_error);
  });
}

covagent_status covagent_run_report_text(const covagent_run* run, char** out_text) {
  if (run == nullptr || out_text == nullptr) {
    return invalid("covagent_run_report_text: NULL argument");
  }
  return guarded([&] {
    *out_text = nullptr;
    const std::string text =
        covagent::final_report_text(run->outcome.state, run->outcome.taxonomy);
    if (emit_string(text, out_text) != COVAGENT_OK) {
      covagent::fail(covagent::ErrorKind::Invalid, g_last_error);
    }
  });
}

covagent_status covagent_run_exclusions_text(const covagent_run* run, char** out_text) {
  if (run == nullptr || out_text == nullptr) {
    return invalid("covagent_run_exclusions_text: NULL argument");
  }
  return guarded([&] {
    *out_text = nullptr;
    const std::string text =
        covagent::exclusion_list_text(run->outcome.taxonomy.classifications);
    if (emit_string(text, out_text) != COVAGENT_OK) {
      covagent::fail(covagent::ErrorKind::Invalid, g_last_error);
    }
  });
}

covagent_status covagent_run_curve_csv(const covagent_run* run, char** out_text) {
  if (run == nullptr || out_text == nullptr) {
    return invalid("covagent_run_curve_csv: NULL argument");
  }
  return guarded([&] {
    *out_text = nullptr;
    if (emit_string(covagent::curve_csv(run->outcome.state.ledger), out_text) != COVAGENT_OK) {
      covagent::fail(covagent::ErrorKind::Invalid, g_last_error);
    }
  });
}

void covagent_string_free(char* text) { std::free(text); }

covagent_status covagent_merge_files(const char* const* inputs, size_t count,
                                     const char* out_path) {
  if (inputs == nullptr || out_path == nullptr) {
    return invalid("covagent_merge_files: NULL argument");
  }
  if (count == 0) return invalid("covagent_merge_files: no input files");
  return guarded([&] {
    covagent::CoverageDatabase merged = covagent::load_snapshot(inputs[0]);
    for (size_t i = 1; i < count; ++i) {
      merged = covagent::merge(merged, covagent::load_snapshot(inputs[i]));
    }
    covagent::snapshot(merged, out_path);
  });
}

}  // extern "C"
