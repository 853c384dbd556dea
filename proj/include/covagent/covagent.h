#ifndef COVAGENT_COVAGENT_H
#define COVAGENT_COVAGENT_H

/*
 * C interface to the coverage-closure agent orchestrator. All entry points
 * return a status code; COVAGENT_OK means success and anything else leaves a
 * description in covagent_last_error() for the calling thread. Handles are
 * opaque and single-owner: free them with the matching *_free function.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum covagent_status {
  COVAGENT_OK = 0,
  COVAGENT_ERR_CONFIG = 1,
  COVAGENT_ERR_SETUP = 2,
  COVAGENT_ERR_IO = 3,
  COVAGENT_ERR_PARSE = 4,
  COVAGENT_ERR_SANDBOX = 5,
  COVAGENT_ERR_PROVIDER = 6,
  COVAGENT_ERR_SCRIPT = 7,
  COVAGENT_ERR_MERGE = 8,
  COVAGENT_ERR_STATE = 9,
  COVAGENT_ERR_ENVIRONMENT = 10,
  COVAGENT_ERR_INVALID = 11,
  COVAGENT_ERR_INTERNAL = 12
} covagent_status;

/* Validated run configuration. */
typedef struct covagent_config covagent_config;
/* Completed run: terminated agent state plus the residual-hole taxonomy. */
typedef struct covagent_run covagent_run;

const char* covagent_version(void);

/* Message for the most recent failure on the calling thread; never NULL. */
const char* covagent_last_error(void);

covagent_status covagent_config_load(const char* path, covagent_config** out);
covagent_status covagent_config_set_workspace(covagent_config* config, const char* dir);
covagent_status covagent_config_set_model(covagent_config* config, const char* model_id);
covagent_status covagent_config_set_token_budget(covagent_config* config, long long budget);
covagent_status covagent_config_set_max_iterations(covagent_config* config, int value);
covagent_status covagent_config_use_mock_simulator(covagent_config* config);
void covagent_config_free(covagent_config* config);

/* Deterministic run replaying a recorded turn script; writes the workspace
 * reports on completion. */
covagent_status covagent_replay(const covagent_config* config, const char* script_path,
                                covagent_run** out);
/* Live run against the configured provider endpoint; the API key comes from
 * the environment variable named in the configuration. */
covagent_status covagent_run_live(const covagent_config* config, covagent_run** out);
/* Reloads a checkpoint written by a previous run and re-derives taxonomy and
 * reports from it. */
covagent_status covagent_load_state(const char* state_path, covagent_run** out);
void covagent_run_free(covagent_run* run);

double covagent_run_coverage_percent(const covagent_run* run);
size_t covagent_run_covered_points(const covagent_run* run);
size_t covagent_run_total_points(const covagent_run* run);
int covagent_run_iterations(const covagent_run* run);
/* One of: target_reached, iteration_limit, token_budget, agent_declared;
 * "" when the run never reached a termination decision. */
const char* covagent_run_termination_reason(const covagent_run* run);
long long covagent_run_total_tokens(const covagent_run* run);
double covagent_run_cost_dollars(const covagent_run* run);
size_t covagent_run_residual_holes(const covagent_run* run);
size_t covagent_run_ceiling_holes(const covagent_run* run);
size_t covagent_run_frontier_holes(const covagent_run* run);
const char* covagent_run_workspace(const covagent_run* run);

/* Out strings are heap copies; release with covagent_string_free. */
covagent_status covagent_run_profile_text(const covagent_run* run, char** out_text);
covagent_status covagent_run_report_text(const covagent_run* run, char** out_text);
covagent_status covagent_run_exclusions_text(const covagent_run* run, char** out_text);
covagent_status covagent_run_curve_csv(const covagent_run* run, char** out_text);
void covagent_string_free(char* text);

/* Union-merges `count` coverage snapshot files over one shared point
 * universe and writes the merged snapshot to out_path. */
covagent_status covagent_merge_files(const char* const* inputs, size_t count,
                                     const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* COVAGENT_COVAGENT_H */
