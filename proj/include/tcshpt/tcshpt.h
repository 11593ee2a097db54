/* C interface to the hyperparameter-tuning engine.
 *
 * Conventions:
 *   - Every object is an opaque handle created by a tcshpt_* constructor and
 *     released by the matching *_free; free functions accept NULL.
 *   - Functions that can fail return tcshpt_status and, when err_msg is
 *     non-NULL, store a diagnostic the caller releases with
 *     tcshpt_string_free. Out-parameters are untouched on failure.
 *   - All returned char* strings are owned by the caller unless documented
 *     otherwise; release them with tcshpt_string_free.
 *   - Handles are not thread-safe; use one per thread.
 */
#ifndef TCSHPT_H
#define TCSHPT_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tcshpt_status {
    TCSHPT_OK = 0,
    TCSHPT_ERR_IO = 1,         /* unreadable file, bad JSON/JSONL */
    TCSHPT_ERR_VALIDATION = 2, /* schema violation, bad value, bad override */
    TCSHPT_ERR_BACKEND = 3,    /* chat endpoint unreachable or unusable */
    TCSHPT_ERR_RUNTIME = 4,    /* aborted run, failed objective, no trials */
    TCSHPT_ERR_ARGUMENT = 5    /* NULL handle or out-of-range argument */
} tcshpt_status;

typedef struct tcshpt_experiment tcshpt_experiment;
typedef struct tcshpt_result tcshpt_result;
typedef struct tcshpt_log tcshpt_log;
typedef struct tcshpt_probe tcshpt_probe;

/* Library version as "major.minor.patch". Static storage; do not free. */
const char* tcshpt_version(void);

void tcshpt_string_free(char* s);

/* ---- experiment files ------------------------------------------------- */

/* Parses and validates an experiment file (see schema/experiment.schema.json).
 * API keys are read from the environment variable named in the file, never
 * from the file itself. */
tcshpt_status tcshpt_experiment_load(const char* path,
                                     tcshpt_experiment** out,
                                     char** err_msg);

/* Overrides one setting before running. Keys: "trials", "runs", "seed",
 * "mode" (tcs|no-tcs|random), "backend", "model", "output_dir". "backend"
 * and "model" apply to both agents. Values arrive as strings and are parsed
 * per key. */
tcshpt_status tcshpt_experiment_override(tcshpt_experiment* exp,
                                         const char* key,
                                         const char* value,
                                         char** err_msg);

void tcshpt_experiment_free(tcshpt_experiment* exp);

/* ---- running ----------------------------------------------------------- */

/* Called after each finished trial with the trial record serialized as JSON.
 * The string is only valid during the call. */
typedef void (*tcshpt_trial_callback)(const char* trial_json,
                                      void* user_data);

/* Executes the experiment's full budget (runs x trials) with consecutive
 * seeds, writing logs and a manifest under the configured output directory.
 * `callback` may be NULL. */
tcshpt_status tcshpt_run(tcshpt_experiment* exp,
                         tcshpt_trial_callback callback,
                         void* user_data,
                         tcshpt_result** out,
                         char** err_msg);

/* Accessors return 0/NaN/zero-like values only via their status codes;
 * run_index must be in [0, run_count). */
int tcshpt_result_run_count(const tcshpt_result* result);
double tcshpt_result_mean_best(const tcshpt_result* result);
double tcshpt_result_std_best(const tcshpt_result* result);
/* 1 when the spread is meaningless because only one run happened. */
int tcshpt_result_degenerate_std(const tcshpt_result* result);
tcshpt_status tcshpt_result_run_id(const tcshpt_result* result,
                                   int run_index, char** out);
tcshpt_status tcshpt_result_best_metric(const tcshpt_result* result,
                                        int run_index, double* out);
/* 1-based index of the best trial within the run's log. */
tcshpt_status tcshpt_result_best_trial(const tcshpt_result* result,
                                       int run_index, int* out);
void tcshpt_result_free(tcshpt_result* result);

/* ---- trial logs --------------------------------------------------------- */

/* Opens a JSONL trial log. Empty or malformed files are TCSHPT_ERR_IO. */
tcshpt_status tcshpt_log_open(const char* path, tcshpt_log** out,
                              char** err_msg);

int tcshpt_log_trial_count(const tcshpt_log* log);

/* Renders the log's state report. `budget` is the run's total trial
 * allotment shown in the CURRENT SITUATION section; budget <= 0 defaults to
 * the number of trials in the log. */
tcshpt_status tcshpt_log_summary(const tcshpt_log* log, int budget,
                                 char** out_text, char** err_msg);

void tcshpt_log_free(tcshpt_log* log);

/* ---- response-variance probe ------------------------------------------- */

/* Sends the experiment's first-iteration optimizer prompt `n` times to the
 * optimizer backend and extracts `param_name` (NULL: the first optimizable
 * parameter) from each reply. Backend failures and unparseable replies
 * count as invalid attempts; the probe itself fails only when nothing could
 * even be attempted. */
tcshpt_status tcshpt_probe_run(tcshpt_experiment* exp,
                               const char* param_name, int n,
                               tcshpt_probe** out, char** err_msg);

int tcshpt_probe_count(const tcshpt_probe* probe);
int tcshpt_probe_valid_count(const tcshpt_probe* probe);

/* Returns 1 and stores the parsed value's text when attempt `index` was
 * valid; returns 0 and stores NULL otherwise. */
int tcshpt_probe_value(const tcshpt_probe* probe, int index, char** out);

/* CSV with header "attempt,value,valid"; invalid attempts have an empty
 * value cell. */
tcshpt_status tcshpt_probe_csv(const tcshpt_probe* probe, char** out);

void tcshpt_probe_free(tcshpt_probe* probe);

/* ---- comparison export -------------------------------------------------- */

/* Reads n_paths JSONL logs and emits CSV with header
 * "run_id,trial,final_metric,best_so_far": one row per trial per run
 * (failed trials have an empty final_metric) followed by one summary row
 * "summary,<n_runs>,<mean>,<std>" aggregating the per-run bests. */
tcshpt_status tcshpt_export_csv(const char* const* log_paths, int n_paths,
                                char** out, char** err_msg);

#ifdef __cplusplus
}
#endif

#endif /* TCSHPT_H */
