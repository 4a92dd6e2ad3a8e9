#ifndef NMRL_H
#define NMRL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum NmrlStatus {
  NMRL_STATUS_OK = 0,
  /**
   * A model, config or argument failed validation.
   */
  NMRL_STATUS_VALIDATION = 1,
  /**
   * A file could not be parsed.
   */
  NMRL_STATUS_PARSE = 2,
  NMRL_STATUS_IO = 3,
  /**
   * A numerical precondition failed (reducible chain, singular system,
   * non-convergence, ...).
   */
  NMRL_STATUS_NUMERICAL = 4,
  /**
   * An enumeration exceeded its budget.
   */
  NMRL_STATUS_BUDGET = 5,
  NMRL_STATUS_NULL_ARGUMENT = 6,
  /**
   * The caller's buffer is shorter than the result; the required length
   * has been written.
   */
  NMRL_STATUS_BUFFER_TOO_SMALL = 7,
  NMRL_STATUS_PANIC = 8,
} NmrlStatus;

/**
 * A validated experiment config resolved against its model.
 */
typedef struct NmrlExperiment NmrlExperiment;

/**
 * A parsed model file.
 */
typedef struct NmrlModel NmrlModel;

/**
 * Oracle outputs of an experiment.
 */
typedef struct NmrlOracle NmrlOracle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nmrl_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on this thread.
 */
const char *nmrl_last_error(void);

/**
 * Reads a model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum NmrlStatus nmrl_model_load(const char *path, struct NmrlModel **out);

/**
 * Parses model text; `origin` labels error messages.
 *
 * # Safety
 * `text` and `origin` must be NUL-terminated strings; `out` must be
 * writable.
 */
enum NmrlStatus nmrl_model_parse(const char *text, const char *origin, struct NmrlModel **out);

/**
 * State, observation and action counts and the window memory.
 *
 * # Safety
 * `model` must come from this library; the outputs must be writable.
 */
enum NmrlStatus nmrl_model_dims(const struct NmrlModel *model,
                                size_t *num_states,
                                size_t *num_obs,
                                size_t *num_actions,
                                size_t *memory);

/**
 * # Safety
 * `model` must come from [`nmrl_model_load`] or [`nmrl_model_parse`] and
 * not be used afterwards. Null is ignored.
 */
void nmrl_model_free(struct NmrlModel *model);

/**
 * Loads and validates an experiment config and its model.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `out` must be writable.
 */
enum NmrlStatus nmrl_experiment_load(const char *config_path, struct NmrlExperiment **out);

/**
 * Length of the learner iterate (and of the oracle target).
 *
 * # Safety
 * `experiment` must come from this library; `len` must be writable.
 */
enum NmrlStatus nmrl_experiment_iterate_len(const struct NmrlExperiment *experiment, size_t *len);

/**
 * Runs the oracle and every seed, writing all artifacts to `out_dir`.
 * `exit_code` receives the command-line exit code of the run (0, 2 or 3).
 *
 * # Safety
 * `experiment` must come from this library; `out_dir` must be a
 * NUL-terminated string; `exit_code` must be writable.
 */
enum NmrlStatus nmrl_experiment_run(const struct NmrlExperiment *experiment,
                                    const char *out_dir,
                                    int32_t *exit_code);

/**
 * # Safety
 * `experiment` must come from [`nmrl_experiment_load`] and not be used
 * afterwards. Null is ignored.
 */
void nmrl_experiment_free(struct NmrlExperiment *experiment);

/**
 * Computes the oracle of an experiment.
 *
 * # Safety
 * `experiment` must come from this library; `out` must be writable.
 */
enum NmrlStatus nmrl_oracle_compute(const struct NmrlExperiment *experiment,
                                    struct NmrlOracle **out);

/**
 * Copies the learner target (`theta*` or `Q*`, NaN on dropped cells) into
 * `buf`. `len` receives the target length, 0 when there is no target.
 *
 * # Safety
 * `oracle` must come from this library; `buf` must hold `capacity`
 * doubles (it may be null when `capacity` is 0); `len` must be writable.
 */
enum NmrlStatus nmrl_oracle_target(const struct NmrlOracle *oracle,
                                   double *buf,
                                   size_t capacity,
                                   size_t *len);

/**
 * Number of error-bound reports.
 *
 * # Safety
 * `oracle` must come from this library; `count` must be writable.
 */
enum NmrlStatus nmrl_oracle_bound_count(const struct NmrlOracle *oracle, size_t *count);

/**
 * Both sides and the slack `rhs - lhs` of bound report `index`.
 *
 * # Safety
 * `oracle` must come from this library; the outputs must be writable.
 */
enum NmrlStatus nmrl_oracle_bound(const struct NmrlOracle *oracle,
                                  size_t index,
                                  double *lhs,
                                  double *rhs,
                                  double *slack);

/**
 * Whether any bound report has slack below the tolerance.
 *
 * # Safety
 * `oracle` must come from this library; `violated` must be writable.
 */
enum NmrlStatus nmrl_oracle_bound_violated(const struct NmrlOracle *oracle, bool *violated);

/**
 * Writes the config echo, model and oracle artifacts to `out_dir`.
 *
 * # Safety
 * Both handles must come from this library; `out_dir` must be a
 * NUL-terminated string.
 */
enum NmrlStatus nmrl_oracle_write(const struct NmrlExperiment *experiment,
                                  const struct NmrlOracle *oracle,
                                  const char *out_dir);

/**
 * # Safety
 * `oracle` must come from [`nmrl_oracle_compute`] and not be used
 * afterwards. Null is ignored.
 */
void nmrl_oracle_free(struct NmrlOracle *oracle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NMRL_H */
