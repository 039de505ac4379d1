#ifndef APERTURE_H
#define APERTURE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ApStatus {
  ApStatus_Ok = 0,
  ApStatus_NullPointer = 1,
  ApStatus_InvalidArgument = 2,
  /**
   * Config failed to parse or validate.
   */
  ApStatus_Validation = 3,
  /**
   * Time step above the stability limit.
   */
  ApStatus_Cfl = 4,
  /**
   * An estimator's preconditions failed (too few nodes, scales, ...).
   */
  ApStatus_Estimator = 5,
  ApStatus_Internal = 6,
} ApStatus;

/**
 * Parsed and validated experiment configuration.
 */
typedef struct ApExperiment ApExperiment;

/**
 * Result rows of a finished experiment.
 */
typedef struct ApResults ApResults;

/**
 * Discrete solution of the configured problem (no sweep applied).
 */
typedef struct ApSolution ApSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *ap_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ap_version(void);

/**
 * Maximal Pucci operator of the symmetric matrix given by its upper
 * triangle (row by row, `dim (dim + 1) / 2` entries).
 *
 * # Safety
 * `upper` must point to `dim (dim + 1) / 2` doubles and `out` to one.
 */
enum ApStatus ap_pucci_plus(uintptr_t dim,
                            const double *upper,
                            double lambda,
                            double big_lambda,
                            double *out);

/**
 * Minimal Pucci operator; see [`ap_pucci_plus`].
 *
 * # Safety
 * As for [`ap_pucci_plus`].
 */
enum ApStatus ap_pucci_minus(uintptr_t dim,
                             const double *upper,
                             double lambda,
                             double big_lambda,
                             double *out);

/**
 * Parses config text into a new handle stored in `*out`.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ApStatus ap_experiment_new(const char *config, struct ApExperiment **out);

/**
 * # Safety
 * `exp` must come from [`ap_experiment_new`] (or be NULL) and not be used
 * afterwards.
 */
void ap_experiment_free(struct ApExperiment *exp);

/**
 * Runs every sweep point on `workers` threads (0 uses the config value).
 *
 * # Safety
 * `exp` must be a live handle and `out` a valid pointer.
 */
enum ApStatus ap_experiment_run(const struct ApExperiment *exp,
                                uintptr_t workers,
                                struct ApResults **out);

/**
 * Number of result rows.
 *
 * # Safety
 * `res` must be a live handle or NULL.
 */
uintptr_t ap_results_rows(const struct ApResults *res);

/**
 * Results as CSV text; owned by the handle.
 *
 * # Safety
 * `res` must be a live handle or NULL.
 */
const char *ap_results_csv(const struct ApResults *res);

/**
 * # Safety
 * `res` must come from [`ap_experiment_run`] (or be NULL) and not be used
 * afterwards.
 */
void ap_results_free(struct ApResults *res);

/**
 * Solves the configured problem once, ignoring any sweep.
 *
 * # Safety
 * `exp` must be a live handle and `out` a valid pointer.
 */
enum ApStatus ap_solve(const struct ApExperiment *exp, struct ApSolution **out);

/**
 * Stored time levels and spatial nodes per level of a solution.
 *
 * # Safety
 * `sol` must be a live handle; the output pointers must be valid.
 */
enum ApStatus ap_solution_shape(const struct ApSolution *sol,
                                uintptr_t *levels,
                                uintptr_t *nodes_per_level);

/**
 * Copies the solution values (time level major, oldest level first) into
 * `buf`, which must hold `len >= levels * nodes_per_level` doubles.
 *
 * # Safety
 * `sol` must be a live handle and `buf` must hold `len` doubles.
 */
enum ApStatus ap_solution_values(const struct ApSolution *sol, double *buf, uintptr_t len);

/**
 * # Safety
 * `sol` must come from [`ap_solve`] (or be NULL) and not be used afterwards.
 */
void ap_solution_free(struct ApSolution *sol);

/**
 * Checks the stacked covering inequality on `trials` seeded random
 * instances over the level-`level` dyadic lattice; stores how many passed.
 *
 * # Safety
 * `passed` must be a valid pointer.
 */
enum ApStatus ap_covering_trials(uintptr_t dim,
                                 uint32_t level,
                                 uintptr_t trials,
                                 uint64_t seed,
                                 uintptr_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APERTURE_H */
