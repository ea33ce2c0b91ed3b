#ifndef CPCOX_H
#define CPCOX_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CpcoxStatus {
  CPCOX_STATUS_OK = 0,
  CPCOX_STATUS_NULL_POINTER = 1,
  CPCOX_STATUS_INVALID_ARGUMENT = 2,
  CPCOX_STATUS_DATA_ERROR = 3,
  CPCOX_STATUS_FIT_ERROR = 4,
  /**
   * Standard errors or intervals were requested from a fit whose
   * information matrix could not be inverted.
   */
  CPCOX_STATUS_UNAVAILABLE = 5,
  CPCOX_STATUS_PANIC = 6,
} CpcoxStatus;

/**
 * Opaque dataset handle.
 */
typedef struct CpcoxDataset CpcoxDataset;

/**
 * Opaque fit handle.
 */
typedef struct CpcoxFit CpcoxFit;

/**
 * Options for [`cpcox_fit`]. Obtain defaults from
 * [`cpcox_fit_options_default`].
 */
typedef struct CpcoxFitOptions {
  /**
   * Kernel bandwidth; zero or negative selects `(ln n)^2 / n`.
   */
  double bandwidth;
  /**
   * Grid starts for `psi`: points per dimension over `[grid_low, grid_high]`.
   */
  uint32_t grid_points;
  double grid_low;
  double grid_high;
  uint32_t outer_max_iter;
} CpcoxFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next `cpcox_*` call on the same thread.
 */
const char *cpcox_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cpcox_version(void);

/**
 * Builds a dataset from column arrays. `z` is `n × p1`, `u` is `n × p2`
 * and `x` is `n × q`, all row-major; `status` holds 0 or 1.
 *
 * # Safety
 * Every non-null pointer must reference at least the stated number of
 * elements. `out` must be writable.
 */
enum CpcoxStatus cpcox_dataset_new(size_t n,
                                   size_t p1,
                                   size_t p2,
                                   size_t q,
                                   const double *time,
                                   const int *status,
                                   const double *z,
                                   const double *u,
                                   const double *v,
                                   const double *x,
                                   struct CpcoxDataset **out);

/**
 * Loads a headed CSV file with a column mapping file (`time = …`,
 * `status = …`, `z = a,b`, `u = …`, `v = …`, `x = …`, `intercept = true`,
 * `standardize_v = true`).
 *
 * # Safety
 * `data_path` and `map_path` must be NUL-terminated strings; `out` must be
 * writable.
 */
enum CpcoxStatus cpcox_dataset_load_csv(const char *data_path,
                                        const char *map_path,
                                        struct CpcoxDataset **out);

/**
 * # Safety
 * `ds` must come from `cpcox_dataset_new` or `cpcox_dataset_load_csv` and
 * not have been freed. Null is ignored.
 */
void cpcox_dataset_free(struct CpcoxDataset *ds);

/**
 * Number of subjects, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be a live handle or null.
 */
size_t cpcox_dataset_n(const struct CpcoxDataset *ds);

/**
 * # Safety
 * `ds` must be a live handle; the out pointers must be writable.
 */
enum CpcoxStatus cpcox_dataset_dims(const struct CpcoxDataset *ds,
                                    size_t *p1,
                                    size_t *p2,
                                    size_t *q);

/**
 * `(ln n)^2 / n`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CpcoxStatus cpcox_default_bandwidth(size_t n, double *out);

/**
 * Smoothed log partial likelihood at `(beta, gamma, psi)` with bandwidth `h`.
 *
 * # Safety
 * `beta`, `gamma`, `psi` must hold `p1`, `p2`, `q` values; `out` must be
 * writable.
 */
enum CpcoxStatus cpcox_smoothed_loglik(const struct CpcoxDataset *ds,
                                       const double *beta,
                                       const double *gamma,
                                       const double *psi,
                                       double h,
                                       double *out);

/**
 * Gradients of the smoothed log partial likelihood: `score_xi` receives
 * `p1 + p2` values and `score_psi` receives `q`.
 *
 * # Safety
 * As for [`cpcox_smoothed_loglik`]; the outputs must hold the stated sizes.
 */
enum CpcoxStatus cpcox_scores(const struct CpcoxDataset *ds,
                              const double *beta,
                              const double *gamma,
                              const double *psi,
                              double h,
                              double *score_xi_out,
                              double *score_psi_out);

struct CpcoxFitOptions cpcox_fit_options_default(void);

/**
 * Multi-start fit. `options` may be null for the defaults.
 *
 * # Safety
 * `ds` must be a live handle; `options` null or valid; `out` writable.
 */
enum CpcoxStatus cpcox_fit(const struct CpcoxDataset *ds,
                           const struct CpcoxFitOptions *options,
                           struct CpcoxFit **out);

/**
 * # Safety
 * `fit` must come from `cpcox_fit` and not have been freed. Null is ignored.
 */
void cpcox_fit_free(struct CpcoxFit *fit);

/**
 * Copies the estimates into arrays of `p1`, `p2` and `q` values.
 *
 * # Safety
 * `fit` must be live; the outputs must hold the stated sizes.
 */
enum CpcoxStatus cpcox_fit_theta(const struct CpcoxFit *fit,
                                 double *beta_out,
                                 double *gamma_out,
                                 double *psi_out);

/**
 * Maximized smoothed log partial likelihood, or NaN for a null handle.
 *
 * # Safety
 * `fit` must be live or null.
 */
double cpcox_fit_loglik(const struct CpcoxFit *fit);

/**
 * Bandwidth the fit used, or NaN for a null handle.
 *
 * # Safety
 * `fit` must be live or null.
 */
double cpcox_fit_bandwidth(const struct CpcoxFit *fit);

/**
 * 1 if the selected start reached a stationary point, 0 otherwise or for a
 * null handle.
 *
 * # Safety
 * `fit` must be live or null.
 */
int cpcox_fit_converged(const struct CpcoxFit *fit);

/**
 * Standard errors of `(beta, gamma)`, `p1 + p2` values.
 *
 * # Safety
 * `fit` must be live; `se_out` must hold `p1 + p2` values.
 */
enum CpcoxStatus cpcox_fit_std_errors(const struct CpcoxFit *fit, double *se_out);

/**
 * Wald intervals for `(beta, gamma)` at `level`.
 *
 * # Safety
 * `fit` must be live; `lower_out` and `upper_out` must hold `p1 + p2`
 * values.
 */
enum CpcoxStatus cpcox_fit_confidence_intervals(const struct CpcoxFit *fit,
                                                double level,
                                                double *lower_out,
                                                double *upper_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPCOX_H */
