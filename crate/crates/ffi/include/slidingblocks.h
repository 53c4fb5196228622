#ifndef SLIDINGBLOCKS_H
#define SLIDINGBLOCKS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SbMode {
  SB_MODE_DISJOINT = 0,
  SB_MODE_SLIDING = 1,
} SbMode;

typedef enum SbNorm {
  SB_NORM_EUCLIDEAN = 0,
  SB_NORM_SUP = 1,
  SB_NORM_L1 = 2,
} SbNorm;

typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_POINTER = 1,
  SB_STATUS_INVALID_ARGUMENT = 2,
  SB_STATUS_INVALID_SCHEME = 3,
  SB_STATUS_DEGENERATE = 4,
  SB_STATUS_PARSE = 5,
  SB_STATUS_IO = 6,
  SB_STATUS_UNSUPPORTED = 7,
  SB_STATUS_INTERNAL = 99,
} SbStatus;

/**
 * Opaque series handle.
 */
typedef struct SbSeries SbSeries;

/**
 * Result of [`sb_estimate`].
 */
typedef struct SbEstimate {
  double value;
  double threshold;
  size_t exceedances;
  bool requires_ansjb;
} SbEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or NULL. Valid until the next call
 * into this library on the same thread.
 */
const char *sb_last_error(void);

/**
 * Builds a series from `n * dim` row-major coordinates.
 *
 * # Safety
 * `values` must point to `n * dim` readable doubles; `out` must be writable.
 */
enum SbStatus sb_series_new(const double *values,
                            size_t n,
                            size_t dim,
                            enum SbNorm norm,
                            struct SbSeries **out);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `series` must come from this library and not be used afterwards.
 */
void sb_series_free(struct SbSeries *series);

/**
 * Number of points, 0 for NULL.
 *
 * # Safety
 * `series` must be NULL or a live handle.
 */
size_t sb_series_len(const struct SbSeries *series);

/**
 * Dimension of each point, 0 for NULL.
 *
 * # Safety
 * `series` must be NULL or a live handle.
 */
size_t sb_series_dim(const struct SbSeries *series);

/**
 * Copies up to `cap` norms into `out`; writes the full count to `written`.
 *
 * # Safety
 * `out` must have room for `cap` doubles; `written` must be writable.
 */
enum SbStatus sb_series_norms(const struct SbSeries *series,
                              double *out,
                              size_t cap,
                              size_t *written);

/**
 * Simulates a process given in the model grammar, e.g. `ar1:rho=0.5,alpha=1`.
 *
 * # Safety
 * `process` must be a NUL-terminated string; `out` must be writable.
 */
enum SbStatus sb_simulate(const char *process, size_t n, uint64_t seed, struct SbSeries **out);

/**
 * Disjoint or sliding blocks estimate with the `k`-th upper order statistic
 * as threshold.
 *
 * # Safety
 * `series` must be a live handle, `functional` a NUL-terminated string and
 * `out` writable.
 */
enum SbStatus sb_estimate(const struct SbSeries *series,
                          const char *functional,
                          size_t r_n,
                          size_t k,
                          enum SbMode mode,
                          struct SbEstimate *out);

/**
 * `sum_{i=0}^{q_n-1} H(X_{i+1..i+r_n} / scale)` over all full windows.
 *
 * # Safety
 * `series` must be a live handle, `functional` a NUL-terminated string and
 * `out` writable.
 */
enum SbStatus sb_sliding_sum(const struct SbSeries *series,
                             const char *functional,
                             size_t r_n,
                             double scale,
                             double *out);

/**
 * The `(n-k)`-th smallest of `n` values.
 *
 * # Safety
 * `values` must point to `n` readable doubles; `out` must be writable.
 */
enum SbStatus sb_order_statistic(const double *values, size_t n, size_t k, double *out);

/**
 * Candidate extremal index of a tail-process model: the closed form when
 * known (`stderr = 0`), otherwise a Monte Carlo estimate.
 *
 * # Safety
 * `model` must be a NUL-terminated string; `value` and `stderr` writable.
 */
enum SbStatus sb_oracle_theta(const char *model,
                              uint64_t samples,
                              uint64_t seed,
                              double *value,
                              double *stderr);

/**
 * Limiting variance of `sqrt(k)(nu_hat*(H) - nu*(H))` for an indicator
 * functional (or `exc`); closed form when known, Monte Carlo otherwise.
 *
 * # Safety
 * `model` and `functional` must be NUL-terminated strings; `value` and
 * `stderr` writable.
 */
enum SbStatus sb_oracle_limiting_variance(const char *model,
                                          const char *functional,
                                          uint64_t samples,
                                          uint64_t seed,
                                          double *value,
                                          double *stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLIDINGBLOCKS_H */
