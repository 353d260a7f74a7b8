#ifndef SWAPREG_H
#define SWAPREG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `SWAPREG_STATUS_OK` is zero.
 */
typedef enum SwapregStatus {
  SWAPREG_STATUS_OK = 0,
  SWAPREG_STATUS_NULL_POINTER = 1,
  SWAPREG_STATUS_INVALID_ARGUMENT = 2,
  SWAPREG_STATUS_DIMENSION_MISMATCH = 3,
  SWAPREG_STATUS_INVALID_SUPPORT = 4,
  SWAPREG_STATUS_RANK_DEFICIENT = 5,
  SWAPREG_STATUS_NON_FINITE = 6,
  SWAPREG_STATUS_TOO_LARGE = 7,
  SWAPREG_STATUS_PANIC = 8,
  SWAPREG_STATUS_OTHER = 9,
} SwapregStatus;

/**
 * An `n × p` design matrix.
 */
typedef struct SwapregDesign SwapregDesign;

/**
 * The iterates of one swap run.
 */
typedef struct SwapregTrace SwapregTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *swapreg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *swapreg_version(void);

/**
 * Copies a column-major `n × p` matrix into a new design. With
 * `normalize` set, columns are rescaled to `‖X_j‖² = n`.
 *
 * # Safety
 * `data` must point to `n * p` readable doubles and `out` must be writable.
 */
enum SwapregStatus swapreg_design_new(const double *data,
                                      size_t n,
                                      size_t p,
                                      bool normalize,
                                      struct SwapregDesign **out);

/**
 * # Safety
 * `d` must be null or a handle from [`swapreg_design_new`] not yet freed.
 */
void swapreg_design_free(struct SwapregDesign *d);

/**
 * # Safety
 * `d` must be a live design; `n` and `p` must be writable or null.
 */
enum SwapregStatus swapreg_design_dims(const struct SwapregDesign *d, size_t *n, size_t *p);

/**
 * Least-squares loss `‖y − P_S y‖²` of the support `support_in[0..k]`.
 *
 * # Safety
 * `y` holds `n` doubles, `support_in` holds `k` indices, `loss` is writable.
 */
enum SwapregStatus swapreg_fit_loss(const struct SwapregDesign *d,
                                    const double *y,
                                    const size_t *support_in,
                                    size_t k,
                                    double *loss);

/**
 * Swaps from `s_init[0..k]` until no single swap lowers the loss.
 * `max_iterations = 0` keeps the default cap of `p·k`.
 *
 * # Safety
 * `y` holds `n` doubles, `s_init` holds `k` indices, `out` is writable.
 */
enum SwapregStatus swapreg_swap_run(const struct SwapregDesign *d,
                                    const double *y,
                                    const size_t *s_init,
                                    size_t k,
                                    size_t max_iterations,
                                    struct SwapregTrace **out);

/**
 * # Safety
 * `t` must be null or a handle from [`swapreg_swap_run`] not yet freed.
 */
void swapreg_trace_free(struct SwapregTrace *t);

/**
 * Number of iterates, the initial support included. Zero for null.
 *
 * # Safety
 * `t` must be null or a live trace.
 */
size_t swapreg_trace_len(const struct SwapregTrace *t);

/**
 * Whether the run stopped because no swap improved the loss.
 *
 * # Safety
 * `t` must be null or a live trace.
 */
bool swapreg_trace_converged(const struct SwapregTrace *t);

/**
 * Copies iterate `step` into `support_out` (`k` entries, ascending) and its
 * loss into `loss` (may be null).
 *
 * # Safety
 * `t` must be a live trace, `support_out` must have room for `k` indices.
 */
enum SwapregStatus swapreg_trace_step(const struct SwapregTrace *t,
                                      size_t step,
                                      size_t *support_out,
                                      double *loss);

/**
 * Exhaustive search over all size-`k` supports.
 *
 * # Safety
 * `y` holds `n` doubles, `support_out` has room for `k` indices, `loss`
 * is writable or null.
 */
enum SwapregStatus swapreg_esd(const struct SwapregDesign *d,
                               const double *y,
                               size_t k,
                               size_t *support_out,
                               double *loss);

/**
 * Size-`k` support from a named solver with default settings: "lasso",
 * "tlasso", "foba", "cosamp", "omp", "mar" or "random". `seed` drives
 * cross-validation folds and random draws.
 *
 * # Safety
 * `solver` is a NUL-terminated string, `y` holds `n` doubles and
 * `support_out` has room for `k` indices.
 */
enum SwapregStatus swapreg_solve(const struct SwapregDesign *d,
                                 const double *y,
                                 size_t k,
                                 const char *solver,
                                 uint64_t seed,
                                 size_t *support_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWAPREG_H */
