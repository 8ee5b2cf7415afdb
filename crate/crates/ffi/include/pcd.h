/* C interface to the p-centrality discrepancy library. */

#ifndef PCD_FFI_H
#define PCD_FFI_H

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum PcdStatus {
  /**
   * Success.
   */
  PCD_OK = 0,
  /**
   * A pointer argument that must not be null was null.
   */
  PCD_NULL_ARGUMENT = 1,
  /**
   * An argument was structurally invalid (bad dimension, p < 1, ...).
   */
  PCD_INVALID_ARGUMENT = 2,
  /**
   * The computation itself failed (guard exceeded, no feasible plan, ...).
   */
  PCD_COMPUTE_ERROR = 3,
  /**
   * File input/output or parsing failed.
   */
  PCD_IO_ERROR = 4,
  /**
   * An internal panic was caught; this is a bug in the library.
   */
  PCD_PANIC = 5,
} PcdStatus;

/**
 * Opaque handle to a weighted point cloud.
 */
typedef struct PcdDistribution PcdDistribution;

/**
 * Opaque handle to a discrepancy estimate.
 */
typedef struct PcdEstimate PcdEstimate;

/**
 * Opaque handle to an optimal transport plan.
 */
typedef struct PcdPlan PcdPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. Never null; empty
 * before the first failure. Valid until the next failing call.
 */
const char *pcd_last_error_message(void);

/**
 * Library version plus the invariant-suite manifest hash, as a static
 * NUL-terminated string.
 */
const char *pcd_version(void);

/**
 * Build a distribution from `count` points of dimension `dim`, stored
 * row-major in `points`. `weights` may be null for uniform weights;
 * otherwise it must hold `count` nonnegative values with positive total
 * mass (they are renormalized).
 *
 * # Safety
 * `points` must reference `count * dim` readable doubles and `weights`,
 * when non-null, `count` readable doubles.
 */
enum PcdStatus pcd_distribution_new(const double *points,
                                    size_t count,
                                    size_t dim,
                                    const double *weights,
                                    struct PcdDistribution **out);

/**
 * Read a distribution from a CSV file with header `x1,...,xm[,weight]`.
 *
 * # Safety
 * `path` must be a readable NUL-terminated string.
 */
enum PcdStatus pcd_distribution_from_csv(const char *path, struct PcdDistribution **out);

/**
 * Release a distribution handle. Null is ignored.
 *
 * # Safety
 * `d` must be a handle returned by this library, released at most once.
 */
void pcd_distribution_free(struct PcdDistribution *d);

/**
 * Number of support points, or 0 for a null handle.
 *
 * # Safety
 * `d` must be null or a live handle from this library.
 */
size_t pcd_distribution_len(const struct PcdDistribution *d);

/**
 * Point dimension, or 0 for a null handle.
 *
 * # Safety
 * `d` must be null or a live handle from this library.
 */
size_t pcd_distribution_dim(const struct PcdDistribution *d);

/**
 * p-centrality of the distribution at base point `x`.
 *
 * # Safety
 * `x` must reference `dim` readable doubles; `d` and `out` must be valid.
 */
enum PcdStatus pcd_p_centrality(const struct PcdDistribution *d,
                                const double *x,
                                size_t dim,
                                double p,
                                double *out);

/**
 * Exact Wasserstein-p distance. When `out_plan` is non-null it receives an
 * optimal plan handle.
 *
 * # Safety
 * `left` and `right` must be live handles; `out_distance` must be writable;
 * `out_plan` may be null.
 */
enum PcdStatus pcd_wasserstein(const struct PcdDistribution *left,
                               const struct PcdDistribution *right,
                               double p,
                               double *out_distance,
                               struct PcdPlan **out_plan);

/**
 * Release a plan handle. Null is ignored.
 *
 * # Safety
 * `plan` must be a handle returned by this library, released at most once.
 */
void pcd_plan_free(struct PcdPlan *plan);

/**
 * Number of nonzero plan entries, or 0 for a null handle.
 *
 * # Safety
 * `plan` must be null or a live handle from this library.
 */
size_t pcd_plan_len(const struct PcdPlan *plan);

/**
 * Total transport cost sum(mass * distance^p), before the 1/p root.
 *
 * # Safety
 * `plan` and `out` must be valid pointers.
 */
enum PcdStatus pcd_plan_cost(const struct PcdPlan *plan, double *out);

/**
 * Moment order the plan was computed for.
 *
 * # Safety
 * `plan` and `out` must be valid pointers.
 */
enum PcdStatus pcd_plan_order(const struct PcdPlan *plan, double *out);

/**
 * Fetch nonzero plan entry `idx` as (source index, target index, mass).
 *
 * # Safety
 * All pointers must be valid; `idx` is checked against the entry count.
 */
enum PcdStatus pcd_plan_entry(const struct PcdPlan *plan,
                              size_t idx,
                              size_t *out_i,
                              size_t *out_j,
                              double *out_mass);

/**
 * Square-root velocity transform of `x` into `out` (both length `n`).
 * In-place operation (`out == x`) is allowed.
 *
 * # Safety
 * `x` and `out` must reference `n` readable/writable doubles.
 */
enum PcdStatus pcd_srvt_forward(const double *x, size_t n, double *out);

/**
 * Inverse square-root velocity transform of `y` into `out` (length `n`).
 * In-place operation (`out == y`) is allowed.
 *
 * # Safety
 * `y` and `out` must reference `n` readable/writable doubles.
 */
enum PcdStatus pcd_srvt_inverse(const double *y, size_t n, double *out);

/**
 * Estimate the maximal p-centrality discrepancy between two distributions
 * by certified gradient ascent. `steps == 0` selects the default budget.
 *
 * # Safety
 * `left`, `right`, and `out` must be valid pointers.
 */
enum PcdStatus pcd_discrepancy_estimate(const struct PcdDistribution *left,
                                        const struct PcdDistribution *right,
                                        double p,
                                        size_t n,
                                        double k,
                                        bool srvt,
                                        size_t steps,
                                        uint64_t seed,
                                        struct PcdEstimate **out);

/**
 * Release an estimate handle. Null is ignored.
 *
 * # Safety
 * `est` must be a handle returned by this library, released at most once.
 */
void pcd_estimate_free(struct PcdEstimate *est);

/**
 * Best certified objective value, or NaN for a null handle.
 *
 * # Safety
 * `est` must be null or a live handle from this library.
 */
double pcd_estimate_value(const struct PcdEstimate *est);

/**
 * Ascent step at which the best value was certified, or 0 for null.
 *
 * # Safety
 * `est` must be null or a live handle from this library.
 */
size_t pcd_estimate_best_step(const struct PcdEstimate *est);

/**
 * Number of certified evaluations in the trace, or 0 for null.
 *
 * # Safety
 * `est` must be null or a live handle from this library.
 */
size_t pcd_estimate_trace_len(const struct PcdEstimate *est);

/**
 * Fetch trace entry `idx` as (ascent step, certified value).
 *
 * # Safety
 * All pointers must be valid; `idx` is checked against the trace length.
 */
enum PcdStatus pcd_estimate_trace_entry(const struct PcdEstimate *est,
                                        size_t idx,
                                        size_t *out_step,
                                        double *out_value);

/**
 * Number of certified per-layer sigmas, or 0 for null.
 *
 * # Safety
 * `est` must be null or a live handle from this library.
 */
size_t pcd_estimate_sigma_count(const struct PcdEstimate *est);

/**
 * Fetch the certified spectral norm of layer `idx` at the best checkpoint.
 *
 * # Safety
 * `est` and `out` must be valid pointers; `idx` is bounds-checked.
 */
enum PcdStatus pcd_estimate_sigma(const struct PcdEstimate *est, size_t idx, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCD_FFI_H */
