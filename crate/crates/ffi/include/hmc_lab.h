#ifndef HMC_LAB_H
#define HMC_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Transition kernel selector.
 */
typedef enum HmcKernelKind {
  HMC_KERNEL_KIND_IDEAL = 0,
  HMC_KERNEL_KIND_UNADJUSTED = 1,
  HMC_KERNEL_KIND_METROPOLIS = 2,
} HmcKernelKind;

/**
 * Flow map selector. For `HMC_SCHEME_REFERENCE` the `theta` argument is the
 * convergence tolerance.
 */
typedef enum HmcScheme {
  HMC_SCHEME_EXACT_GAUSSIAN = 0,
  HMC_SCHEME_EULER = 1,
  HMC_SCHEME_LEAPFROG = 2,
  HMC_SCHEME_REFERENCE = 3,
} HmcScheme;

/**
 * Result code of every fallible call.
 */
typedef enum HmcStatus {
  HMC_STATUS_OK = 0,
  HMC_STATUS_NULL_POINTER = 1,
  HMC_STATUS_INVALID_ARGUMENT = 2,
  HMC_STATUS_DIMENSION_MISMATCH = 3,
  HMC_STATUS_NOT_GAUSSIAN = 4,
  HMC_STATUS_NOT_CONVERGED = 5,
  HMC_STATUS_NOT_POSITIVE_DEFINITE = 6,
  HMC_STATUS_NON_FINITE = 7,
  HMC_STATUS_INTERNAL = 8,
  HMC_STATUS_PANIC = 9,
} HmcStatus;

/**
 * Opaque potential handle.
 */
typedef struct HmcPotential HmcPotential;

/**
 * Outcome of [`hmc_contraction_certificate`].
 */
typedef struct HmcCertificate {
  size_t trials;
  double worst_ratio;
  double contraction;
  bool pass;
} HmcCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of the calling thread into `buf`,
 * NUL-terminated and truncated to `len` bytes. Returns the full message
 * length excluding the terminator, or 0 when no error has been recorded.
 *
 * # Safety
 * `buf` must be null or valid for `len` writable bytes.
 */
size_t hmc_last_error_message(char *buf, size_t len);

/**
 * Creates the Gaussian potential `U(q) = ½ Σ λ_i q_i²`.
 *
 * # Safety
 * `eigenvalues` must point to `dim` doubles; `out` must be writable.
 */
enum HmcStatus hmc_potential_gaussian(const double *eigenvalues,
                                      size_t dim,
                                      struct HmcPotential **out);

/**
 * Creates the perturbed quadratic with Hessian spectrum inside
 * `[1 − amplitude, 1 + amplitude]`; `seed` fixes its random phases.
 *
 * # Safety
 * `out` must be writable.
 */
enum HmcStatus hmc_potential_perturbed(size_t dim,
                                       double amplitude,
                                       uint64_t seed,
                                       struct HmcPotential **out);

/**
 * Releases a potential. Null is ignored.
 *
 * # Safety
 * `pot` must come from an `hmc_potential_*` constructor and not be used
 * afterwards.
 */
void hmc_potential_free(struct HmcPotential *pot);

/**
 * Dimension of the potential, or 0 for a null handle.
 *
 * # Safety
 * `pot` must be null or a live handle.
 */
size_t hmc_potential_dim(const struct HmcPotential *pot);

/**
 * Writes the convexity bounds `m2` and `M2`.
 *
 * # Safety
 * `pot` must be a live handle; `m2` and `big_m2` must be writable.
 */
enum HmcStatus hmc_potential_bounds(const struct HmcPotential *pot, double *m2, double *big_m2);

/**
 * Evaluates `U(q)`.
 *
 * # Safety
 * `q` must point to `dim` doubles; `out` must be writable.
 */
enum HmcStatus hmc_potential_value(const struct HmcPotential *pot,
                                   const double *q,
                                   size_t dim,
                                   double *out);

/**
 * Evaluates `∇U(q)` into `grad`.
 *
 * # Safety
 * `q` and `grad` must each point to `dim` doubles.
 */
enum HmcStatus hmc_potential_gradient(const struct HmcPotential *pot,
                                      const double *q,
                                      size_t dim,
                                      double *grad);

/**
 * Runs `steps` transitions from `x0` and writes all `steps + 1` states,
 * row-major, into `states` (length `(steps + 1) * dim`). A non-positive
 * `time` selects the default integration time of the potential. The number
 * of accepted proposals and gradient evaluations go to the optional
 * `accepted` and `gradient_evals` outputs.
 *
 * # Safety
 * `x0` must point to `dim` doubles and `states` to `(steps + 1) * dim`
 * writable doubles. `accepted` and `gradient_evals` may be null.
 */
enum HmcStatus hmc_run_chain(const struct HmcPotential *pot,
                             enum HmcKernelKind kind,
                             enum HmcScheme scheme,
                             double theta,
                             double time,
                             const double *x0,
                             size_t dim,
                             size_t steps,
                             uint64_t seed,
                             double *states,
                             uint64_t *accepted,
                             uint64_t *gradient_evals);

/**
 * Exact `W1` between two one-dimensional samples of equal size.
 *
 * # Safety
 * `a` and `b` must each point to `n` doubles; `out` must be writable.
 */
enum HmcStatus hmc_w1_exact_1d(const double *a, const double *b, size_t n, double *out);

/**
 * Exact `W1` between two equally weighted point sets of `n` points in
 * dimension `dim`, by optimal assignment.
 *
 * # Safety
 * `a` and `b` must each point to `n * dim` doubles; `out` must be writable.
 */
enum HmcStatus hmc_w1_assignment(const double *a,
                                 const double *b,
                                 size_t n,
                                 size_t dim,
                                 double *out);

/**
 * Checks deterministic contraction of the exact flow at time `time` on
 * `trials` random pairs. A non-positive `time` selects the default.
 *
 * # Safety
 * `pot` must be a live handle; `out` must be writable.
 */
enum HmcStatus hmc_contraction_certificate(const struct HmcPotential *pot,
                                           double time,
                                           size_t trials,
                                           uint64_t seed,
                                           double tol,
                                           struct HmcCertificate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HMC_LAB_H */
