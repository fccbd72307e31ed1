#ifndef HYPODECAY_H
#define HYPODECAY_H

#pragma once

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define HD_DIRECTION_UPPER 0

#define HD_DIRECTION_LOWER 1

#define HD_CASE_EQUAL_EIGENVALUES 0

#define HD_CASE_EQUAL_REAL_PARTS 1

#define HD_CASE_EQUAL_IMAGINARY_PARTS 2

#define HD_CASE_FULLY_DISTINCT 3

/**
 * Opaque square complex matrix.
 */
typedef struct HdMatrix HdMatrix;

/**
 * Status codes returned by every fallible function.
 */
typedef int32_t HdStatus;

typedef struct HdStability {
  double mu;
  double mu_s;
  double nu;
  double nu_s;
  bool hypocoercive;
  bool coercive;
} HdStability;

typedef struct HdSharp {
  /**
   * One of the `HD_CASE_*` constants.
   */
  int32_t case_;
  double alpha;
  double c_sharp;
  double bracket_lo;
  double bracket_hi;
  /**
   * Time at which `c_sharp` is attained, NaN when only approached as t grows.
   */
  double attained_at;
  bool tail_uncertain;
} HdSharp;

#define HD_OK 0

/**
 * Malformed input: bad sizes, non-finite entries, rates out of range.
 */
#define HD_INVALID_INPUT 1

/**
 * Defective, not positive stable, or wrong dimension for the operation.
 */
#define HD_UNSUPPORTED 2

/**
 * A certificate could not be verified.
 */
#define HD_VERIFICATION_FAILED 3

#define HD_NULL_POINTER 4

#define HD_PANIC 5

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an `n x n` matrix from row-major real parts and optional
 * imaginary parts (`im` may be null). Free with `hd_matrix_free`.
 *
 * # Safety
 * `re` (and `im` when non-null) must point to `n * n` doubles and `out` to
 * writable storage for one pointer.
 */
HdStatus hd_matrix_new(size_t n, const double *re, const double *im, struct HdMatrix **out);

/**
 * # Safety
 * `m` must come from `hd_matrix_new` and not have been freed; null is a no-op.
 */
void hd_matrix_free(struct HdMatrix *m);

/**
 * Spectral gap, coercivity bounds and their classification.
 *
 * # Safety
 * `m` must be a live matrix handle and `out` writable.
 */
HdStatus hd_stability(const struct HdMatrix *m, struct HdStability *out);

/**
 * Minimal constant of `|f(t)| <= c exp(-mu t) |f(0)|` for a 2x2 system.
 *
 * # Safety
 * `m` must be a live matrix handle and `out` writable.
 */
HdStatus hd_sharp_constant(const struct HdMatrix *m, struct HdSharp *out);

/**
 * Squared-norm envelopes `h_minus(t) <= |f(t)|^2 / |f(0)|^2 <= h_plus(t)`
 * of a 2x2 system at `len` times.
 *
 * # Safety
 * `times`, `h_minus` and `h_plus` must each point to `len` doubles.
 */
HdStatus hd_envelope(const struct HdMatrix *m,
                     const double *times,
                     size_t len,
                     double *h_minus,
                     double *h_plus);

/**
 * Constant of the upper (`HD_DIRECTION_UPPER`) or lower bound at `rate`
 * for a 2x2 system.
 *
 * # Safety
 * `m` must be a live matrix handle and `constant` writable.
 */
HdStatus hd_family_bound(const struct HdMatrix *m,
                         double rate,
                         int32_t direction,
                         double *constant);

/**
 * Condition number and decay constant of the Goldstein-Taylor mode `k != 0`.
 *
 * # Safety
 * `kappa` and `constant` must be writable.
 */
HdStatus hd_mode_certificate(int64_t k, double *kappa, double *constant);

/**
 * Message of the last failure on this thread, empty after a success. The
 * pointer stays valid until the next call into this library on the thread.
 */
const char *hd_last_error(void);

const char *hd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPODECAY_H */
