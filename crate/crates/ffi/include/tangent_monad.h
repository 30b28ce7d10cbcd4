#ifndef TANGENT_MONAD_H
#define TANGENT_MONAD_H

#pragma once

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  TM_STATUS_OK = 0,
  /**
   * The computation ran but a verified identity did not hold.
   */
  TM_STATUS_FAILED = 1,
  TM_STATUS_NULL_POINTER = 2,
  TM_STATUS_INVALID_UTF8 = 3,
  TM_STATUS_PARSE = 4,
  TM_STATUS_INVALID_SPEC = 5,
  TM_STATUS_EVAL = 6,
  TM_STATUS_SHAPE = 7,
  TM_STATUS_PANIC = 8,
  TM_STATUS_OTHER = 9,
} TmStatus;

/**
 * Opaque algebra handle.
 */
typedef struct TmAlgebra TmAlgebra;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread, or NULL. Valid until the next
 * call into this library on the same thread.
 */
const char *tm_last_error(void);

const char *tm_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void tm_string_free(char *s);

/**
 * Builds an algebra from a JSON spec (closed-form chart, or rank-1 flow
 * with an `"X"` key).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
TmStatus tm_algebra_from_json(const char *json, TmAlgebra **out);

/**
 * Builds a named example: `cylinder`, `torus`, `radial`, `rotation`,
 * `free` or `trivial`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
TmStatus tm_algebra_example(const char *name, TmAlgebra **out);

/**
 * # Safety
 * `h` must be NULL or a handle from this library, not yet freed.
 */
void tm_algebra_free(TmAlgebra *h);

/**
 * Base dimension, or 0 for a NULL handle.
 *
 * # Safety
 * `h` must be NULL or a live handle.
 */
size_t tm_algebra_dim(const TmAlgebra *h);

/**
 * `out = h(x, v)`; all arrays have `n = dim` entries.
 *
 * # Safety
 * `x`, `v` and `out` must point to `n` doubles.
 */
TmStatus tm_algebra_apply(const TmAlgebra *h,
                          const double *x,
                          const double *v,
                          size_t n,
                          double *out);

/**
 * Rank of the associated endomorphism at `x`.
 *
 * # Safety
 * `x` must point to `n` doubles and `rank` must be writable.
 */
TmStatus tm_algebra_rank_at(const TmAlgebra *h, const double *x, size_t n, size_t *rank);

/**
 * Axioms and derived identities; `TM_STATUS_FAILED` when any check fails. The
 * reports are written to `out_json` when it is not NULL.
 *
 * # Safety
 * `h` must be a live handle; `out_json` must be NULL or writable.
 */
TmStatus tm_algebra_check(const TmAlgebra *h, size_t samples, uint64_t seed, char **out_json);

/**
 * Monad laws in dimension `dim`; `rational` selects exact arithmetic.
 *
 * # Safety
 * `out_json` must be NULL or writable.
 */
TmStatus tm_verify_monad(size_t dim, size_t samples, uint64_t seed, bool rational, char **out_json);

/**
 * Comonad laws on `ℚ[X₁..X_vars]`.
 *
 * # Safety
 * `out_json` must be NULL or writable.
 */
TmStatus tm_kahler_verify(size_t vars, uint64_t seed, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TANGENT_MONAD_H */
