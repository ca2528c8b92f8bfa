#ifndef STT_H
#define STT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Surrogate construction method.
 */
typedef enum SttMode {
  /**
   * Pseudospectral projection on Gauss nodes; `levels[k]` is the degree.
   */
  STT_MODE_PROJECTION = 0,
  /**
   * Lagrange interpolation on Gauss nodes; `levels[k]` is the degree.
   */
  STT_MODE_LAGRANGE = 1,
  /**
   * Piecewise linear interpolation; `levels[k]` is the number of
   * equispaced points.
   */
  STT_MODE_LINEAR = 2,
} SttMode;

/**
 * Result codes.
 */
typedef enum SttStatus {
  STT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  STT_STATUS_NULL_POINTER = 1,
  /**
   * Arguments are inconsistent or out of range.
   */
  STT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The numerics failed (non-convergence, rank cap, degenerate function).
   */
  STT_STATUS_NUMERICAL = 3,
  /**
   * A surrogate file is malformed or of an unsupported version.
   */
  STT_STATUS_FORMAT = 4,
  STT_STATUS_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  STT_STATUS_INTERNAL = 6,
} SttStatus;

/**
 * Opaque surrogate handle.
 */
typedef struct SttSurrogate SttSurrogate;

/**
 * Parameters of [`stt_build`].
 *
 * Dimension `k` lives on `[lower[k], upper[k]]` with the uniform measure,
 * or on the real line with the standard Gaussian measure when both bounds
 * are infinite.
 */
typedef struct SttBuildParams {
  size_t dim;
  /**
   * `dim` entries.
   */
  const size_t *levels;
  /**
   * `dim` entries.
   */
  const double *lower;
  /**
   * `dim` entries.
   */
  const double *upper;
  enum SttMode mode;
  /**
   * Target relative accuracy, positive.
   */
  double eps;
  uint64_t seed;
} SttBuildParams;

/**
 * Black-box callback: value of the function at `x[0..dim]`.
 */
typedef double (*SttFunction)(const double *x, size_t dim, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *stt_last_error_message(void);

void stt_clear_error(void);

/**
 * Version of the surrogate file format this library reads and writes.
 */
uint32_t stt_format_version(void);

/**
 * Load a surrogate file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum SttStatus stt_surrogate_load(const char *path, struct SttSurrogate **out);

/**
 * Write a surrogate file.
 *
 * # Safety
 * `s` must come from this library and `path` be nul-terminated.
 */
enum SttStatus stt_surrogate_save(const struct SttSurrogate *s, const char *path);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void stt_surrogate_free(struct SttSurrogate *s);

/**
 * Number of input dimensions.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SttStatus stt_surrogate_ndim(const struct SttSurrogate *s, size_t *out);

/**
 * Copy the rank vector (`ndim + 1` entries) into `out`. `needed` receives
 * the length; with `capacity` too small nothing is copied and the call
 * fails with `InvalidArgument`.
 *
 * # Safety
 * `out` must hold `capacity` entries; other pointers must be valid.
 */
enum SttStatus stt_surrogate_ranks(const struct SttSurrogate *s,
                                   size_t *out,
                                   size_t capacity,
                                   size_t *needed);

/**
 * Black-box evaluations spent building the surrogate.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SttStatus stt_surrogate_eval_count(const struct SttSurrogate *s, size_t *out);

/**
 * Evaluate at `n_points` points stored row-major in `points`
 * (`n_points * dim` values), writing `n_points` values to `values`.
 *
 * # Safety
 * Buffers must have the stated sizes.
 */
enum SttStatus stt_surrogate_eval(const struct SttSurrogate *s,
                                  const double *points,
                                  size_t n_points,
                                  size_t dim,
                                  double *values);

/**
 * Build a surrogate by sampling `f`.
 *
 * # Safety
 * `params` arrays must hold `params->dim` entries; `f` must be safe to call
 * with `user_data` for the duration of the call.
 */
enum SttStatus stt_build(const struct SttBuildParams *params,
                         SttFunction f,
                         void *user_data,
                         struct SttSurrogate **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STT_H */
