#ifndef SHAPESMOOTH_H
#define SHAPESMOOTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum ShapesmoothStatus {
  SHAPESMOOTH_STATUS_OK = 0,
  SHAPESMOOTH_STATUS_NULL_POINTER = 1,
  SHAPESMOOTH_STATUS_INVALID_ARGUMENT = 2,
  SHAPESMOOTH_STATUS_INVALID_PARTITION = 3,
  /**
   * The input is not `q`-monotone (or not monotone/convex).
   */
  SHAPESMOOTH_STATUS_NOT_IN_SHAPE_CLASS = 4,
  SHAPESMOOTH_STATUS_INSUFFICIENT_SMOOTHNESS = 5,
  SHAPESMOOTH_STATUS_SHAPE_CERTIFICATION_FAILED = 6,
  SHAPESMOOTH_STATUS_GLUE_FAILED = 7,
  SHAPESMOOTH_STATUS_MESH_TOO_COARSE = 8,
  SHAPESMOOTH_STATUS_NOT_A_REMESH = 9,
  SHAPESMOOTH_STATUS_JSON = 10,
  SHAPESMOOTH_STATUS_IO = 11,
  SHAPESMOOTH_STATUS_PANIC = 99,
} ShapesmoothStatus;

/**
 * Opaque piecewise polynomial.
 */
typedef struct ShapesmoothPpf ShapesmoothPpf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *shapesmooth_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *shapesmooth_version(void);

/**
 * Builds a piecewise polynomial from `n_intervals + 1` breakpoints and a
 * row-major `n_intervals × (degree + 1)` coefficient table; row `i` holds
 * the coefficients of piece `i` in powers of `x - breakpoints[i]`.
 *
 * # Safety
 * `breakpoints` and `coeffs` must point to arrays of the stated sizes and
 * `out` to writable storage for one pointer.
 */
enum ShapesmoothStatus shapesmooth_ppf_new(const double *breakpoints,
                                           size_t n_intervals,
                                           const double *coeffs,
                                           size_t degree,
                                           struct ShapesmoothPpf **out);

/**
 * Parses the JSON form `{"breakpoints": [...], "pieces": [{"center": c,
 * "coeffs": [...]}, ...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum ShapesmoothStatus shapesmooth_ppf_from_json(const char *json, struct ShapesmoothPpf **out);

/**
 * Serializes to pretty JSON; release the string with [`shapesmooth_string_free`].
 *
 * # Safety
 * `ppf` must be a live handle and `out` writable.
 */
enum ShapesmoothStatus shapesmooth_ppf_to_json(const struct ShapesmoothPpf *ppf, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void shapesmooth_string_free(char *s);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `ppf` must come from this library and not be freed twice.
 */
void shapesmooth_ppf_free(struct ShapesmoothPpf *ppf);

/**
 * Number of intervals; 0 for null.
 *
 * # Safety
 * `ppf` must be null or a live handle.
 */
size_t shapesmooth_ppf_num_intervals(const struct ShapesmoothPpf *ppf);

/**
 * Copies up to `len` breakpoints into `buf`; returns how many exist.
 *
 * # Safety
 * `ppf` must be null or a live handle; `buf` must hold `len` doubles.
 */
size_t shapesmooth_ppf_breakpoints(const struct ShapesmoothPpf *ppf, double *buf, size_t len);

/**
 * `s(x)`, using the right piece at interior breakpoints.
 *
 * # Safety
 * `ppf` must be a live handle and `out` writable.
 */
enum ShapesmoothStatus shapesmooth_ppf_eval(const struct ShapesmoothPpf *ppf,
                                            double x,
                                            double *out);

/**
 * Certifies `q`-monotonicity with the default tolerance.
 *
 * # Safety
 * `ppf` must be a live handle and `holds` writable.
 */
enum ShapesmoothStatus shapesmooth_ppf_is_q_monotone(const struct ShapesmoothPpf *ppf,
                                                     size_t q,
                                                     bool *holds);

/**
 * Largest `μ` with the function in `C^μ` (−1 if it jumps).
 *
 * # Safety
 * `ppf` must be null or a live handle.
 */
int64_t shapesmooth_ppf_smoothness_class(const struct ShapesmoothPpf *ppf);

/**
 * Smooths `ppf` into a `q`-monotone spline of degree `q + r` and minimal
 * defect on an automatic remesh. `delta <= 0` selects the default fineness.
 *
 * # Safety
 * `ppf` must be a live handle and `out` writable.
 */
enum ShapesmoothStatus shapesmooth_smooth(const struct ShapesmoothPpf *ppf,
                                          size_t q,
                                          size_t r,
                                          double delta,
                                          struct ShapesmoothPpf **out);

/**
 * As [`shapesmooth_smooth`], on the given remesh breakpoints (which must
 * span the same domain).
 *
 * # Safety
 * `ppf` must be a live handle, `breakpoints` must hold `len` doubles and
 * `out` must be writable.
 */
enum ShapesmoothStatus shapesmooth_smooth_on(const struct ShapesmoothPpf *ppf,
                                             size_t q,
                                             size_t r,
                                             const double *breakpoints,
                                             size_t len,
                                             struct ShapesmoothPpf **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHAPESMOOTH_H */
