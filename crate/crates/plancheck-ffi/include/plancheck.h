#ifndef PLANCHECK_H
#define PLANCHECK_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by every entry point.
 */
typedef enum PlancheckStatus {
  PlancheckStatus_Ok = 0,
  PlancheckStatus_InvalidArgument = 1,
  PlancheckStatus_ParseError = 2,
  PlancheckStatus_DomainError = 3,
  PlancheckStatus_Degenerate = 4,
  PlancheckStatus_GateFailed = 5,
  PlancheckStatus_InternalError = 6,
} PlancheckStatus;

/**
 * Opaque curve handle.
 */
typedef struct PlancheckCurve PlancheckCurve;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread; valid until the next failing call.
 */
const char *plancheck_last_error(void);

/**
 * Library version string (static storage, do not free).
 */
const char *plancheck_version(void);

/**
 * The model moment curve in dimension n (2..=5). Returns null on error.
 */
struct PlancheckCurve *plancheck_curve_model(uintptr_t n);

/**
 * Parse a curve definition file (text format). Returns null on error.
 *
 * # Safety
 * `text` must be a valid NUL-terminated C string.
 */
struct PlancheckCurve *plancheck_curve_parse(const char *text);

/**
 * Release a curve handle.
 *
 * # Safety
 * `curve` must come from `plancheck_curve_model`/`plancheck_curve_parse`
 * and not have been freed already.
 */
void plancheck_curve_free(struct PlancheckCurve *curve);

/**
 * Curve dimension of a handle (0 on null).
 *
 * # Safety
 * `curve` must be a live handle.
 */
uintptr_t plancheck_curve_dim(const struct PlancheckCurve *curve);

/**
 * j-th derivative at s written into `out` (length >= dim).
 *
 * # Safety
 * `curve` must be a live handle and `out` must point to at least `dim`
 * writable doubles.
 */
enum PlancheckStatus plancheck_curve_eval_derivative(const struct PlancheckCurve *curve,
                                                     double s,
                                                     uintptr_t order,
                                                     double *out);

/**
 * Nondegeneracy margin over equispaced samples.
 *
 * # Safety
 * `curve` must be a live handle; `out` must be writable.
 */
enum PlancheckStatus plancheck_curve_nondegeneracy(const struct PlancheckCurve *curve,
                                                   uintptr_t samples,
                                                   double *out);

/**
 * Frenet frame at s: writes the m x m row-major basis into `vectors`
 * (length >= m*m) and the m-1 curvatures into `kappas`, where m = dim for
 * the curve frame and dim+1 with `cone` set.
 *
 * # Safety
 * `curve` must be a live handle; `vectors` and `kappas` must have the
 * documented capacities.
 */
enum PlancheckStatus plancheck_frenet_frame(const struct PlancheckCurve *curve,
                                            double s,
                                            bool cone,
                                            double *vectors,
                                            double *kappas);

/**
 * Number of admissible delta-tuples at scale R = 2^log2_r.
 *
 * # Safety
 * `out` must be writable.
 */
enum PlancheckStatus plancheck_admissible_count(uintptr_t n, int64_t log2_r, uintptr_t *out);

/**
 * Hollow decomposition dump as a CSV string (free with
 * `plancheck_string_free`). Null on error.
 */
char *plancheck_hollow_csv(uintptr_t n, int64_t log2_r);

/**
 * Run a batch command from a flat `key = value` configuration string.
 * Returns the process-style exit status through `exit_code` (0 ok,
 * 2 gate failure).
 *
 * # Safety
 * `config_text` must be a valid NUL-terminated C string; `exit_code` must
 * be writable.
 */
enum PlancheckStatus plancheck_run(const char *config_text, int32_t *exit_code);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a plancheck function and not freed yet.
 */
void plancheck_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLANCHECK_H */
