#ifndef SEMIFIX_H
#define SEMIFIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SemifixStatus {
  SEMIFIX_STATUS_OK = 0,
  SEMIFIX_STATUS_NULL_POINTER = 1,
  SEMIFIX_STATUS_INVALID_PARAMETER = 2,
  SEMIFIX_STATUS_DOMAIN = 3,
  SEMIFIX_STATUS_FORMAT = 4,
  SEMIFIX_STATUS_NOT_APPLICABLE = 5,
  SEMIFIX_STATUS_UTF8 = 6,
  SEMIFIX_STATUS_PANIC = 7,
  SEMIFIX_STATUS_OTHER = 8,
} SemifixStatus;

typedef enum SemifixFamily {
  SEMIFIX_FAMILY_SUM = 0,
  SEMIFIX_FAMILY_MAX = 1,
  SEMIFIX_FAMILY_SCALED_SUM = 2,
  SEMIFIX_FAMILY_POWER = 3,
} SemifixFamily;

typedef enum SemifixContraction {
  SEMIFIX_CONTRACTION_BANACH = 0,
  SEMIFIX_CONTRACTION_KANNAN = 1,
  SEMIFIX_CONTRACTION_CHATTERJEA = 2,
  SEMIFIX_CONTRACTION_CRR = 3,
  SEMIFIX_CONTRACTION_PERIMETER = 4,
} SemifixContraction;

/**
 * Opaque finite space with its optional self-map.
 */
typedef struct SemifixFiniteSpace SemifixFiniteSpace;

/**
 * Opaque triangle function.
 */
typedef struct SemifixTriangle SemifixTriangle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a builtin triangle function. `param` is `K` for scaled sums,
 * `q` for powers, and ignored otherwise.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SemifixStatus semifix_triangle_new(enum SemifixFamily family,
                                        double param,
                                        struct SemifixTriangle **out);

/**
 * # Safety
 * `tf` must come from [`semifix_triangle_new`] and not be freed twice.
 */
void semifix_triangle_free(struct SemifixTriangle *tf);

/**
 * # Safety
 * `tf` must be a live handle; `out` must be valid for writes.
 */
enum SemifixStatus semifix_triangle_eval(const struct SemifixTriangle *tf,
                                         double u,
                                         double v,
                                         double *out);

/**
 * `C(alpha)`; `p_cap = 0` selects the default depth.
 *
 * # Safety
 * `tf` must be a live handle; `out` must be valid for writes.
 */
enum SemifixStatus semifix_c_alpha(const struct SemifixTriangle *tf,
                                   double alpha,
                                   uint32_t p_cap,
                                   double *out);

/**
 * # Safety
 * `tf` must be a live handle; `out` must be valid for writes.
 */
enum SemifixStatus semifix_psi_inverse(const struct SemifixTriangle *tf, double tau, double *out);

/**
 * Per-step ratio of a contraction; `+INFINITY` when infeasible. Unused
 * coefficients are ignored.
 *
 * # Safety
 * `tf` must be a live handle; `out` must be valid for writes.
 */
enum SemifixStatus semifix_step_ratio(const struct SemifixTriangle *tf,
                                      enum SemifixContraction kind,
                                      double alpha,
                                      double beta,
                                      double gamma,
                                      double *out);

/**
 * Condition ledger for a contraction on a complete space with a
 * continuous semimetric, as a JSON string to release with
 * [`semifix_string_free`]. `applicable` receives the verdict.
 *
 * # Safety
 * `tf` must be a live handle; `applicable` and `json_out` must be valid
 * for writes.
 */
enum SemifixStatus semifix_applicability_json(const struct SemifixTriangle *tf,
                                              enum SemifixContraction kind,
                                              double alpha,
                                              double beta,
                                              double gamma,
                                              bool *applicable,
                                              char **json_out);

/**
 * Parses a finite-space JSON document (`labels`, `d`, `phi`, optional
 * `map` and `flags`).
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be valid for writes.
 */
enum SemifixStatus semifix_finite_space_from_json(const char *json,
                                                  struct SemifixFiniteSpace **out);

/**
 * # Safety
 * `fs` must come from [`semifix_finite_space_from_json`] and not be freed
 * twice.
 */
void semifix_finite_space_free(struct SemifixFiniteSpace *fs);

/**
 * # Safety
 * `fs` must be a live handle; `out` must be valid for writes.
 */
enum SemifixStatus semifix_finite_space_size(const struct SemifixFiniteSpace *fs, size_t *out);

/**
 * Full classification report as JSON; the space must carry a map.
 *
 * # Safety
 * `fs` must be a live handle; `json_out` must be valid for writes.
 */
enum SemifixStatus semifix_classify_json(const struct SemifixFiniteSpace *fs, char **json_out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void semifix_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *semifix_last_error_message(void);

/**
 * Library version, statically allocated.
 */
const char *semifix_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMIFIX_H */
