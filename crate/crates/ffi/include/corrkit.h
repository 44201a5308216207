#ifndef CORRKIT_H
#define CORRKIT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum CkStatus {
  CK_STATUS_OK = 0,
  CK_STATUS_NULL_POINTER = 1,
  CK_STATUS_INVALID_UTF8 = 2,
  CK_STATUS_PARSE_ERROR = 3,
  CK_STATUS_SCHEMA_ERROR = 4,
  CK_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The computation ran but found no solution (e.g. no equilibrium
   * within tolerance).
   */
  CK_STATUS_NO_SOLUTION = 6,
  CK_STATUS_BUFFER_TOO_SMALL = 7,
  CK_STATUS_INTERNAL = 8,
} CkStatus;

/**
 * Equilibrium search method for [`ck_economy_equilibrium`].
 */
typedef enum CkMethod {
  CK_METHOD_SELECTION = 0,
  CK_METHOD_APPROXIMATION = 1,
} CkMethod;

/**
 * A piecewise-constant correspondence.
 */
typedef struct CkCorrespondence CkCorrespondence;

/**
 * An abstract economy.
 */
typedef struct CkEconomy CkEconomy;

/**
 * A simplex given by its vertices.
 */
typedef struct CkSimplex CkSimplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *ck_version(void);

/**
 * Message of the last failure on this thread; empty after a success.
 * Valid until the next call into the library on the same thread.
 */
const char *ck_last_error(void);

/**
 * Frees a string returned by the library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ck_string_free(char *s);

/**
 * Parses a correspondence document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CkStatus ck_correspondence_from_json(const char *json, struct CkCorrespondence **out);

/**
 * # Safety
 * `h` must come from [`ck_correspondence_from_json`] and not have been freed.
 */
void ck_correspondence_free(struct CkCorrespondence *h);

/**
 * Dimension of the domain, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
uintptr_t ck_correspondence_dim(const struct CkCorrespondence *h);

/**
 * Stores whether `y ∈ T(x)` in `out`.
 *
 * # Safety
 * `h` must be a live handle, `x` must point to `n` doubles and `out` must
 * be valid.
 */
enum CkStatus ck_correspondence_contains(const struct CkCorrespondence *h,
                                         const double *x,
                                         uintptr_t n,
                                         double y,
                                         bool *out);

/**
 * Searches for an upper semicontinuity violation on a grid of `grid`
 * points per axis. On a hit `found` is set and the location is written to
 * `location` (capacity `cap`, at least the domain dimension).
 *
 * # Safety
 * `h` must be a live handle, `found` valid and `location` writable for
 * `cap` doubles.
 */
enum CkStatus ck_check_usc(const struct CkCorrespondence *h,
                           uintptr_t grid,
                           bool *found,
                           double *location,
                           uintptr_t cap);

/**
 * As [`ck_check_usc`], for lower semicontinuity.
 *
 * # Safety
 * See [`ck_check_usc`].
 */
enum CkStatus ck_check_lsc(const struct CkCorrespondence *h,
                           uintptr_t grid,
                           bool *found,
                           double *location,
                           uintptr_t cap);

/**
 * Builds a simplex from `count` vertices of dimension `dim`, stored row by
 * row in `vertices`.
 *
 * # Safety
 * `vertices` must point to `count * dim` doubles and `out` must be valid.
 */
enum CkStatus ck_simplex_new(const double *vertices,
                             uintptr_t count,
                             uintptr_t dim,
                             struct CkSimplex **out);

/**
 * # Safety
 * `h` must come from [`ck_simplex_new`] and not have been freed.
 */
void ck_simplex_free(struct CkSimplex *h);

/**
 * Barycentric coordinates of `x` (length `dim`), one per vertex, written
 * to `weights` (capacity `cap`).
 *
 * # Safety
 * `h` must be a live handle, `x` readable for `dim` doubles and `weights`
 * writable for `cap` doubles.
 */
enum CkStatus ck_simplex_barycentric(const struct CkSimplex *h,
                                     const double *x,
                                     uintptr_t dim,
                                     double *weights,
                                     uintptr_t cap);

/**
 * Parses an economy document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CkStatus ck_economy_from_json(const char *json, struct CkEconomy **out);

/**
 * # Safety
 * `h` must come from [`ck_economy_from_json`] and not have been freed.
 */
void ck_economy_free(struct CkEconomy *h);

/**
 * Computes a certified equilibrium with tolerance `tol` (the approximation
 * method uses the schedule 0.1 halved twelve times) and writes it to
 * `point` (capacity `cap`); the number of agents goes to `len`.
 *
 * # Safety
 * `h` must be a live handle, `point` writable for `cap` doubles and `len`
 * null or valid.
 */
enum CkStatus ck_economy_equilibrium(const struct CkEconomy *h,
                                     enum CkMethod method,
                                     double tol,
                                     double *point,
                                     uintptr_t cap,
                                     uintptr_t *len);

/**
 * Runs a command-line command on in-memory documents: `inputs_json` is a
 * JSON array of documents and `options_json` (nullable) an options object.
 * The report is returned in `report` (free with [`ck_string_free`]) and
 * the command's exit code in `exit_code`. A command that runs but reports
 * a failure still returns `Ok`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `report` and `exit_code` must
 * be valid.
 */
enum CkStatus ck_run(const char *command,
                     const char *inputs_json,
                     const char *options_json,
                     char **report,
                     int *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRKIT_H */
