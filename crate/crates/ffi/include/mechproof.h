#ifndef MECHPROOF_H
#define MECHPROOF_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. The first four match the CLI exit codes.
 */
typedef enum MechproofStatus {
  MECHPROOF_STATUS_OK = 0,
  /**
   * Malformed config or mechanism, or a model value out of range.
   */
  MECHPROOF_STATUS_CONFIG_ERROR = 1,
  /**
   * No allocation in the search box admits valid rewards.
   */
  MECHPROOF_STATUS_NO_FEASIBLE_MECHANISM = 2,
  /**
   * The mechanism admits a profitable deviation.
   */
  MECHPROOF_STATUS_VERIFICATION_FAILED = 3,
  MECHPROOF_STATUS_NULL_POINTER = 4,
  MECHPROOF_STATUS_INVALID_UTF8 = 5,
  /**
   * The caller's output buffer holds fewer elements than the report has cases.
   */
  MECHPROOF_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  MECHPROOF_STATUS_INTERNAL = 7,
} MechproofStatus;

/**
 * A solved mechanism. Free with [`mechproof_report_free`].
 */
typedef struct MechproofReport MechproofReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Finds the requestor-optimal mechanism for the model point in
 * `config_json` and stores a new handle in `*out`.
 *
 * `*out` is set to null unless `MECHPROOF_STATUS_OK` is returned.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a writable
 * pointer.
 */
enum MechproofStatus mechproof_solve(const char *config_json, struct MechproofReport **out);

/**
 * Releases a handle from [`mechproof_solve`]. Null is ignored.
 *
 * # Safety
 * `report` is null or a handle not yet freed.
 */
void mechproof_report_free(struct MechproofReport *report);

/**
 * Number of cases (`m + 1`), or 0 for a null handle.
 *
 * # Safety
 * `report` is null or a live handle.
 */
size_t mechproof_report_num_cases(const struct MechproofReport *report);

/**
 * Requestor's expected utility, or NaN for a null handle.
 *
 * # Safety
 * `report` is null or a live handle.
 */
double mechproof_report_utility(const struct MechproofReport *report);

/**
 * Copies the task counts `n_1..n_{m+1}` into `out`, which holds `len` values.
 *
 * # Safety
 * `report` is a live handle; `out` points to `len` writable values.
 */
enum MechproofStatus mechproof_report_allocation(const struct MechproofReport *report,
                                                 uint64_t *out,
                                                 size_t len);

/**
 * Copies the extra rewards `t_1..t_{m+1}`, rounded to `double`, into `out`.
 *
 * # Safety
 * `report` is a live handle; `out` points to `len` writable values.
 */
enum MechproofStatus mechproof_report_rewards(const struct MechproofReport *report,
                                              double *out,
                                              size_t len);

/**
 * The report as `solve` JSON, including exact rewards. Free the result with
 * [`mechproof_string_free`]. Returns null for a null handle.
 *
 * # Safety
 * `report` is null or a live handle.
 */
char *mechproof_report_to_json(const struct MechproofReport *report);

/**
 * Searches `mechanism_json` for profitable deviations at the model point in
 * `config_json`. Returns `MECHPROOF_STATUS_OK` when none exists and
 * `MECHPROOF_STATUS_VERIFICATION_FAILED` otherwise. When `out_report` is not
 * null it receives the deviation report as JSON (free with
 * [`mechproof_string_free`]), or null on error.
 *
 * # Safety
 * Both inputs must be NUL-terminated strings; `out_report` is null or
 * writable.
 */
enum MechproofStatus mechproof_verify_json(const char *config_json,
                                           const char *mechanism_json,
                                           char **out_report);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library from the same thread.
 */
const char *mechproof_last_error(void);

/**
 * Library version, e.g. `"0.1.0"`. Static; do not free.
 */
const char *mechproof_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` is null or a string from this library not yet freed.
 */
void mechproof_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MECHPROOF_H */
