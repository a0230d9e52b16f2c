#ifndef H2CAVITY_H
#define H2CAVITY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2 and 3 match the CLI exit codes.
 */
typedef enum H2Status {
  H2_STATUS_OK = 0,
  /**
   * Engine error without a more specific class (I/O, linear algebra).
   */
  H2_STATUS_ERROR = 1,
  /**
   * Invalid scenario, parameter or config text.
   */
  H2_STATUS_INVALID = 2,
  /**
   * A density-matrix invariant failed mid-run.
   */
  H2_STATUS_INVARIANT_BREACH = 3,
  /**
   * NULL pointer, bad UTF-8 or out-of-range index.
   */
  H2_STATUS_BAD_ARGUMENT = 4,
  /**
   * Caller buffer too small; nothing was written.
   */
  H2_STATUS_BUFFER_TOO_SMALL = 5,
  H2_STATUS_PANIC = 6,
} H2Status;

/**
 * Completed run: trajectory plus final populations.
 */
typedef struct H2Run H2Run;

/**
 * Scenario handle.
 */
typedef struct H2Scenario H2Scenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. Borrowed
 * until the next failing call on the same thread.
 */
const char *h2c_last_error(void);

/**
 * Engine version, static storage.
 */
const char *h2c_version(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void h2c_string_free(char *s);

/**
 * Create a built-in scenario by name (`assoc-quantum`, ...).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` a valid pointer.
 */
enum H2Status h2c_scenario_builtin(const char *name, struct H2Scenario **out);

/**
 * Parse a scenario from config text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer.
 */
enum H2Status h2c_scenario_from_config(const char *text, struct H2Scenario **out);

/**
 * Override one config key, e.g. `("horizon.t_end", "1e-6")`.
 *
 * # Safety
 * `sc` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum H2Status h2c_scenario_set(struct H2Scenario *sc, const char *key, const char *value);

/**
 * Full config text of a scenario; free with [`h2c_string_free`].
 *
 * # Safety
 * `sc` must be a live handle; `out` a valid pointer.
 */
enum H2Status h2c_scenario_to_config(const struct H2Scenario *sc, char **out);

/**
 * Validation report as JSON; free with [`h2c_string_free`].
 *
 * # Safety
 * `sc` must be a live handle; `out` a valid pointer.
 */
enum H2Status h2c_scenario_validate(const struct H2Scenario *sc, char **out);

/**
 * # Safety
 * `sc` must be NULL or a live handle; it is invalid afterwards.
 */
void h2c_scenario_free(struct H2Scenario *sc);

/**
 * Integrate a scenario in memory.
 *
 * # Safety
 * `sc` must be a live handle; `out` a valid pointer.
 */
enum H2Status h2c_run(const struct H2Scenario *sc, struct H2Run **out);

/**
 * Run a scenario and write `trajectory.csv`, `scenario.cfg` and
 * `manifest.json` into `dir`. The manifest is also returned as JSON when
 * `manifest` is not NULL; free it with [`h2c_string_free`].
 *
 * # Safety
 * `sc` must be a live handle, `dir` a NUL-terminated path, `manifest`
 * NULL or a valid pointer.
 */
enum H2Status h2c_run_to_dir(const struct H2Scenario *sc, const char *dir, char **manifest);

/**
 * Number of recorded rows.
 *
 * # Safety
 * `run` must be a live handle.
 */
size_t h2c_run_rows(const struct H2Run *run);

/**
 * Number of observable columns (not counting time).
 *
 * # Safety
 * `run` must be a live handle.
 */
size_t h2c_run_columns(const struct H2Run *run);

/**
 * Name of column `i`, borrowed from the handle; NULL if out of range.
 *
 * # Safety
 * `run` must be a live handle.
 */
const char *h2c_run_column_name(const struct H2Run *run, size_t i);

/**
 * Copy the record times into `buf[0..len]`; `len` must be at least
 * [`h2c_run_rows`].
 *
 * # Safety
 * `run` must be a live handle and `buf` valid for `len` writes.
 */
enum H2Status h2c_run_times(const struct H2Run *run, double *buf, size_t len);

/**
 * Copy column `i` into `buf[0..len]`.
 *
 * # Safety
 * `run` must be a live handle and `buf` valid for `len` writes.
 */
enum H2Status h2c_run_column(const struct H2Run *run, size_t i, double *buf, size_t len);

/**
 * Final photon-marginalized populations in the order H2, H+H, H⁻+H⁺, other.
 *
 * # Safety
 * `run` must be a live handle and `out` valid for 4 writes.
 */
enum H2Status h2c_run_final_populations(const struct H2Run *run, double *out);

/**
 * 1 if an automatic horizon found a plateau, 0 if it hit the cap, -1 for a
 * fixed horizon.
 *
 * # Safety
 * `run` must be a live handle.
 */
int h2c_run_plateau(const struct H2Run *run);

/**
 * # Safety
 * `run` must be NULL or a live handle; it is invalid afterwards.
 */
void h2c_run_free(struct H2Run *run);

/**
 * `exp(A·dt)` for a dense row-major `n×n` complex matrix given as separate
 * real and imaginary arrays. `depth` is the doubling depth (20 is typical);
 * it is raised automatically when `‖A‖·dt/2^depth > 1`.
 *
 * # Safety
 * All four arrays must hold `n*n` doubles.
 */
enum H2Status h2c_expm(size_t n,
                       const double *a_re,
                       const double *a_im,
                       double dt,
                       uint32_t depth,
                       double *out_re,
                       double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* H2CAVITY_H */
