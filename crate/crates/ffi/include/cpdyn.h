#ifndef CPDYN_H
#define CPDYN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpdynStatus {
  CPDYN_STATUS_OK = 0,
  CPDYN_STATUS_NULL_POINTER = 1,
  CPDYN_STATUS_INVALID_ARGUMENT = 2,
  CPDYN_STATUS_INVALID_SCENARIO = 3,
  CPDYN_STATUS_NON_CONVERGENCE = 4,
  CPDYN_STATUS_SINGULAR = 5,
  CPDYN_STATUS_IO = 6,
  CPDYN_STATUS_OUT_OF_RANGE = 7,
  CPDYN_STATUS_PANIC = 8,
} CpdynStatus;

/**
 * Opaque field model.
 */
typedef struct CpdynField CpdynField;

/**
 * Opaque completed run.
 */
typedef struct CpdynRun CpdynRun;

/**
 * Phase-space state.
 */
typedef struct CpdynState {
  double t;
  double x[3];
  double v[3];
} CpdynState;

/**
 * One row of the observable series; undefined quantities are NaN.
 */
typedef struct CpdynSample {
  double t;
  double x[3];
  double v[3];
  double energy;
  double momentum;
  double moment;
  double xi;
  double modified_energy;
  double modified_moment;
} CpdynSample;

typedef struct CpdynDrift {
  double reference;
  double max_abs_dev;
  double final_dev;
  double first_window_max;
  double last_window_max;
} CpdynDrift;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `cpdyn_*` call on this thread.
 */
const char *cpdyn_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cpdyn_version(void);

/**
 * Creates a built-in field (`"experiment"`, `"constant-b"`, `"quadratic"`,
 * `"free"`) with its default parameters.
 *
 * # Safety
 * `kind` must be a NUL-terminated string; `out` must be writable.
 */
enum CpdynStatus cpdyn_field_new(const char *kind, double eps, struct CpdynField **out);

/**
 * Creates the field described by the `field*`, `eps` and `momentum_scale`
 * keys of a scenario text.
 *
 * # Safety
 * `scenario` must be a NUL-terminated string; `out` must be writable.
 */
enum CpdynStatus cpdyn_field_from_scenario(const char *scenario, struct CpdynField **out);

/**
 * # Safety
 * `field` must come from a `cpdyn_field_*` constructor and not be freed
 * twice. Null is ignored.
 */
void cpdyn_field_free(struct CpdynField *field);

/**
 * Evaluates `A`, `B`, `U` and `F` at `x`. Any output pointer may be null.
 *
 * # Safety
 * `x` must point to 3 doubles; non-null vector outputs to 3 writable doubles.
 */
enum CpdynStatus cpdyn_field_eval(const struct CpdynField *field,
                                  const double *x,
                                  double *a_out,
                                  double *b_out,
                                  double *u_out,
                                  double *f_out);

/**
 * Solves `v + t × v = r`.
 *
 * # Safety
 * `t`, `r` must point to 3 doubles and `v_out` to 3 writable doubles.
 */
enum CpdynStatus cpdyn_solve_cross_linear(const double *t, const double *r, double *v_out);

/**
 * Advances `state` in place by one step of a one-step method (`"tsm1"`,
 * `"tsm1-avf"`, `"rk4ref"`) with default solver settings. The two-step
 * methods need their history and are only available through runs.
 *
 * # Safety
 * `method` must be a NUL-terminated string; `state` must be valid.
 */
enum CpdynStatus cpdyn_step(const struct CpdynField *field,
                            const char *method,
                            double h,
                            struct CpdynState *state);

/**
 * Runs a scenario given as `key = value` text (empty text runs the
 * defaults).
 *
 * # Safety
 * `scenario` must be a NUL-terminated string; `out` must be writable.
 */
enum CpdynStatus cpdyn_run_new(const char *scenario, struct CpdynRun **out);

/**
 * # Safety
 * `run` must come from [`cpdyn_run_new`] and not be freed twice. Null is ignored.
 */
void cpdyn_run_free(struct CpdynRun *run);

/**
 * Number of stored samples; 0 for a null handle.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t cpdyn_run_sample_count(const struct CpdynRun *run);

/**
 * # Safety
 * `run` must be a live handle and `out` writable.
 */
enum CpdynStatus cpdyn_run_sample(const struct CpdynRun *run,
                                  size_t index,
                                  struct CpdynSample *out);

/**
 * Drift of `quantity` (`"E"`, `"M"`, `"I"`, `"Hh"`, `"Ih"`) over the run.
 *
 * # Safety
 * `run` must be a live handle, `quantity` NUL-terminated, `out` writable.
 */
enum CpdynStatus cpdyn_run_drift(const struct CpdynRun *run,
                                 const char *quantity,
                                 struct CpdynDrift *out);

/**
 * Final grid state of the run.
 *
 * # Safety
 * `run` must be a live handle and `out` writable.
 */
enum CpdynStatus cpdyn_run_final_state(const struct CpdynRun *run, struct CpdynState *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPDYN_H */
