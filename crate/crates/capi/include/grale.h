/* C interface to the grale library. */

#ifndef GRALE_H
#define GRALE_H

/* Generated by cbindgen from the grale-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible call.
typedef enum GraleStatus {
  GRALE_STATUS_OK = 0,
  // a required pointer argument was null
  GRALE_STATUS_NULL_POINTER = 1,
  // a parameter was out of range or inconsistent
  GRALE_STATUS_INVALID_ARGUMENT = 2,
  // malformed text input (weight document, config, experiment name)
  GRALE_STATUS_PARSE_ERROR = 3,
  // the operation is not available for this input shape
  GRALE_STATUS_UNSUPPORTED = 4,
  // unexpected internal failure; see the last-error message
  GRALE_STATUS_INTERNAL = 5,
} GraleStatus;

// Lattice function handle.
typedef struct GraleGrid GraleGrid;

// Finished experiment run: verdict plus rendered artifacts.
typedef struct GraleReport GraleReport;

// Exponent weight handle.
typedef struct GraleWeight GraleWeight;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *grale_version(void);

// Copies the current thread's last error message into `buf` (at most
// `cap - 1` bytes plus a NUL) and returns the full message length in
// bytes, excluding the NUL.  With `cap` zero or `buf` null nothing is
// written and only the length is reported.
//
// # Safety
// `buf` must be null or point to at least `cap` writable bytes.
uintptr_t grale_last_error(char *buf, uintptr_t cap);

// Builds a lattice function from row-major samples: `n` nodes per axis in
// `d` dimensions (`d` is 1 or 2), `len` must equal `n` for a line and
// `n * n` for a plane.  `width` is the physical extent of the first axis;
// planar grids are always on the unit square (pass 1.0).
//
// # Safety
// `values` must point to `len` readable doubles; `out` must be a valid
// pointer.  The handle written to `out` must be released with
// [`grale_grid_free`].
enum GraleStatus grale_grid_from_values(uintptr_t d,
                                        uintptr_t n,
                                        double width,
                                        const double *values,
                                        uintptr_t len,
                                        struct GraleGrid **out);

// Releases a grid handle.  Null is ignored.
//
// # Safety
// `g` must be null or a pointer obtained from [`grale_grid_from_values`]
// that has not been freed already.
void grale_grid_free(struct GraleGrid *g);

// Reports the grid's dimension and nodes per axis.
//
// # Safety
// `g` must be a live grid handle; output pointers must be null or valid.
enum GraleStatus grale_grid_shape(const struct GraleGrid *g, uintptr_t *out_d, uintptr_t *out_n);

// Lebesgue norm of the grid at exponent `p >= 1`.
//
// # Safety
// `g` must be a live grid handle; `out` must be a valid pointer.
enum GraleStatus grale_lp_norm(const struct GraleGrid *g, double p, double *out);

// Modulus of continuity of a line grid at distance `delta`.
//
// # Safety
// `g` must be a live grid handle; `out` must be a valid pointer.
enum GraleStatus grale_modulus(const struct GraleGrid *g, double delta, double *out);

// Fractional seminorm of the grid at per-axis orders `alpha` (length
// `alpha_len`, matching the grid dimension) and exponent `p`.  A
// divergent seminorm is reported as `INFINITY` with status `Ok`.
//
// # Safety
// `g` must be a live grid handle; `alpha` must point to `alpha_len`
// readable doubles; `out` must be a valid pointer.
enum GraleStatus grale_seminorm(const struct GraleGrid *g,
                                const double *alpha,
                                uintptr_t alpha_len,
                                double p,
                                double *out);

// Parses a weight from its TOML family document, for example
// `family = "power"` with `beta`, `lower`, `upper` keys.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be a valid pointer.
// The handle written to `out` must be released with
// [`grale_weight_free`].
enum GraleStatus grale_weight_from_text(const char *text, struct GraleWeight **out);

// Releases a weight handle.  Null is ignored.
//
// # Safety
// `w` must be null or a pointer obtained from [`grale_weight_from_text`]
// that has not been freed already.
void grale_weight_free(struct GraleWeight *w);

// Evaluates the weight at exponent `p`.  Off-support evaluation of a
// closed-form family is `INFINITY` with status `Ok`; leaving a tabulated
// hull is an error.
//
// # Safety
// `w` must be a live weight handle; `out` must be a valid pointer.
enum GraleStatus grale_weight_eval(const struct GraleWeight *w, double p, double *out);

// Fundamental function of the weight's scale at gap `delta`: the value
// and the exponent attaining the sup.
//
// # Safety
// `w` must be a live weight handle; output pointers must be null or
// valid.
enum GraleStatus grale_weight_fundamental(const struct GraleWeight *w,
                                          double delta,
                                          double *out_value,
                                          double *out_at_p);

// Grand Lebesgue norm of the grid against the weight: the sup of
// `|f|_p / psi(p)`, the exponent attaining it, and whether the sup was
// still climbing at the top of the support (a divergence flag).
//
// # Safety
// `g` and `w` must be live handles; output pointers must be null or
// valid.
enum GraleStatus grale_grand_norm(const struct GraleGrid *g,
                                  const struct GraleWeight *w,
                                  double *out_value,
                                  double *out_attained_p,
                                  bool *out_diverging);

// Runs one experiment and returns a report handle.  `kind` is the
// experiment name as used by the command line (for example "seminorm" or
// "field-modulus"); `config_toml` is the full config document, or null
// for the built-in defaults.  A run whose checks fail still produces a
// report (query [`grale_report_passed`]); only unusable input fails.
//
// # Safety
// `kind` must be a NUL-terminated string; `config_toml` must be null or
// NUL-terminated; `out` must be a valid pointer.  The handle written to
// `out` must be released with [`grale_report_free`].
enum GraleStatus grale_run_toml(const char *kind,
                                const char *config_toml,
                                struct GraleReport **out);

// Whether the run passed all its configured checks.  False for null.
//
// # Safety
// `r` must be null or a live report handle.
bool grale_report_passed(const struct GraleReport *r);

// One-line summary of the run.  Owned by the report; null for null.
//
// # Safety
// `r` must be null or a live report handle; the returned pointer is
// valid until [`grale_report_free`].
const char *grale_report_summary(const struct GraleReport *r);

// CSV artifact of the run.  Owned by the report; null for null.
//
// # Safety
// `r` must be null or a live report handle; the returned pointer is
// valid until [`grale_report_free`].
const char *grale_report_csv(const struct GraleReport *r);

// JSON artifact of the run.  Owned by the report; null for null.
//
// # Safety
// `r` must be null or a live report handle; the returned pointer is
// valid until [`grale_report_free`].
const char *grale_report_json(const struct GraleReport *r);

// Releases a report handle.  Null is ignored.
//
// # Safety
// `r` must be null or a pointer obtained from [`grale_run_toml`] that
// has not been freed already.
void grale_report_free(struct GraleReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRALE_H */
