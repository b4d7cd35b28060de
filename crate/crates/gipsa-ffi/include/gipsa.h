#ifndef GIPSA_H
#define GIPSA_H

/* Generated by cbindgen from the gipsa-ffi crate; edit src/lib.rs instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a call into this library.
typedef enum {
  GIPSA_STATUS_OK = 0,
  // A required pointer argument was NULL.
  GIPSA_STATUS_NULL_POINTER = 1,
  // A value argument was rejected; the error message names it.
  GIPSA_STATUS_INVALID_ARGUMENT = 2,
  // A string argument was not valid UTF-8.
  GIPSA_STATUS_UTF8 = 3,
  // An array length did not match the instance dimensions.
  GIPSA_STATUS_DIMENSION_MISMATCH = 4,
  // The instance matrix has no positive curvature to work with.
  GIPSA_STATUS_DEGENERATE = 5,
  // The iteration blew up numerically; diverging schedules do this.
  GIPSA_STATUS_DIVERGED = 6,
  // The computation finished but did not reach its accuracy target.
  GIPSA_STATUS_NOT_CONVERGED = 7,
  // File could not be read or written.
  GIPSA_STATUS_IO = 8,
  // A bug: an internal panic was caught at the boundary.
  GIPSA_STATUS_INTERNAL = 9,
} GipsaStatus;

// Why a solve stopped.
typedef enum {
  // The fixed-point residual fell below the requested tolerance.
  GIPSA_STOP_CAUSE_RESIDUAL = 0,
  // A relative objective-gap rule fired (not used by `gipsa_solve`).
  GIPSA_STOP_CAUSE_OBJECTIVE_GAP = 1,
  // The step budget ran out; inspect the residual before trusting x.
  GIPSA_STOP_CAUSE_ITERATION_LIMIT = 2,
  // A restarting run reached the numerical floor: repeating the step
  // would reproduce the iterate bit for bit, so no further progress is
  // possible at this precision.
  GIPSA_STOP_CAUSE_STATIONARY = 3,
} GipsaStopCause;

// Opaque problem instance: a least-squares term plus a weighted l1 term.
typedef struct GipsaInstance GipsaInstance;

// Counters and final measurements of one `gipsa_solve` call.
typedef struct {
  // Steps taken.
  size_t iterations;
  // Objective-restart events (only `fista-cd-re` produces any).
  size_t restarts;
  // Objective value at the returned iterate.
  double objective;
  // Sup-norm fixed-point residual at the returned iterate, step 1/L.
  double fixed_point_residual;
  GipsaStopCause stopped_on;
} GipsaSolveStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string; never NULL.
const char *gipsa_version(void);

// Copies the calling thread's last error message into `buf` (truncated to
// `cap - 1` bytes, always NUL-terminated when `cap > 0`) and returns the full
// message length in bytes, excluding the terminator. Call with `buf == NULL`
// or `cap == 0` to size a buffer first.
//
// # Safety
// `buf` must be valid for `cap` writes when non-NULL.
size_t gipsa_last_error(char *buf, size_t cap);

// Builds an instance from caller-owned arrays: `a` is row-major `m x n`,
// `b` has `m` entries, and `rho > 0` weights the l1 term. The arrays are
// copied; the caller keeps ownership of its buffers and must eventually
// release the handle with `gipsa_instance_free`.
//
// # Safety
// `a` and `b` must be valid for `m * n` and `m` reads.
GipsaStatus gipsa_instance_new(size_t m,
                               size_t n,
                               const double *a,
                               const double *b,
                               double rho,
                               GipsaInstance **out);

// Generates a random planted-signal instance. Identical parameters produce
// identical instances on every platform.
//
// # Safety
// `out` must be writable.
GipsaStatus gipsa_instance_generate(size_t n,
                                    size_t m,
                                    double rho,
                                    size_t nnz,
                                    double sigma2,
                                    uint64_t seed,
                                    GipsaInstance **out);

// Reads an instance file written by `gipsa_instance_write` or the CLI.
//
// # Safety
// `path` must be a NUL-terminated string.
GipsaStatus gipsa_instance_read(const char *path, GipsaInstance **out);

// Writes the instance to `path` in the text format the CLI reads.
//
// # Safety
// `inst` must be a live handle and `path` a NUL-terminated string.
GipsaStatus gipsa_instance_write(const GipsaInstance *inst, const char *path);

// Releases a handle. NULL is tolerated; anything else must have come from a
// `gipsa_instance_*` constructor and must not be used afterwards.
//
// # Safety
// See above.
void gipsa_instance_free(GipsaInstance *inst);

// Writes the instance shape: `rows_out` receives m, `cols_out` receives n.
//
// # Safety
// `inst` must be a live handle; the out-pointers must be writable.
GipsaStatus gipsa_instance_dims(const GipsaInstance *inst, size_t *rows_out, size_t *cols_out);

// Writes the l1 weight of the instance.
//
// # Safety
// `inst` must be a live handle; `rho_out` must be writable.
GipsaStatus gipsa_instance_rho(const GipsaInstance *inst, double *rho_out);

// Writes the gradient Lipschitz constant the solvers scale their steps by.
//
// # Safety
// `inst` must be a live handle; `l_out` must be writable.
GipsaStatus gipsa_instance_lipschitz(const GipsaInstance *inst, double *l_out);

// Evaluates the full objective (least squares plus weighted l1) at `x`,
// which must have exactly n entries.
//
// # Safety
// `inst` must be a live handle, `x` valid for `len` reads, `f_out` writable.
GipsaStatus gipsa_objective(const GipsaInstance *inst, const double *x, size_t len, double *f_out);

// Runs one algorithm variant on the instance.
//
// `descriptor` picks the variant exactly as on the CLI: `"fbs"`,
// `"ifbs:0.4"`, `"ifbs:star"`, `"gipsa:<alpha>:<beta>"`, `"fista-cd"`,
// `"fista-cd-re"`, each optionally suffixed `@<f>` to run at step `f / L`.
// The run starts from `x0` (NULL means the origin) and stops when the
// sup-norm fixed-point residual falls below `tol` or after `max_iters`
// steps, whichever is first; check `stats->stopped_on` to tell which.
// `"ifbs:star"` tunes its momentum to the instance's active-set curvature,
// which requires an internal high-accuracy reference solve first — expect it
// to cost more than the run itself.
//
// `x_out` (n entries) and `stats` each may be NULL if not wanted; both are
// written only on success.
//
// # Safety
// Pointers must be valid as documented; `x_out` needs room for n values.
GipsaStatus gipsa_solve(const GipsaInstance *inst,
                        const char *descriptor,
                        double tol,
                        size_t max_iters,
                        const double *x0,
                        double *x_out,
                        GipsaSolveStats *stats);

// Solves the instance to the numerical floor and writes the minimizer,
// optimal value, and its fixed-point residual; each out-pointer may be NULL.
// Returns `GIPSA_STATUS_NOT_CONVERGED` — with all outputs still written —
// when the floor could not be certified, so callers can inspect the residual
// and decide for themselves.
//
// # Safety
// `inst` must be a live handle; `x_out` needs room for n values when set.
GipsaStatus gipsa_reference_solve(const GipsaInstance *inst,
                                  double *x_out,
                                  double *f_out,
                                  double *residual_out);

// Checks a schedule descriptor against the convergence conditions at the
// given Lipschitz constant. `horizon` is the number of iterations swept for
// k-dependent rules; pass 0 for the default. `valid_out` receives whether a
// convergence guarantee covers the schedule; `margin_out` (optional)
// receives the worst slack in the second-order coefficient condition —
// negative means the condition fails. `"ifbs:star"` cannot be validated
// here: its momentum depends on instance structure, not just L.
//
// # Safety
// `descriptor` must be a NUL-terminated string; out-pointers writable.
GipsaStatus gipsa_validate_schedule(const char *descriptor,
                                    double lipschitz,
                                    size_t horizon,
                                    bool *valid_out,
                                    double *margin_out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* GIPSA_H */
