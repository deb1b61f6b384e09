#ifndef ALESOLVE_H
#define ALESOLVE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AlesolveStatus {
  ALESOLVE_STATUS_OK = 0,
  ALESOLVE_STATUS_NULL_POINTER = 1,
  ALESOLVE_STATUS_CONFIG = 2,
  ALESOLVE_STATUS_STATE = 3,
  ALESOLVE_STATUS_GEOMETRY = 4,
  ALESOLVE_STATUS_TIME_STEP = 5,
  ALESOLVE_STATUS_IO = 6,
  ALESOLVE_STATUS_BUFFER_TOO_SMALL = 7,
  ALESOLVE_STATUS_PANIC = 8,
} AlesolveStatus;

// Nodal operators of one polynomial degree.
typedef struct AlesolveOperators AlesolveOperators;

// A DG solver together with its current field.
typedef struct AlesolveSolver AlesolveSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL terminated,
// truncated to `len - 1` bytes). Returns the full message length.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t alesolve_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *alesolve_version(void);

// Build the operators of degree `n` (1..=15).
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum AlesolveStatus alesolve_operators_new(size_t n, struct AlesolveOperators **out);

// # Safety
// `h` must be null or a handle from [`alesolve_operators_new`] not yet freed.
void alesolve_operators_free(struct AlesolveOperators *h);

// Node count N + 1.
//
// # Safety
// `h` must be a live operators handle, `out` writable.
enum AlesolveStatus alesolve_operators_num_nodes(const struct AlesolveOperators *h, size_t *out);

// Copy the nodes and weights (N + 1 values each).
//
// # Safety
// `nodes` and `weights` must point to `len` writable doubles.
enum AlesolveStatus alesolve_operators_nodes_weights(const struct AlesolveOperators *h,
                                                     double *nodes,
                                                     double *weights,
                                                     size_t len);

// Copy the derivative matrix, row major, (N + 1)^2 values.
//
// # Safety
// `out` must point to `len` writable doubles.
enum AlesolveStatus alesolve_operators_derivative(const struct AlesolveOperators *h,
                                                  double *out,
                                                  size_t len);

// max |Q + Q^T - B|.
//
// # Safety
// `h` must be a live operators handle, `out` writable.
enum AlesolveStatus alesolve_operators_sbp_residual(const struct AlesolveOperators *h, double *out);

// Create a solver for one (degree, elements) pair of a DG run
// configuration (JSON text, same format as the command line) and
// initialize it with the scenario's initial data.
//
// # Safety
// `config_json` must be a NUL-terminated string, `out` writable.
enum AlesolveStatus alesolve_solver_new(const char *config_json,
                                        size_t degree,
                                        size_t elements,
                                        struct AlesolveSolver **out);

// # Safety
// `h` must be null or a handle from [`alesolve_solver_new`] not yet freed.
void alesolve_solver_free(struct AlesolveSolver *h);

// Total number of nodes; the state holds 5 values per node.
//
// # Safety
// `h` must be a live solver handle, `out` writable.
enum AlesolveStatus alesolve_solver_num_nodes(const struct AlesolveSolver *h, size_t *out);

// Current simulation time.
//
// # Safety
// `h` must be a live solver handle, `out` writable.
enum AlesolveStatus alesolve_solver_time(const struct AlesolveSolver *h, double *out);

// Stable time step for the current state at the given CFL number.
//
// # Safety
// `h` must be a live solver handle, `out` writable.
enum AlesolveStatus alesolve_solver_stable_dt(const struct AlesolveSolver *h,
                                              double cfl,
                                              double *out);

// Advance `steps` steps of size `dt`. On failure the state is left at the
// last completed step.
//
// # Safety
// `h` must be a live solver handle.
enum AlesolveStatus alesolve_solver_step(struct AlesolveSolver *h, double dt, size_t steps);

// Total discrete entropy of the current state.
//
// # Safety
// `h` must be a live solver handle, `out` writable.
enum AlesolveStatus alesolve_solver_entropy(const struct AlesolveSolver *h, double *out);

// Copy the conserved state, 5 values per node, node-major.
//
// # Safety
// `out` must point to `len` writable doubles.
enum AlesolveStatus alesolve_solver_copy_state(const struct AlesolveSolver *h,
                                               double *out,
                                               size_t len);

// Run a configuration (JSON text) and write its outputs into `output_dir`,
// as `alesolve run` does. A run that completes but records a solver
// failure returns [`AlesolveStatus::State`].
//
// # Safety
// Both arguments must be NUL-terminated strings.
enum AlesolveStatus alesolve_run_config(const char *config_json, const char *output_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ALESOLVE_H */
