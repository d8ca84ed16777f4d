#ifndef FBE_H
#define FBE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define FBE_OK 0

/**
 * A required pointer argument was null.
 */
#define FBE_ERR_NULL -1

/**
 * An argument was out of range or the input data are not an admissible state.
 */
#define FBE_ERR_INVALID -2

/**
 * The computation itself failed (resolution, boundary loss, tangled mesh, ...).
 */
#define FBE_ERR_NUMERIC -3

/**
 * The caller's buffer is too small; nothing was written.
 */
#define FBE_ERR_BUFFER -4

/**
 * A Rust panic was caught at the boundary.
 */
#define FBE_ERR_PANIC -5

/**
 * Opaque state handle.
 */
typedef struct FbeState FbeState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated, truncated to
 * `len`). Returns the full message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t fbe_last_error(char *buf, uintptr_t len);

/**
 * Affine solution `r = α(t)(1 - x²/R(t)²)`, `v = β(t)x` at time `t` on `cells` cells.
 *
 * # Safety
 * `out` must be a valid pointer to write the new handle to.
 */
int fbe_state_affine(double alpha,
                     double beta,
                     double radius,
                     double kappa,
                     double t,
                     uintptr_t cells,
                     FbeState **out);

/**
 * State from node positions and nodal values of `r` and `v` (`n` nodes each).
 *
 * # Safety
 * `x`, `r`, `v` must point to `n` readable doubles; `out` must be writable.
 */
int fbe_state_from_nodes(const double *x,
                         const double *r,
                         const double *v,
                         uintptr_t n,
                         double kappa,
                         FbeState **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `state` must be null or a handle from this library not freed before.
 */
void fbe_state_free(FbeState *state);

/**
 * Number of grid nodes of `state`, or 0 for null.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
uintptr_t fbe_state_len(const FbeState *state);

/**
 * Copy nodes, `r` and `v` into caller buffers of length `len` (any of them may be null).
 *
 * # Safety
 * `state` must be a live handle; non-null buffers must hold `len` doubles.
 */
int fbe_state_values(const FbeState *state, double *x, double *r, double *v, uintptr_t len);

/**
 * Boundary points `Γ₋`, `Γ₊`.
 *
 * # Safety
 * `state` must be a live handle; `gamma_minus` and `gamma_plus` must be writable.
 */
int fbe_state_boundary(const FbeState *state, double *gamma_minus, double *gamma_plus);

/**
 * Energy `E^{2k}` (`k ≤ 4`) and the conserved physical energy.
 *
 * # Safety
 * `state` must be a live handle; `energy` and `physical` must be writable.
 */
int fbe_energy(const FbeState *state, uintptr_t k, double *energy, double *physical);

/**
 * Control parameters `A` and `B`.
 *
 * # Safety
 * `state` must be a live handle; `a` and `b` must be writable.
 */
int fbe_control(const FbeState *state, double *a, double *b);

/**
 * One regularize-and-transport step of size `eps` at energy index `k`.
 *
 * Scale inequalities that fail for this `k` are recorded, not rejected.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
int fbe_step(const FbeState *state, double eps, uintptr_t k, FbeState **out);

/**
 * Iterate steps of size `eps` up to `t_end`; writes the final state.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
int fbe_evolve(const FbeState *state, double t_end, double eps, uintptr_t k, FbeState **out);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fbe_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBE_H */
