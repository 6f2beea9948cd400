#ifndef FHBVM_H
#define FHBVM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FHBVM_MODE_AUTO 0

#define FHBVM_MODE_FIXED_POINT 1

#define FHBVM_MODE_BLENDED 2

#define FHBVM_MODE_NEWTON 3

typedef enum FhbvmStatus {
  FHBVM_STATUS_OK = 0,
  FHBVM_STATUS_NULL_POINTER = 1,
  FHBVM_STATUS_INVALID_ARGUMENT = 2,
  FHBVM_STATUS_SOLVER_FAILURE = 3,
  FHBVM_STATUS_QUADRATURE_FAILURE = 4,
  FHBVM_STATUS_OUT_OF_RANGE = 5,
  FHBVM_STATUS_BUFFER_TOO_SMALL = 6,
  FHBVM_STATUS_PANIC = 7,
} FhbvmStatus;

typedef struct FhbvmProblem FhbvmProblem;

typedef struct FhbvmTrajectory FhbvmTrajectory;

/**
 * Solver settings. A non-positive or NaN `rho11` selects the default.
 */
typedef struct FhbvmOptions {
  size_t s;
  double tol_abs;
  double tol_rel;
  size_t max_iter;
  size_t fp_max;
  double rho11;
  uint32_t mode;
} FhbvmOptions;

/**
 * Right-hand side `f(t, y)` written to `out`, both of length `m`.
 * A non-zero return marks the evaluation as failed.
 */
typedef int (*FhbvmField)(double t, const double *y, double *out, size_t m, void *user_data);

/**
 * Row-major Jacobian `∂f/∂y` written to `jac` (length `m*m`).
 */
typedef int (*FhbvmJacobian)(double t, const double *y, double *jac, size_t m, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; valid until the next
 * failing call on the same thread. Empty when nothing failed yet.
 */
const char *fhbvm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fhbvm_version(void);

struct FhbvmOptions fhbvm_options_default(void);

/**
 * Built-in test problem by name (`p1` … `p6`, `p5a`, `p5b`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum FhbvmStatus fhbvm_problem_builtin(const char *name, struct FhbvmProblem **out);

/**
 * Problem `D^{α_e} y_e = f_e(t, y)` on `[0, t_final]` with `m` equations.
 * `initial` holds `ℓ·m` values, row `ι` being the `ι`-th derivatives at 0,
 * where `ℓ = ⌈α⌉` is shared by all orders. `jacobian` may be null, in which
 * case finite differences are used.
 *
 * # Safety
 * `orders` must hold `m` values and `initial` `ell*m`; the callbacks must be
 * safe to call from any thread with `user_data` for the handle's lifetime.
 */
enum FhbvmStatus fhbvm_problem_new(size_t m,
                                   const double *orders,
                                   size_t ell,
                                   const double *initial,
                                   double t_final,
                                   FhbvmField field,
                                   FhbvmJacobian jacobian,
                                   void *user_data,
                                   struct FhbvmProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from this library, not yet freed.
 */
void fhbvm_problem_free(struct FhbvmProblem *problem);

/**
 * # Safety
 * `problem` must be a live handle and `m` writable.
 */
enum FhbvmStatus fhbvm_problem_dim(const struct FhbvmProblem *problem, size_t *m);

/**
 * Replaces the final time; drops any built-in endpoint reference.
 *
 * # Safety
 * `problem` must be a live handle.
 */
enum FhbvmStatus fhbvm_problem_set_t_final(struct FhbvmProblem *problem, double t_final);

/**
 * Solves on a mesh of `n_total` steps whose first `mu` are graded.
 * On a solver failure the completed steps are still returned in `out`.
 * `opts` may be null for defaults.
 *
 * # Safety
 * `problem` must be a live handle, `opts` null or readable, `out` writable.
 */
enum FhbvmStatus fhbvm_solve(const struct FhbvmProblem *problem,
                             size_t n_total,
                             size_t mu,
                             size_t rho,
                             const struct FhbvmOptions *opts,
                             struct FhbvmTrajectory **out);

/**
 * As [`fhbvm_solve`] with the uniform step `T/divisor`, so that the mesh has
 * `divisor + mu - rho` steps.
 *
 * # Safety
 * See [`fhbvm_solve`].
 */
enum FhbvmStatus fhbvm_solve_divisor(const struct FhbvmProblem *problem,
                                     size_t divisor,
                                     size_t mu,
                                     size_t rho,
                                     const struct FhbvmOptions *opts,
                                     struct FhbvmTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a handle from this library, not yet freed.
 */
void fhbvm_trajectory_free(struct FhbvmTrajectory *traj);

/**
 * Number of stored points (completed steps plus one) and components.
 *
 * # Safety
 * `traj` must be a live handle; `points` and `m` writable.
 */
enum FhbvmStatus fhbvm_trajectory_shape(const struct FhbvmTrajectory *traj,
                                        size_t *points,
                                        size_t *m);

/**
 * Copies the mesh points reached into `times` (capacity `cap`).
 *
 * # Safety
 * `traj` must be a live handle and `times` hold `cap` writable values.
 */
enum FhbvmStatus fhbvm_trajectory_times(const struct FhbvmTrajectory *traj,
                                        double *times,
                                        size_t cap);

/**
 * Copies the solution values, row-major (one row per point).
 *
 * # Safety
 * `traj` must be a live handle and `values` hold `cap` writable values.
 */
enum FhbvmStatus fhbvm_trajectory_values(const struct FhbvmTrajectory *traj,
                                         double *values,
                                         size_t cap);

/**
 * Dense output at `t` within the computed range.
 *
 * # Safety
 * `traj` must be a live handle and `y` hold `cap` writable values.
 */
enum FhbvmStatus fhbvm_trajectory_eval(const struct FhbvmTrajectory *traj,
                                       double t,
                                       double *y,
                                       size_t cap);

/**
 * Iteration totals over all steps.
 *
 * # Safety
 * `traj` must be a live handle; both outputs writable.
 */
enum FhbvmStatus fhbvm_trajectory_iterations(const struct FhbvmTrajectory *traj,
                                             size_t *fixed_point,
                                             size_t *fallback);

/**
 * mescd against the problem's exact solution at the mesh points.
 *
 * # Safety
 * `traj` must be a live handle and `digits` writable.
 */
enum FhbvmStatus fhbvm_trajectory_exact_mescd(const struct FhbvmTrajectory *traj, double *digits);

/**
 * mescd of `computed` against `reference`, both `rows × cols` row-major.
 *
 * # Safety
 * Both arrays must hold `rows*cols` values and `digits` be writable.
 */
enum FhbvmStatus fhbvm_mescd(const double *computed,
                             const double *reference,
                             size_t rows,
                             size_t cols,
                             double *digits);

/**
 * Number of shared abscissae `k` for the given orders and `s`.
 *
 * # Safety
 * `alphas` must hold `nu` values and `k` be writable.
 */
enum FhbvmStatus fhbvm_quadrature_size(const double *alphas, size_t nu, size_t s, size_t *k);

/**
 * Shared abscissae (`k` values) and weights (`nu × k`, one row per order).
 *
 * # Safety
 * `alphas` must hold `nu` values; `nodes` and `weights` hold `cap_nodes`
 * and `cap_weights` writable values.
 */
enum FhbvmStatus fhbvm_quadrature(const double *alphas,
                                  size_t nu,
                                  size_t s,
                                  double *nodes,
                                  size_t cap_nodes,
                                  double *weights,
                                  size_t cap_weights);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FHBVM_H */
