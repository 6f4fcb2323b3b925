#ifndef LANEMIX_H
#define LANEMIX_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
    LM_STATUS_OK = 0,
    LM_STATUS_NULL_POINTER = 1,
    LM_STATUS_INVALID_ARGUMENT = 2,
    LM_STATUS_VERIFICATION = 3,
    LM_STATUS_REGIME = 4,
    LM_STATUS_BUFFER_TOO_SMALL = 5,
    LM_STATUS_PANIC = 6,
} LmStatus;

typedef struct LmLemmaReport LmLemmaReport;

typedef struct LmSolution LmSolution;

typedef struct LmSolver LmSolver;

/**
 * Plain-data view of a lemma report. Undefined quantities are NaN.
 */
typedef struct {
    uint32_t n;
    double s;
    double a;
    double a_bif;
    double b;
    double b_hyp;
    double c_ns;
    double lambda0;
    double h_max;
    bool certified;
} LmLemmaSummary;

typedef struct {
    double lambda;
    double mu;
    double delta;
    double phi_norm;
    double ball_radius;
    bool in_ball;
    uintptr_t iterations;
    double bifurcation_value;
    double pde_residual;
    double positivity_min;
} LmSolutionSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; empty after a success.
 * The pointer stays valid until the next `lm_` call on the same thread.
 */
const char *lm_last_error(void);

/**
 * Gauss hypergeometric ₂F₁(a, b; c; z) for real z ≤ 0.
 *
 * # Safety
 * `out` must be null or point to writable storage for one `double`.
 */
LmStatus lm_hyp2f1(double a, double b, double c, double z, double *out);

/**
 * Runs the sign certificates for one (n, s). A report is produced even when a
 * certificate fails; check `certified` in its summary.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
LmStatus lm_lemma_verify(uint32_t n, double s, uintptr_t h_samples, LmLemmaReport **out);

/**
 * # Safety
 * `report` and `out` must be null or valid.
 */
LmStatus lm_lemma_report_summary(const LmLemmaReport *report, LmLemmaSummary *out);

/**
 * Writes the report as NUL-terminated JSON into `buf`. `written` receives the
 * size including the terminator; on `BufferTooSmall` it is the size needed.
 *
 * # Safety
 * `buf` must point to `len` writable bytes (it may be null when `len` is 0).
 */
LmStatus lm_lemma_report_json(const LmLemmaReport *report,
                              char *buf,
                              uintptr_t len,
                              uintptr_t *written);

/**
 * # Safety
 * `report` must be null or come from [`lm_lemma_verify`] and not be freed twice.
 */
void lm_lemma_report_free(LmLemmaReport *report);

/**
 * Builds the grid and the factorized operator for (n, s). With
 * `report_ball` set, a fixed point outside the contraction ball is returned
 * instead of failing with `Regime`.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
LmStatus lm_solver_new(uint32_t n,
                       double s,
                       double r_max,
                       uintptr_t size,
                       bool report_ball,
                       uintptr_t max_iterations,
                       LmSolver **out);

/**
 * Bisects the bifurcation function on `[lambda_lo, lambda_hi]` at the given
 * ε. A non-positive `alpha` selects the default ball exponent.
 *
 * # Safety
 * `solver` and `out` must be null or valid.
 */
LmStatus lm_solver_solve(const LmSolver *solver,
                         double eps,
                         double alpha,
                         double lambda_lo,
                         double lambda_hi,
                         double f_tol,
                         LmSolution **out);

/**
 * # Safety
 * `solver` must be null or come from [`lm_solver_new`] and not be freed twice.
 */
void lm_solver_free(LmSolver *solver);

/**
 * # Safety
 * `solution` and `out` must be null or valid.
 */
LmStatus lm_solution_summary(const LmSolution *solution, LmSolutionSummary *out);

/**
 * Copies the grid radii and z = U + φ into caller buffers of `len` doubles.
 * `written` receives the node count; on `BufferTooSmall` it is the size needed.
 *
 * # Safety
 * `radii` and `z` must each point to `len` writable doubles.
 */
LmStatus lm_solution_profile(const LmSolution *solution,
                             double *radii,
                             double *z,
                             uintptr_t len,
                             uintptr_t *written);

/**
 * # Safety
 * `solution` must be null or come from [`lm_solver_solve`] and not be freed twice.
 */
void lm_solution_free(LmSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LANEMIX_H */
