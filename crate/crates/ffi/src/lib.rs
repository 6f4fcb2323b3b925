//! C interface to `lanemix`.
//!
//! Every entry point returns an [`LmStatus`]; results come back through out
//! pointers. Objects are opaque handles released with the matching `_free`.
//! After a failure, [`lm_last_error`] describes it until the next call on the
//! same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lanemix::lemma_verify::{verify_pair, LemmaError, LemmaOptions, LemmaReport};
use lanemix::profiles::default_alpha;
use lanemix::reduction::{BallPolicy, ReductionConfig, ReductionError, ReductionReport, Reducer};
use lanemix::specfun::{hyp2f1, Hyp2F1Params};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Verification = 3,
    Regime = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

pub struct LmLemmaReport {
    inner: LemmaReport,
}

pub struct LmSolver {
    inner: Reducer,
}

pub struct LmSolution {
    report: ReductionReport,
    radii: Vec<f64>,
    z: Vec<f64>,
}

/// Plain-data view of a lemma report. Undefined quantities are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LmLemmaSummary {
    pub n: u32,
    pub s: f64,
    pub a: f64,
    pub a_bif: f64,
    pub b: f64,
    pub b_hyp: f64,
    pub c_ns: f64,
    pub lambda0: f64,
    pub h_max: f64,
    pub certified: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LmSolutionSummary {
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub phi_norm: f64,
    pub ball_radius: f64,
    pub in_ball: bool,
    pub iterations: usize,
    pub bifurcation_value: f64,
    pub pde_residual: f64,
    pub positivity_min: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(LmStatus, String);

impl From<LemmaError> for Failure {
    fn from(e: LemmaError) -> Self {
        let code = match e {
            LemmaError::Invalid(_) | LemmaError::Divergent { .. } => LmStatus::InvalidArgument,
            _ => LmStatus::Verification,
        };
        Failure(code, e.to_string())
    }
}

impl From<ReductionError> for Failure {
    fn from(e: ReductionError) -> Self {
        let code = match e {
            ReductionError::Param(_) | ReductionError::Invalid(_) | ReductionError::Bracket { .. } => {
                LmStatus::InvalidArgument
            }
            ReductionError::Regime { .. } | ReductionError::NonConvergence { .. } | ReductionError::Solver { .. } => {
                LmStatus::Regime
            }
            _ => LmStatus::Verification,
        };
        Failure(code, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LmStatus::Ok
        }
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            LmStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LmStatus::NullPointer, format!("{what} is null"))
}

/// Message for the most recent failure on this thread; empty after a success.
/// The pointer stays valid until the next `lm_` call on the same thread.
#[no_mangle]
pub extern "C" fn lm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Gauss hypergeometric ₂F₁(a, b; c; z) for real z ≤ 0.
///
/// # Safety
/// `out` must be null or point to writable storage for one `double`.
#[no_mangle]
pub unsafe extern "C" fn lm_hyp2f1(a: f64, b: f64, c: f64, z: f64, out: *mut f64) -> LmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = Hyp2F1Params::new(a, b, c).map_err(|e| Failure(LmStatus::InvalidArgument, e.to_string()))?;
        let v = hyp2f1(p, z).map_err(|e| Failure(LmStatus::InvalidArgument, e.to_string()))?;
        *out = v;
        Ok(())
    })
}

/// Runs the sign certificates for one (n, s). A report is produced even when a
/// certificate fails; check `certified` in its summary.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_lemma_verify(n: u32, s: f64, h_samples: usize, out: *mut *mut LmLemmaReport) -> LmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let opts = LemmaOptions { h_samples, ..LemmaOptions::default() };
        let inner = verify_pair(n, s, &opts)?;
        *out = Box::into_raw(Box::new(LmLemmaReport { inner }));
        Ok(())
    })
}

/// # Safety
/// `report` and `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn lm_lemma_report_summary(report: *const LmLemmaReport, out: *mut LmLemmaSummary) -> LmStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        *out = LmLemmaSummary {
            n: r.n,
            s: r.s,
            a: r.a,
            a_bif: r.a_bif,
            b: nan(r.b),
            b_hyp: nan(r.b_hyp),
            c_ns: r.c_ns,
            lambda0: nan(r.lambda0),
            h_max: r.h_min_margin,
            certified: r.certified,
        };
        Ok(())
    })
}

/// Writes the report as NUL-terminated JSON into `buf`. `written` receives the
/// size including the terminator; on `BufferTooSmall` it is the size needed.
///
/// # Safety
/// `buf` must point to `len` writable bytes (it may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn lm_lemma_report_json(
    report: *const LmLemmaReport,
    buf: *mut c_char,
    len: usize,
    written: *mut usize,
) -> LmStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.inner;
        let json = serde_json::to_string(r).map_err(|e| Failure(LmStatus::Verification, e.to_string()))?;
        copy_str(&json, buf, len, written)
    })
}

fn need_space(need: usize, len: usize, written: *mut usize) -> Result<(), Failure> {
    if !written.is_null() {
        unsafe { *written = need };
    }
    if len < need {
        return Err(Failure(LmStatus::BufferTooSmall, format!("buffer holds {len}, need {need}")));
    }
    Ok(())
}

unsafe fn copy_str(s: &str, buf: *mut c_char, len: usize, written: *mut usize) -> Result<(), Failure> {
    need_space(s.len() + 1, len, written)?;
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

unsafe fn copy_doubles(data: &[f64], buf: *mut f64, len: usize, written: *mut usize) -> Result<(), Failure> {
    need_space(data.len(), len, written)?;
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
    Ok(())
}

/// # Safety
/// `report` must be null or come from [`lm_lemma_verify`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lm_lemma_report_free(report: *mut LmLemmaReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Builds the grid and the factorized operator for (n, s). With
/// `report_ball` set, a fixed point outside the contraction ball is returned
/// instead of failing with `Regime`.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn lm_solver_new(
    n: u32,
    s: f64,
    r_max: f64,
    size: usize,
    report_ball: bool,
    max_iterations: usize,
    out: *mut *mut LmSolver,
) -> LmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mut cfg = ReductionConfig { r_max, size, ..ReductionConfig::default() };
        if report_ball {
            cfg.ball_policy = BallPolicy::Report;
        }
        if max_iterations > 0 {
            cfg.fp_max_iter = max_iterations;
        }
        let inner = Reducer::new(n, s, cfg)?;
        *out = Box::into_raw(Box::new(LmSolver { inner }));
        Ok(())
    })
}

/// Bisects the bifurcation function on `[lambda_lo, lambda_hi]` at the given
/// ε. A non-positive `alpha` selects the default ball exponent.
///
/// # Safety
/// `solver` and `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn lm_solver_solve(
    solver: *const LmSolver,
    eps: f64,
    alpha: f64,
    lambda_lo: f64,
    lambda_hi: f64,
    f_tol: f64,
    out: *mut *mut LmSolution,
) -> LmStatus {
    guard(|| {
        let red = &solver.as_ref().ok_or_else(|| null("solver"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let alpha = if alpha > 0.0 { alpha } else { default_alpha(red.n) };
        let sol = red.solve_theorem1(eps, alpha, (lambda_lo, lambda_hi), f_tol)?;
        let report = red.report(&sol, 0, 0)?;
        let z = red.bubble().axpy(1.0, &sol.state.phi).map_err(ReductionError::from)?;
        *out = Box::into_raw(Box::new(LmSolution { report, radii: red.grid().nodes().to_vec(), z: z.values }));
        Ok(())
    })
}

/// # Safety
/// `solver` must be null or come from [`lm_solver_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lm_solver_free(solver: *mut LmSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// # Safety
/// `solution` and `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn lm_solution_summary(solution: *const LmSolution, out: *mut LmSolutionSummary) -> LmStatus {
    guard(|| {
        let r = &solution.as_ref().ok_or_else(|| null("solution"))?.report;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = LmSolutionSummary {
            lambda: r.lambda,
            mu: r.mu,
            delta: r.delta,
            phi_norm: r.phi_norm,
            ball_radius: r.ball_radius,
            in_ball: r.in_ball,
            iterations: r.iterations,
            bifurcation_value: r.bifurcation_value,
            pde_residual: r.pde_residual,
            positivity_min: r.positivity_min,
        };
        Ok(())
    })
}

/// Copies the grid radii and z = U + φ into caller buffers of `len` doubles.
/// `written` receives the node count; on `BufferTooSmall` it is the size needed.
///
/// # Safety
/// `radii` and `z` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lm_solution_profile(
    solution: *const LmSolution,
    radii: *mut f64,
    z: *mut f64,
    len: usize,
    written: *mut usize,
) -> LmStatus {
    guard(|| {
        let sol = solution.as_ref().ok_or_else(|| null("solution"))?;
        copy_doubles(&sol.radii, radii, len, written)?;
        copy_doubles(&sol.z, z, len, written)
    })
}

/// # Safety
/// `solution` must be null or come from [`lm_solver_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lm_solution_free(solution: *mut LmSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}
