use std::ffi::CStr;
use std::ptr;

use lanemix_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lm_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn hyp2f1_matches_logarithm() {
    // ₂F₁(1,1;2;z) = −ln(1−z)/z
    for z in [-0.2, -0.7, -3.0, -250.0] {
        let mut v = 0.0;
        assert_eq!(unsafe { lm_hyp2f1(1.0, 1.0, 2.0, z, &mut v) }, LmStatus::Ok);
        let exact = -(1.0f64 - z).ln() / z;
        assert!((v - exact).abs() <= 1e-13 * exact.abs(), "z={z}: {v} vs {exact}");
    }
}

#[test]
fn null_out_pointer_is_reported() {
    assert_eq!(unsafe { lm_hyp2f1(1.0, 1.0, 2.0, 0.1, ptr::null_mut()) }, LmStatus::NullPointer);
    assert!(last_error().contains("null"));
    let mut s = std::mem::MaybeUninit::<LmLemmaSummary>::uninit();
    assert_eq!(unsafe { lm_lemma_report_summary(ptr::null(), s.as_mut_ptr()) }, LmStatus::NullPointer);
}

#[test]
fn invalid_parameters_are_rejected() {
    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { lm_lemma_verify(4, 1.5, 100, &mut rep) }, LmStatus::InvalidArgument);
    assert!(rep.is_null());
    assert!(!last_error().is_empty());
    let mut solver = ptr::null_mut();
    assert_eq!(unsafe { lm_solver_new(2, 0.5, 50.0, 128, false, 0, &mut solver) }, LmStatus::InvalidArgument);
    assert!(solver.is_null());
}

#[test]
fn lemma_report_round_trip() {
    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { lm_lemma_verify(4, 0.5, 200, &mut rep) }, LmStatus::Ok);
    assert!(last_error().is_empty());
    let mut sum = std::mem::MaybeUninit::<LmLemmaSummary>::uninit();
    assert_eq!(unsafe { lm_lemma_report_summary(rep, sum.as_mut_ptr()) }, LmStatus::Ok);
    let sum = unsafe { sum.assume_init() };
    assert!(sum.certified);
    assert!(sum.a > 0.0 && sum.b < 0.0 && sum.h_max < 0.0);
    assert!((sum.lambda0 + sum.a_bif / sum.b).abs() <= 1e-14 * sum.lambda0);

    let mut need = 0usize;
    assert_eq!(unsafe { lm_lemma_report_json(rep, ptr::null_mut(), 0, &mut need) }, LmStatus::BufferTooSmall);
    let mut buf = vec![0 as std::ffi::c_char; need];
    let mut written = 0usize;
    assert_eq!(unsafe { lm_lemma_report_json(rep, buf.as_mut_ptr(), buf.len(), &mut written) }, LmStatus::Ok);
    assert_eq!(written, need);
    let text = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    assert_eq!(v["n"], 4);
    assert_eq!(v["certified"], true);
    unsafe { lm_lemma_report_free(rep) };
}

#[test]
fn divergent_pair_has_nan_b() {
    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { lm_lemma_verify(3, 0.5, 100, &mut rep) }, LmStatus::Ok);
    let mut sum = std::mem::MaybeUninit::<LmLemmaSummary>::uninit();
    assert_eq!(unsafe { lm_lemma_report_summary(rep, sum.as_mut_ptr()) }, LmStatus::Ok);
    let sum = unsafe { sum.assume_init() };
    assert!(!sum.certified);
    assert!(sum.b.is_nan() && sum.lambda0.is_nan());
    assert!(sum.a > 0.0);
    unsafe { lm_lemma_report_free(rep) };
}

#[test]
fn free_accepts_null() {
    unsafe {
        lm_lemma_report_free(ptr::null_mut());
        lm_solver_free(ptr::null_mut());
        lm_solution_free(ptr::null_mut());
    }
}

#[test]
fn solve_and_read_profile() {
    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { lm_lemma_verify(7, 0.5, 100, &mut rep) }, LmStatus::Ok);
    let mut sum = std::mem::MaybeUninit::<LmLemmaSummary>::uninit();
    unsafe { lm_lemma_report_summary(rep, sum.as_mut_ptr()) };
    let l0 = unsafe { sum.assume_init() }.lambda0;
    unsafe { lm_lemma_report_free(rep) };

    let mut solver = ptr::null_mut();
    assert_eq!(unsafe { lm_solver_new(7, 0.5, 100.0, 512, true, 0, &mut solver) }, LmStatus::Ok);
    let mut sol = ptr::null_mut();
    let st = unsafe { lm_solver_solve(solver, 1e-2, 0.0, 0.5 * l0, 2.0 * l0, 1e-8, &mut sol) };
    assert_eq!(st, LmStatus::Ok, "{}", last_error());
    let mut s = std::mem::MaybeUninit::<LmSolutionSummary>::uninit();
    assert_eq!(unsafe { lm_solution_summary(sol, s.as_mut_ptr()) }, LmStatus::Ok);
    let s = unsafe { s.assume_init() };
    assert!(s.lambda > 0.5 * l0 && s.lambda < 2.0 * l0);
    assert!(s.bifurcation_value.abs() <= 1e-8 * (1e-2 + s.mu));
    assert!(s.positivity_min > 0.0);

    let mut need = 0usize;
    assert_eq!(
        unsafe { lm_solution_profile(sol, ptr::null_mut(), ptr::null_mut(), 0, &mut need) },
        LmStatus::BufferTooSmall
    );
    assert_eq!(need, 512);
    let (mut r, mut z) = (vec![0.0; need], vec![0.0; need]);
    assert_eq!(unsafe { lm_solution_profile(sol, r.as_mut_ptr(), z.as_mut_ptr(), need, &mut need) }, LmStatus::Ok);
    assert!(r.windows(2).all(|w| w[0] < w[1]));
    assert!(z.iter().all(|&v| v > 0.0));
    unsafe {
        lm_solution_free(sol);
        lm_solver_free(solver);
    }
}

#[test]
fn enforced_ball_reports_regime() {
    let mut solver = ptr::null_mut();
    assert_eq!(unsafe { lm_solver_new(3, 0.5, 100.0, 256, false, 0, &mut solver) }, LmStatus::Ok);
    let mut sol = ptr::null_mut();
    let st = unsafe { lm_solver_solve(solver, 0.5, 0.0, 0.1, 10.0, 1e-8, &mut sol) };
    assert_eq!(st, LmStatus::Regime);
    assert!(sol.is_null());
    assert!(last_error().contains("ball"));
    unsafe { lm_solver_free(solver) };
}

#[test]
fn header_is_generated() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/lanemix.h")).unwrap();
    for f in ["lm_hyp2f1", "lm_lemma_verify", "lm_solver_solve", "lm_solution_profile", "lm_last_error"] {
        assert!(h.contains(f), "{f} missing from header");
    }
}

#[test]
fn hyp2f1_positive_argument_is_invalid() {
    let mut v = 0.0;
    assert_eq!(unsafe { lm_hyp2f1(1.0, 1.0, 2.0, 0.4, &mut v) }, LmStatus::InvalidArgument);
}
