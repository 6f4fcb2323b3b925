//! Sign certificates for the bifurcation constants A = ∫ log(U) U^{p₁} ψ and
//! B = ⟨U,ψ⟩_s, computed by independent routes, and the scan of
//! H(ρ) = F(−ρ²)ρ^{n−1} − F(−ρ^{−2})ρ^{−3} on (0,1).
//!
//! B is finite only when n + 2s > 4: both U and ψ decay like r^{2−n} and
//! (−Δ)^s U like r^{2−n−2s}, so the pairing integrand behaves like r^{3−n−2s}.
//! Divergent pairs are reported as such rather than truncated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bessel::bessel_k;
use crate::fracop::{calibrate_C, BubbleFracLapForm, FracError, FracLapConvention};
use crate::profiles::{bubble, kernel_psi, log_bubble, nonlinearity_constant, p1};
use crate::quad::{self, Estimate, QuadError, Tol};
use crate::radialgrid::sphere_area;
use crate::specfun::{gamma_signed, hyp2f1, SpecError};

#[derive(Debug, Error)]
pub enum LemmaError {
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("quadrature: {0}")]
    Quad(#[from] QuadError),
    #[error("⟨U,ψ⟩_s diverges for n = {n}, s = {s} (needs n + 2s > 4)")]
    Divergent { n: u32, s: f64 },
    #[error("verification failure: {0}")]
    Verification(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub fn b_is_finite(n: u32, s: f64) -> bool {
    n as f64 + 2.0 * s > 4.0
}

fn tol() -> Tol {
    Tol::new(1e-16, 1e-12).with_max_intervals(4000)
}

/// A = |S^{n−1}| ∫₀^∞ log U · U^{p₁} ψ r^{n−1} dr (adaptive Gauss-Kronrod,
/// the tail mapped onto a finite interval, so no truncation).
pub fn compute_A(n: u32) -> Result<Estimate, LemmaError> {
    if n < 3 {
        return Err(LemmaError::Invalid(format!("n must be >= 3, got {n}")));
    }
    let p = p1(n);
    let f = |r: f64| {
        let up = (-(n as f64 + 2.0) / 2.0 * (r * r).ln_1p()).exp();
        debug_assert!((up - bubble(r, n).powf(p)).abs() <= 1e-12 * up.max(1e-300));
        log_bubble(r, n) * up * kernel_psi(r, n) * r.powi(n as i32 - 1)
    };
    let inner = quad::integrate(f, 0.0, 1.0, tol())?;
    let outer = quad::integrate_to_inf(f, 1.0, tol())?;
    Ok((inner + outer).scale(sphere_area(n)))
}

/// B via Parseval with the closed-form Fourier transforms
/// Û = κ ξ^{−1} K₁(ξ), ψ̂ = κ (K₂(ξ) − (n+2)/(2ξ) K₁(ξ)), κ = (2π)^{n/2} 2^{2−n/2}/Γ(n/2 − 1):
/// B = (2π)^{−n} |S^{n−1}| ∫₀^∞ ξ^{2s+n−1} Û ψ̂ dξ.
pub fn compute_B_spectral(n: u32, s: f64) -> Result<Estimate, LemmaError> {
    check_ns(n, s)?;
    if !b_is_finite(n, s) {
        return Err(LemmaError::Divergent { n, s });
    }
    let nf = n as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let kappa = two_pi.powf(nf / 2.0) * 2f64.powf(2.0 - nf / 2.0) / gamma_signed(nf / 2.0 - 1.0);
    let pre = two_pi.powf(-nf) * sphere_area(n) * kappa * kappa;
    let g = |x: f64| {
        let k1 = bessel_k(1, x);
        let k2 = bessel_k(2, x);
        x.powf(2.0 * s + nf - 2.0) * k1 * (k2 - (nf + 2.0) / (2.0 * x) * k1)
    };
    // (0,1] with ξ = e^{-u}; the integrand decays like e^{-(n+2s-4)u}.
    let q = nf + 2.0 * s - 4.0;
    let u_max = (40.0 / q).min(600.0);
    let near = quad::integrate(
        |u: f64| {
            let x = (-u).exp();
            g(x) * x
        },
        0.0,
        u_max,
        tol(),
    )?;
    let far = quad::integrate_pieces(g, &[1.0, 5.0, 20.0, 60.0], tol())?;
    Ok((near + far).scale(pre))
}

/// Hypergeometric route: (I₁, I₂) and B = |S^{n−1}| C(n,s) (n−2)/2 (I₁ + I₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypergeometricB {
    pub b: f64,
    pub b_err: f64,
    pub i1: f64,
    pub i1_err: f64,
    pub i2: f64,
    pub i2_err: f64,
}

fn check_ns(n: u32, s: f64) -> Result<(), LemmaError> {
    if n < 3 || !(s > 0.0 && s < 1.0) {
        return Err(LemmaError::Invalid(format!("need n >= 3 and s in (0,1), got n={n}, s={s}")));
    }
    Ok(())
}

fn weight(rho: f64, n: u32) -> f64 {
    (1.0 - rho * rho) * (-(n as f64) / 2.0 * (rho * rho).ln_1p()).exp()
}

/// Quiet-NaN wrapper so evaluation failures surface through the quadrature.
fn or_nan(r: Result<f64, SpecError>) -> f64 {
    r.unwrap_or(f64::NAN)
}

pub fn compute_B_hypergeometric(form: &BubbleFracLapForm) -> Result<HypergeometricB, LemmaError> {
    let (n, s) = (form.n, form.s);
    check_ns(n, s)?;
    if !b_is_finite(n, s) {
        return Err(LemmaError::Divergent { n, s });
    }
    let c = form.c()?;
    let p = form.params;
    let i1 = quad::integrate(
        |r: f64| or_nan(hyp2f1(p, -r * r)) * weight(r, n) * r.powi(n as i32 - 1),
        0.0,
        1.0,
        tol(),
    )?;
    // ρ = e^u on (1, ∞); the integrand decays like e^{-(n+2s-4)u}.
    let nf = n as f64;
    let q = nf + 2.0 * s - 4.0;
    let u_max = (40.0 / q).min(340.0);
    let i2 = quad::integrate(
        |u: f64| {
            let e2 = (2.0 * u).exp();
            -or_nan(hyp2f1(p, -e2)) * (2.0 * u).exp_m1() * (1.0 + 1.0 / e2).powf(-nf / 2.0)
        },
        0.0,
        u_max,
        tol(),
    )?;
    let pre = sphere_area(n) * 0.5 * (nf - 2.0);
    let sum = i1.value + i2.value;
    Ok(HypergeometricB {
        b: pre * c * sum,
        b_err: pre * (c * (i1.abs_err + i2.abs_err) + sum.abs() * form.c_ns_err),
        i1: i1.value,
        i1_err: i1.abs_err,
        i2: i2.value,
        i2_err: i2.abs_err,
    })
}

/// H(ρ) = F(−ρ²) ρ^{n−1} − F(−ρ^{−2}) ρ^{−3}.
pub fn h_value(n: u32, s: f64, rho: f64) -> Result<f64, LemmaError> {
    let p = crate::specfun::Hyp2F1Params::bubble(n, s)?;
    Ok(hyp2f1(p, -rho * rho)? * rho.powi(n as i32 - 1) - hyp2f1(p, -1.0 / (rho * rho))? * rho.powi(-3))
}

/// H at `num` Chebyshev points of (0,1).
pub fn H_scan(n: u32, s: f64, num: usize) -> Result<Vec<(f64, f64)>, LemmaError> {
    check_ns(n, s)?;
    if num < 100 {
        return Err(LemmaError::Invalid(format!("H scan needs at least 100 samples, got {num}")));
    }
    (1..=num)
        .map(|k| {
            let th = (k as f64 - 0.5) * std::f64::consts::PI / num as f64;
            let rho = 0.5 * (1.0 - th.cos());
            Ok((rho, h_value(n, s, rho)?))
        })
        .collect()
}

/// ∫₀¹ H(ρ)(1−ρ²)/(1+ρ²)^{n/2} dρ, which equals I₁ + I₂.
pub fn fold_integral(n: u32, s: f64) -> Result<Estimate, LemmaError> {
    check_ns(n, s)?;
    if !b_is_finite(n, s) {
        return Err(LemmaError::Divergent { n, s });
    }
    let p = crate::specfun::Hyp2F1Params::bubble(n, s)?;
    let nf = n as f64;
    let q = nf + 2.0 * s - 4.0;
    let u_max = (40.0 / q).min(340.0);
    // ρ = e^{-u}
    let f = |u: f64| {
        let rho = (-u).exp();
        let h = or_nan(hyp2f1(p, -rho * rho)) * (-(nf - 1.0) * u).exp()
            - or_nan(hyp2f1(p, -(2.0 * u).exp())) * (3.0 * u).exp();
        h * weight(rho, n) * rho
    };
    Ok(quad::integrate(f, 0.0, u_max, tol())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub n: u32,
    pub s: f64,
    /// ∫ log(U) U^{p₁} ψ dx
    pub a: f64,
    pub a_err: f64,
    /// n(n−2)·A, the coefficient of ε in the bifurcation function for f_ε = n(n−2)t^{p_ε}
    pub a_bif: f64,
    pub b_divergent: bool,
    /// ⟨U,ψ⟩_s, spectral route
    pub b: Option<f64>,
    pub b_err: Option<f64>,
    /// ⟨U,ψ⟩_s, hypergeometric route
    pub b_hyp: Option<f64>,
    pub b_hyp_err: Option<f64>,
    /// folded-H route
    pub b_alt: Option<f64>,
    pub b_route_rel_diff: Option<f64>,
    pub c_ns: f64,
    pub c_ns_err: f64,
    pub i1: f64,
    pub i2: Option<f64>,
    pub fold: Option<f64>,
    pub fold_rel_diff: Option<f64>,
    /// −n(n−2)A/B, the root of the leading-order bifurcation function
    pub lambda0: Option<f64>,
    /// −A/B without the nonlinearity constant
    pub lambda0_unnormalized: Option<f64>,
    pub h_samples: usize,
    /// max over samples of H(ρ); negative when the scan passes
    pub h_min_margin: f64,
    pub h_nonnegative_count: usize,
    pub certified: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct LemmaOptions {
    pub h_samples: usize,
    pub route_tol: f64,
    pub fold_tol: f64,
    pub margin: f64,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        Self { h_samples: 1000, route_tol: 1e-6, fold_tol: 1e-8, margin: 10.0 }
    }
}

/// Runs every route for one (n,s) and records which certificates fail.
pub fn verify_pair(n: u32, s: f64, opts: &LemmaOptions) -> Result<LemmaReport, LemmaError> {
    verify_pair_with(n, s, &FracLapConvention::standard(n, s), opts)
}

pub fn verify_pair_with(n: u32, s: f64, conv: &FracLapConvention, opts: &LemmaOptions) -> Result<LemmaReport, LemmaError> {
    check_ns(n, s)?;
    let mut failures = Vec::new();
    let a = compute_A(n)?;
    if !(a.value > opts.margin * a.abs_err) || !(a.value > 0.0) {
        failures.push(format!("A = {:e} not certified positive (error {:e})", a.value, a.abs_err));
    }
    let form = calibrate_C(n, s, conv)?;
    let c = form.c()?;
    let i1 = quad::integrate(
        |r: f64| or_nan(hyp2f1(form.params, -r * r)) * weight(r, n) * r.powi(n as i32 - 1),
        0.0,
        1.0,
        tol(),
    )?;

    let scan = H_scan(n, s, opts.h_samples)?;
    let h_max = scan.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let nonneg = scan.iter().filter(|p| !(p.1 < 0.0)).count();
    if nonneg > 0 {
        failures.push(format!("H(ρ) >= 0 at {nonneg} of {} samples", scan.len()));
    }

    let mut rep = LemmaReport {
        n,
        s,
        a: a.value,
        a_err: a.abs_err,
        a_bif: nonlinearity_constant(n) * a.value,
        b_divergent: !b_is_finite(n, s),
        b: None,
        b_err: None,
        b_hyp: None,
        b_hyp_err: None,
        b_alt: None,
        b_route_rel_diff: None,
        c_ns: c,
        c_ns_err: form.c_ns_err,
        i1: i1.value,
        i2: None,
        fold: None,
        fold_rel_diff: None,
        lambda0: None,
        lambda0_unnormalized: None,
        h_samples: scan.len(),
        h_min_margin: h_max,
        h_nonnegative_count: nonneg,
        certified: false,
        failures: Vec::new(),
    };

    if rep.b_divergent {
        failures.push(format!("⟨U,ψ⟩_s diverges (n + 2s = {} <= 4): B, I₂ and λ₀ are undefined", n as f64 + 2.0 * s));
    } else {
        let bs = compute_B_spectral(n, s)?;
        let bh = compute_B_hypergeometric(&form)?;
        let fold = fold_integral(n, s)?;
        let pre = sphere_area(n) * 0.5 * (n as f64 - 2.0) * c;
        rep.b = Some(bs.value);
        rep.b_err = Some(bs.abs_err);
        rep.b_hyp = Some(bh.b);
        rep.b_hyp_err = Some(bh.b_err);
        rep.b_alt = Some(pre * fold.value);
        rep.i2 = Some(bh.i2);
        rep.fold = Some(fold.value);
        let rd = (bs.value - bh.b).abs() / bs.value.abs();
        rep.b_route_rel_diff = Some(rd);
        let sum = bh.i1 + bh.i2;
        let fd = (sum - fold.value).abs() / fold.value.abs();
        rep.fold_rel_diff = Some(fd);
        for (name, v, e) in [("spectral", bs.value, bs.abs_err), ("hypergeometric", bh.b, bh.b_err)] {
            if !(v < -opts.margin * e) {
                failures.push(format!("B ({name}) = {v:e} not certified negative (error {e:e})"));
            }
        }
        if !(rd <= opts.route_tol) {
            failures.push(format!("B routes differ by {rd:e} (tolerance {:e})", opts.route_tol));
        }
        if !(fd <= opts.fold_tol) {
            failures.push(format!("fold identity off by {fd:e} (tolerance {:e})", opts.fold_tol));
        }
        if (bs.value < 0.0) != (sum < 0.0) {
            failures.push("sign(B) differs from sign(I₁ + I₂)".into());
        }
        if !(bh.i1 > 0.0 && bh.i2 < 0.0) {
            failures.push(format!("expected I₁ > 0 > I₂, got {:e}, {:e}", bh.i1, bh.i2));
        }
        let l0 = -rep.a_bif / bs.value;
        rep.lambda0 = Some(l0);
        rep.lambda0_unnormalized = Some(-a.value / bs.value);
        if !(l0 > 0.0) {
            failures.push(format!("λ₀ = {l0:e} is not positive"));
        }
    }
    rep.certified = failures.is_empty();
    rep.failures = failures;
    Ok(rep)
}

/// λ₀ from a certified report.
pub fn lambda0(report: &LemmaReport) -> Result<f64, LemmaError> {
    match report.lambda0 {
        Some(l) if report.certified && l > 0.0 => Ok(l),
        _ => Err(LemmaError::Verification(format!(
            "report for n={}, s={} is not certified: {}",
            report.n,
            report.s,
            report.failures.join("; ")
        ))),
    }
}

/// Verifies every pair of `ns × ss` concurrently; order follows the input.
pub fn verify_matrix(ns: &[u32], ss: &[f64], opts: &LemmaOptions) -> Vec<Result<LemmaReport, LemmaError>> {
    let pairs: Vec<(u32, f64)> = ns.iter().flat_map(|&n| ss.iter().map(move |&s| (n, s))).collect();
    pairs.par_iter().map(|&(n, s)| verify_pair(n, s, opts)).collect()
}

pub const DEFAULT_N: [u32; 4] = [3, 4, 5, 6];
pub const DEFAULT_S: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];
