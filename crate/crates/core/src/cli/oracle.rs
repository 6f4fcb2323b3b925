//! Cross-route agreement table behind `lanemix oracle-check`.

use rayon::prelude::*;
use serde::Serialize;

use crate::fracop::{
    calibrate_C, fraclap_bubble_closed, fraclap_multiplier_route, fraclap_singular_oracle, inner_s, inner_s_oracle,
    FracLapConvention,
};
use crate::profiles::bubble;
use crate::quad::Tol;
use crate::radialgrid::{make_grid, RadialField};
use crate::specfun::{hyp2f1, hyp2f1_euler, Hyp2F1Params};

use super::config::Tolerances;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub case: String,
    pub primary: f64,
    pub oracle: f64,
    pub rel_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    fn new(check: &'static str, case: String, primary: f64, oracle: f64, tolerance: f64) -> Self {
        let rel_diff = (primary - oracle).abs() / oracle.abs().max(f64::MIN_POSITIVE);
        Self { check, case, primary, oracle, rel_diff, tolerance, pass: rel_diff <= tolerance }
    }

    fn failed(check: &'static str, case: String, tolerance: f64, why: String) -> Self {
        Self { check, case: format!("{case}: {why}"), primary: f64::NAN, oracle: f64::NAN, rel_diff: f64::INFINITY, tolerance, pass: false }
    }
}

pub const FRACLAP_PAIRS: [(u32, f64); 9] =
    [(3, 0.25), (3, 0.5), (3, 0.75), (4, 0.25), (4, 0.5), (4, 0.75), (5, 0.25), (5, 0.5), (5, 0.75)];
pub const FRACLAP_RADII: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 5.0];

/// Series/connection evaluation against the Euler integral.
pub fn hypergeometric_rows(tol: f64) -> Vec<CheckRow> {
    let zs = [-0.3, -0.9, -1.5, -4.0, -40.0, -400.0];
    let mut rows = Vec::new();
    for &(n, s) in &FRACLAP_PAIRS {
        let p = Hyp2F1Params::bubble(n, s).expect("bubble parameters are valid");
        for &z in &zs {
            let case = format!("n={n} s={s} z={z}");
            rows.push(match (hyp2f1(p, z), hyp2f1_euler(p, z)) {
                (Ok(a), Ok(b)) => CheckRow::new("2F1 vs Euler integral", case, a, b, tol),
                (Err(e), _) | (_, Err(e)) => CheckRow::failed("2F1 vs Euler integral", case, tol, e.to_string()),
            });
        }
    }
    rows
}

/// C(n,s)·₂F₁ against the singular integral at the radii of [`FRACLAP_RADII`].
pub fn fraclap_rows(pairs: &[(u32, f64)], radii: &[f64], tol: f64, convention_scale: f64) -> Vec<CheckRow> {
    pairs
        .par_iter()
        .flat_map_iter(|&(n, s)| {
            let mut conv = FracLapConvention::standard(n, s);
            conv.c_singular *= convention_scale;
            let form = calibrate_C(n, s, &conv);
            radii
                .iter()
                .map(|&r| {
                    let case = format!("n={n} s={s} r={r}");
                    let form = match &form {
                        Ok(f) => f,
                        Err(e) => return CheckRow::failed("(−Δ)^s U closed vs singular", case, tol, e.to_string()),
                    };
                    let closed = fraclap_bubble_closed(r, form);
                    let oracle = fraclap_singular_oracle(&|x| bubble(x, n), r, n, s, &conv, Tol::new(1e-14, 1e-10));
                    match (closed, oracle) {
                        (Ok(a), Ok(b)) => CheckRow::new("(−Δ)^s U closed vs singular", case, a, b.value, tol),
                        (Err(e), _) => CheckRow::failed("(−Δ)^s U closed vs singular", case, tol, e.to_string()),
                        (_, Err(e)) => CheckRow::failed("(−Δ)^s U closed vs singular", case, tol, e.to_string()),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Multiplier |ξ|^{2s} against the singular integral for the Gaussian e^{−r²}.
pub fn convention_rows(tol: f64, convention_scale: f64) -> Vec<CheckRow> {
    let pairs = [(3u32, 0.5), (4, 0.25), (5, 0.75)];
    let radii = [0.0, 0.5, 1.0, 2.0, 3.0];
    pairs
        .par_iter()
        .flat_map_iter(|&(n, s)| {
            let mut conv = FracLapConvention::standard(n, s);
            conv.c_singular *= convention_scale;
            let pi_n = std::f64::consts::PI.powf(n as f64 / 2.0);
            radii
                .iter()
                .map(|&r| {
                    let case = format!("n={n} s={s} r={r}");
                    let m = fraclap_multiplier_route(&|x| pi_n * (-x * x / 4.0).exp(), r, n, s, 60.0, Tol::new(1e-15, 1e-12));
                    let o = fraclap_singular_oracle(&|x| (-x * x).exp(), r, n, s, &conv, Tol::new(1e-14, 1e-10));
                    match (m, o) {
                        (Ok(a), Ok(b)) => CheckRow::new("Gaussian multiplier vs singular", case, a.value, b.value, tol),
                        (Err(e), _) | (_, Err(e)) => {
                            CheckRow::failed("Gaussian multiplier vs singular", case, tol, e.to_string())
                        }
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Grid ⟨u,v⟩_s on a 64-node grid against the oracle `∫ v (−Δ)^s u`.
pub fn gagliardo_rows(tol: f64, convention_scale: f64) -> Vec<CheckRow> {
    let cases = [(3u32, 0.5), (4, 0.25)];
    cases
        .par_iter()
        .map(|&(n, s)| {
            let case = format!("n={n} s={s} u=exp(-r²) v=exp(-2r²)");
            let mut conv = FracLapConvention::standard(n, s);
            conv.c_singular *= convention_scale;
            let run = || -> Result<(f64, f64), String> {
                let g = make_grid(n, 12.0, 64).map_err(|e| e.to_string())?;
                let u = RadialField::from_fn(&g, |r| (-r * r).exp(), f64::INFINITY).map_err(|e| e.to_string())?;
                let v = RadialField::from_fn(&g, |r| (-2.0 * r * r).exp(), f64::INFINITY).map_err(|e| e.to_string())?;
                let grid_val = inner_s(&u, &v, s).map_err(|e| e.to_string())?;
                let o = inner_s_oracle(&|r| (-r * r).exp(), &|r| (-2.0 * r * r).exp(), n, s, 6.0, &conv, Tol::new(1e-13, 1e-10))
                    .map_err(|e| e.to_string())?;
                Ok((grid_val, o.value))
            };
            match run() {
                Ok((a, b)) => CheckRow::new("grid ⟨u,v⟩_s vs oracle", case, a, b, tol),
                Err(e) => CheckRow::failed("grid ⟨u,v⟩_s vs oracle", case, tol, e),
            }
        })
        .collect()
}

pub fn all_rows(tol: &Tolerances, convention_scale: f64) -> Vec<CheckRow> {
    let mut rows = hypergeometric_rows(tol.hypergeometric);
    rows.extend(fraclap_rows(&FRACLAP_PAIRS, &FRACLAP_RADII, tol.fraclap, convention_scale));
    rows.extend(convention_rows(tol.convention, convention_scale));
    rows.extend(gagliardo_rows(tol.convention, convention_scale));
    rows
}
