use lanemix::lemma_verify::*;
use lanemix::profiles::{bubble, kernel_psi, log_bubble, p1};
use lanemix::radialgrid::sphere_area;
use lanemix::specfun::{hyp2f1, Hyp2F1Params};
use quadrature::double_exponential::integrate;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// ∫₀^∞ f by tanh-sinh on [0,1], [1,4] and, through r = 4t^{−m}, on [4,∞).
/// For f ~ r^{−1−κ} the tail integrand behaves like t^{mκ−1}; m = 2/κ makes it smooth.
fn half_line(f: impl Fn(f64) -> f64, m: f64, tol: f64) -> f64 {
    let tail = |t: f64| if t <= 0.0 { 0.0 } else { 4.0 * m * t.powf(-m - 1.0) * f(4.0 * t.powf(-m)) };
    integrate(&f, 0.0, 1.0, tol).integral + integrate(&f, 1.0, 4.0, tol).integral + integrate(tail, 0.0, 1.0, tol).integral
}

fn a_oracle(n: u32) -> f64 {
    let f = |r: f64| log_bubble(r, n) * bubble(r, n).powf(p1(n)) * kernel_psi(r, n) * r.powi(n as i32 - 1);
    sphere_area(n) * half_line(f, 1.0, 1e-14)
}

fn analytic_c(n: u32, s: f64) -> f64 {
    let h = n as f64 / 2.0;
    4f64.powf(s) * libm::tgamma(h - 1.0 + s) * libm::tgamma(h + s) / (libm::tgamma(h - 1.0) * libm::tgamma(h))
}

/// ⟨U,ψ⟩_s = ∫ ψ (−Δ)^s U with the closed form C·₂F₁(−r²) and the Gamma-ratio constant.
fn b_oracle(n: u32, s: f64) -> f64 {
    let p = Hyp2F1Params::bubble(n, s).unwrap();
    let c = analytic_c(n, s);
    let f = |r: f64| {
        if !r.is_finite() {
            return 0.0;
        }
        kernel_psi(r, n) * c * hyp2f1(p, -r * r).unwrap() * r.powi(n as i32 - 1)
    };
    // ψ·(−Δ)^s U·r^{n−1} ~ r^{3−n−2s}
    sphere_area(n) * half_line(f, 2.0 / (n as f64 + 2.0 * s - 4.0), 1e-13)
}

#[test]
fn a_matches_tanh_sinh() {
    for n in 3..=7 {
        let a = compute_A(n).unwrap();
        let o = a_oracle(n);
        assert!(rel(a.value, o) < 1e-8, "n={n}: {} vs {o}", a.value);
        assert!(a.value > 0.0 && a.abs_err < 1e-10 * a.value);
    }
}

#[test]
fn b_matches_closed_form_quadrature() {
    for (n, s) in [(3, 0.75), (4, 0.1), (4, 0.5), (5, 0.25), (6, 0.9)] {
        let b = compute_B_spectral(n, s).unwrap();
        let o = b_oracle(n, s);
        assert!(rel(b.value, o) < 1e-7, "n={n} s={s}: {} vs {o}", b.value);
    }
}

#[test]
fn default_matrix_certifies_every_convergent_pair() {
    let reports = verify_matrix(&DEFAULT_N, &DEFAULT_S, &LemmaOptions::default());
    assert_eq!(reports.len(), 20);
    for rep in reports {
        let rep = rep.unwrap();
        let expected = b_is_finite(rep.n, rep.s);
        assert_eq!(rep.certified, expected, "n={} s={}: {:?}", rep.n, rep.s, rep.failures);
        assert!(rep.a > 0.0);
        assert!(rep.h_min_margin < 0.0 && rep.h_nonnegative_count == 0);
        if expected {
            let b = rep.b.unwrap();
            assert!(b < 0.0);
            assert!(rep.b_err.unwrap() * 10.0 <= b.abs());
            assert!(rep.b_route_rel_diff.unwrap() <= 1e-6);
            assert!(rep.fold_rel_diff.unwrap() <= 1e-8);
            let l0 = lambda0(&rep).unwrap();
            assert!(l0 > 0.0);
            assert!(rel(l0, -rep.a_bif / b) < 1e-15);
            assert!(rel(rep.a_bif, (rep.n * (rep.n - 2)) as f64 * rep.a) < 1e-15);
        } else {
            assert!(rep.b_divergent && rep.b.is_none() && rep.lambda0.is_none());
            assert!(lambda0(&rep).is_err());
        }
    }
}

#[test]
fn divergence_boundary() {
    assert!(!b_is_finite(3, 0.5));
    assert!(b_is_finite(3, 0.51));
    assert!(b_is_finite(4, 0.01));
    assert!(matches!(compute_B_spectral(3, 0.25), Err(LemmaError::Divergent { .. })));
}

#[test]
fn fold_matches_split_integrals() {
    let rep = verify_pair(5, 0.75, &LemmaOptions::default()).unwrap();
    let fold = fold_integral(5, 0.75).unwrap();
    assert!(rel(rep.i1 + rep.i2.unwrap(), fold.value) < 1e-8);
}

#[test]
fn h_scan_is_negative() {
    for (n, s) in [(3, 0.1), (4, 0.9), (6, 0.5)] {
        let scan = H_scan(n, s, 1000).unwrap();
        assert_eq!(scan.len(), 1000);
        assert!(scan.iter().all(|&(rho, h)| rho > 0.0 && rho < 1.0 && h < 0.0));
        assert_eq!(h_value(n, s, scan[10].0).unwrap(), scan[10].1);
    }
    assert!(H_scan(4, 0.5, 10).is_err());
}

#[test]
fn hypergeometric_route_parts() {
    let form = lanemix::fracop::calibrate_C(4, 0.5, &lanemix::fracop::FracLapConvention::standard(4, 0.5)).unwrap();
    let hb = compute_B_hypergeometric(&form).unwrap();
    let pre = sphere_area(4) * form.c().unwrap();
    assert!((hb.b - pre * (hb.i1 + hb.i2)).abs() <= 1e-14 * hb.b.abs());
    assert!(hb.i1 > 0.0 && hb.i2 < 0.0);
    assert!(rel(hb.b, b_oracle(4, 0.5)) < 1e-7);
}

#[test]
fn rejects_bad_pairs() {
    assert!(matches!(verify_pair(2, 0.5, &LemmaOptions::default()), Err(LemmaError::Invalid(_))));
    assert!(matches!(verify_pair(4, 1.0, &LemmaOptions::default()), Err(LemmaError::Invalid(_))));
}

#[test]
fn reports_are_deterministic() {
    let a = serde_json::to_string(&verify_pair(4, 0.25, &LemmaOptions::default()).unwrap()).unwrap();
    let b = serde_json::to_string(&verify_pair(4, 0.25, &LemmaOptions::default()).unwrap()).unwrap();
    assert_eq!(a, b);
}
