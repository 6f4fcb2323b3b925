use lanemix::profiles::*;
use proptest::prelude::*;

/// Radial Laplacian u'' + (n−1)u'/r by central differences.
fn radial_laplacian(f: impl Fn(f64) -> f64, r: f64, n: u32) -> f64 {
    let h = 1e-4 * r.max(0.1);
    let (a, b, c) = (f(r - h), f(r), f(r + h));
    (a - 2.0 * b + c) / (h * h) + (n as f64 - 1.0) * (c - a) / (2.0 * h * r)
}

proptest! {
    #[test]
    fn bubble_solves_critical_equation(n in 3u32..=8, r in 0.05f64..20.0) {
        let lap = radial_laplacian(|x| bubble(x, n), r, n);
        let rhs = f0(bubble(r, n), n);
        // the two Laplacian terms nearly cancel in the far field; compare on their scale U/r²
        let scale = bubble(r, n) / (r * r).max(1.0);
        prop_assert!((lap + rhs).abs() <= 1e-5 * scale, "n={} r={}: {} vs {}", n, r, -lap, rhs);
    }

    #[test]
    fn psi_is_dilation_derivative(n in 3u32..=8, r in 0.0f64..20.0) {
        let h = 1e-5;
        let d = (talenti_dilation(r, 1.0 + h, n).unwrap() - talenti_dilation(r, 1.0 - h, n).unwrap()) / (2.0 * h);
        let psi = kernel_psi(r, n);
        prop_assert!((d - psi).abs() <= 1e-8 * bubble(r, n), "{} vs {}", d, psi);
    }

    #[test]
    fn psi_solves_linearized_equation(n in 3u32..=8, r in 0.05f64..20.0) {
        let lap = radial_laplacian(|x| kernel_psi(x, n), r, n);
        let rhs = f0_prime_of_bubble(r, n) * kernel_psi(r, n);
        let scale = bubble(r, n) / (r * r).max(1.0);
        prop_assert!((lap + rhs).abs() <= 1e-5 * scale, "{} vs {}", -lap, rhs);
    }

    #[test]
    fn log_bubble_is_log(n in 3u32..=8, r in 0.0f64..1e3) {
        prop_assert!((log_bubble(r, n) - bubble(r, n).ln()).abs() <= 1e-12 * log_bubble(r, n).abs().max(1.0));
    }

    #[test]
    fn f0_prime_matches_power(n in 3u32..=8, r in 0.0f64..50.0) {
        let u = bubble(r, n);
        let nf = n as f64;
        let direct = nf * (nf - 2.0) * p1(n) * u.powf(p1(n) - 1.0);
        prop_assert!((f0_prime_of_bubble(r, n) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn scaled_bubble_preserves_critical_norm(n in 3u32..=6, delta in 0.05f64..5.0, r in 0.0f64..10.0) {
        // δ^{(n−2)/2} U(r/δ) at δ equals the dilation with λ = 1/δ
        let a = bubble_scaled(r, delta, n).unwrap();
        let b = talenti_dilation(r, 1.0 / delta, n).unwrap() * delta.powf(n as f64 - 2.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn on_ray_keeps_mu(n in 3u32..=7, s in 0.05f64..0.95, eps in 1e-4f64..0.3, lam in 0.01f64..10.0) {
        prop_assume!(eps < 4.0 / (n as f64 - 2.0));
        let p = ModelParams::on_ray(n, s, eps, lam, 0.9).unwrap();
        prop_assert_eq!(p.mu(), lam * eps);
        let back = p.delta.powf(2.0 * (1.0 - s));
        prop_assert!((back - p.mu()).abs() <= 1e-12 * p.mu());
        prop_assert!((p.ball_radius() - (eps + p.mu()).powf(0.9)).abs() <= 1e-15);
    }

    #[test]
    fn g_is_f_plus_mass(t in 0.0f64..3.0, eps in 0.0f64..0.5, delta in 0.0f64..0.5) {
        let p = ModelParams::new(4, 0.5, eps, delta, 0.8).unwrap();
        prop_assert!((g_eps_delta(t, &p) - f_eps(t, &p) - p.mu() * t).abs() <= 1e-14 * (1.0 + g_eps_delta(t, &p)));
        let h = 1e-6;
        let fd = (g_eps_delta(t + h + 0.1, &p) - g_eps_delta(t - h + 0.1, &p)) / (2.0 * h);
        prop_assert!((g_prime(t + 0.1, &p) - fd).abs() <= 1e-6 * fd.abs().max(1.0));
    }
}

#[test]
fn nonlinearity_vanishes_for_negative_argument() {
    let p = ModelParams::new(3, 0.5, 0.1, 0.0, 0.5).unwrap();
    assert_eq!(f_eps(-0.3, &p), 0.0);
    assert_eq!(f_eps_prime(-0.3, &p), 0.0);
    assert_eq!(f0(-1.0, 3), 0.0);
}

#[test]
fn parameter_domain() {
    assert!(ModelParams::new(2, 0.5, 0.0, 0.0, 0.5).is_err());
    assert!(ModelParams::new(3, 0.0, 0.0, 0.0, 0.5).is_err());
    assert!(ModelParams::new(3, 1.0, 0.0, 0.0, 0.5).is_err());
    assert!(ModelParams::new(3, 0.5, -1e-3, 0.0, 0.5).is_err());
    // ε must stay below 4/(n−2)
    assert!(ModelParams::new(4, 0.5, 2.0, 0.0, 0.9).is_err());
    assert!(ModelParams::new(4, 0.5, 1.9, 0.0, 0.95).is_ok());
    // α must exceed 1/p_ε
    assert!(ModelParams::new(3, 0.5, 0.0, 0.0, 0.19).is_err());
    assert!(ModelParams::new(3, 0.5, 0.0, 0.0, 0.21).is_ok());
    assert!(ModelParams::on_ray(3, 0.5, 0.1, -1.0, 0.5).is_err());
    assert!(bubble_scaled(1.0, 0.0, 3).is_err());
}

#[test]
fn default_alpha_is_admissible() {
    for n in 3..=10 {
        let a = default_alpha(n);
        assert!(a > 1.0 / p1(n) && a < 1.0);
    }
}

#[test]
fn bubble_normalization() {
    assert_eq!(bubble(0.0, 5), 1.0);
    assert_eq!(kernel_psi(1.0, 5), 0.0);
    assert_eq!(kernel_psi(0.0, 4), 1.0);
    assert!((bubble(1.0, 4) - 0.5).abs() < 1e-16);
}
