//! Bessel functions for integer and half-integer order, their positive
//! zeros, and K₀, K₁, K₂.
//!
//! Integer orders come from the `libm` port of `jn`. Half-integer orders
//! use the elementary closed forms for ν = ±1/2, upward recurrence when
//! x exceeds the order, and normalized downward recurrence otherwise.

use std::f64::consts::PI;

fn order_kind(nu: f64) -> Option<i64> {
    let twice = 2.0 * nu;
    if (twice - twice.round()).abs() > 1e-12 || nu < -0.5 {
        return None;
    }
    Some(twice.round() as i64)
}

/// J_ν(x) for x > 0 and ν ∈ {-1/2, 0, 1/2, 1, ...}.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    let twice = order_kind(nu).unwrap_or_else(|| panic!("unsupported Bessel order {nu}"));
    if twice % 2 == 0 {
        return libm::jn((twice / 2) as i32, x);
    }
    half_integer(twice, x)
}

fn half_integer(twice: i64, x: f64) -> f64 {
    let c = (2.0 / (PI * x)).sqrt();
    let jm = c * x.cos(); // J_{-1/2}
    let jp = c * x.sin(); // J_{1/2}
    let l = (twice - 1) / 2; // nu = l + 1/2, l >= -1
    if l == -1 {
        return jm;
    }
    if l == 0 {
        return jp;
    }
    let nu = l as f64 + 0.5;
    if x >= nu {
        let (mut a, mut b) = (jm, jp);
        let mut mu = 0.5;
        for _ in 0..l {
            let next = 2.0 * mu / x * b - a;
            a = b;
            b = next;
            mu += 1.0;
        }
        return b;
    }
    // Miller recurrence from well above the order, normalized against the
    // closed forms at ν = ±1/2.
    let top = l + 20 + x.ceil() as i64;
    let (mut f_hi, mut f) = (0.0f64, 1e-30f64);
    let mut at_nu = 0.0;
    let mut mu = top as f64 + 0.5;
    let mut idx = top;
    while idx > 0 {
        // f currently holds order mu; step to mu - 1
        let f_lo = 2.0 * mu / x * f - f_hi;
        f_hi = f;
        f = f_lo;
        mu -= 1.0;
        idx -= 1;
        if idx == l {
            at_nu = f;
        }
        if f.abs() > 1e250 {
            f *= 1e-250;
            f_hi *= 1e-250;
            at_nu *= 1e-250;
        }
    }
    // f = order 1/2, f_hi = order 3/2; one more step gives order -1/2.
    let f_half = f;
    let f_mhalf = 2.0 * 0.5 / x * f - f_hi;
    let scale = (jp * f_half + jm * f_mhalf) / (f_half * f_half + f_mhalf * f_mhalf);
    at_nu * scale
}

/// First `count` positive zeros of J_ν, by McMahon's expansion refined with Newton.
pub fn bessel_j_zeros(nu: f64, count: usize) -> Vec<f64> {
    assert!(order_kind(nu).is_some(), "unsupported Bessel order {nu}");
    let mu4 = 4.0 * nu * nu;
    let mut out: Vec<f64> = Vec::with_capacity(count);
    for k in 1..=count {
        let beta = (k as f64 + 0.5 * nu - 0.25) * PI;
        let b8 = 8.0 * beta;
        let mut x = beta - (mu4 - 1.0) / b8 - 4.0 * (mu4 - 1.0) * (7.0 * mu4 - 31.0) / (3.0 * b8.powi(3));
        if let Some(&prev) = out.last() {
            if !(x > prev + 1.0) {
                x = prev + PI;
            }
        } else if x <= 0.0 {
            x = nu + 1.0;
        }
        for _ in 0..60 {
            let j = bessel_j(nu, x);
            let dj = -bessel_j(nu + 1.0, x) + nu / x * j;
            let step = j / dj;
            x -= step;
            if step.abs() <= 1e-15 * x {
                break;
            }
        }
        out.push(x);
    }
    for w in out.windows(2) {
        assert!(w[1] > w[0] + 1.0, "Bessel zero search lost ordering for order {nu}");
    }
    out
}

/// K_ν(x) for ν ∈ {0, 1, 2}, from `∫₀^∞ exp(-x cosh t) cosh(νt) dt`
/// with the trapezoidal rule (geometric convergence for this integrand).
pub fn bessel_k(nu: u32, x: f64) -> f64 {
    assert!(x > 0.0);
    let h: f64 = 0.02;
    let mut sum = 0.5 * (-x).exp();
    let mut t = h;
    loop {
        let e = -x * t.cosh();
        let term = e.exp() * (nu as f64 * t).cosh();
        sum += term;
        if e < -745.0 || (term < 1e-18 * sum && t > 1.0) {
            break;
        }
        t += h;
    }
    sum * h
}
