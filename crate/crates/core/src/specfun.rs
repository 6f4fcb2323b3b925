//! Gamma-family functions and the Gauss hypergeometric function on the
//! negative real axis.
//!
//! `hyp2f1` evaluates the defining series for `z ∈ [-1/2, 0]`. For
//! `z < -1/2` it applies the Pfaff transformation that leaves a
//! non-negative `c - a - b`; the transformed argument `x = z/(z-1)` lies in
//! `(1/3, 1)`. When `x ≤ 1/2` the series in `x` is summed directly,
//! otherwise the `x → 1 - x` connection formula is used, including the
//! logarithmic form when `c - a - b` is an integer (always the case for the
//! bubble triple, where `a - b = 1`).

use std::num::NonZeroUsize;

use gauss_quad::GaussJacobi;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_SERIES_TERMS: usize = 10_000;
pub const SERIES_RATIO_STOP: f64 = 1e-16;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpecError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge after {terms} terms (partial value {partial})")]
    Accuracy { partial: f64, terms: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64, SpecError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecError::Domain(format!("gamma_fn needs a positive finite argument, got {x}")));
    }
    Ok(libm::tgamma(x))
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Γ(x) on the whole real line away from the poles.
pub(crate) fn gamma_signed(x: f64) -> f64 {
    libm::tgamma(x)
}

/// 1/Γ(x), which vanishes at the poles of Γ.
pub(crate) fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / libm::tgamma(x)
    }
}

pub fn ln_gamma(x: f64) -> Result<f64, SpecError> {
    if !(x > 0.0) {
        return Err(SpecError::Domain(format!("ln_gamma needs x > 0, got {x}")));
    }
    Ok(libm::lgamma(x))
}

pub fn beta_fn(a: f64, b: f64) -> Result<f64, SpecError> {
    Ok((ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?).exp())
}

/// Digamma ψ(x) = Γ'(x)/Γ(x) for x not a non-positive integer.
pub fn digamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return f64::NAN;
    }
    if x < 0.5 {
        return digamma(1.0 - x) - std::f64::consts::PI / (std::f64::consts::PI * x).tan();
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let y2 = 1.0 / (y * y);
    let tail = y2
        * (1.0 / 12.0
            - y2 * (1.0 / 120.0
                - y2 * (1.0 / 252.0 - y2 * (1.0 / 240.0 - y2 * (1.0 / 132.0 - y2 * (691.0 / 32760.0 - y2 / 12.0))))));
    acc + y.ln() - 0.5 / y - tail
}

/// Parameters `(a, b, c)` of ₂F₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyp2F1Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Hyp2F1Params {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, SpecError> {
        let p = Self { a, b, c };
        p.validate()?;
        Ok(p)
    }

    /// The triple `((n+2s)/2, (n-2(1-s))/2, n/2)` attached to (−Δ)^s of the bubble.
    pub fn bubble(n: u32, s: f64) -> Result<Self, SpecError> {
        if n < 3 || !(s > 0.0 && s < 1.0) {
            return Err(SpecError::Domain(format!("bubble triple needs n >= 3 and s in (0,1), got n={n}, s={s}")));
        }
        let nf = n as f64;
        Self::new((nf + 2.0 * s) / 2.0, (nf - 2.0 * (1.0 - s)) / 2.0, nf / 2.0)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(SpecError::Domain("hypergeometric parameters must be finite".into()));
        }
        if is_nonpositive_integer(self.c) {
            return Err(SpecError::Domain(format!("c = {} is zero or a negative integer", self.c)));
        }
        Ok(())
    }
}

/// The defining power series, valid for |z| < 1.
pub fn hyp2f1_series(p: Hyp2F1Params, z: f64) -> Result<f64, SpecError> {
    p.validate()?;
    if !(z.abs() < 1.0) {
        return Err(SpecError::Domain(format!("series route needs |z| < 1, got {z}")));
    }
    series(p.a, p.b, p.c, z)
}

fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64, SpecError> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut small = 0;
    for k in 0..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        if term == 0.0 {
            return Ok(sum);
        }
        sum += term;
        if term.abs() <= SERIES_RATIO_STOP * sum.abs() {
            small += 1;
            if small >= 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(SpecError::Accuracy { partial: sum, terms: MAX_SERIES_TERMS })
}

/// ₂F₁(a,b;c;z) for z ≤ 0.
pub fn hyp2f1(p: Hyp2F1Params, z: f64) -> Result<f64, SpecError> {
    p.validate()?;
    if !z.is_finite() || z > 0.0 {
        return Err(SpecError::Domain(format!("hyp2f1 is implemented for finite z <= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let Hyp2F1Params { a, b, c } = p;
    if z >= -0.5 {
        return series(a, b, c, z);
    }
    let x = z / (z - 1.0);
    let w = 1.0 / (1.0 - z);
    let (pre, aa, bb) = if a >= b { (w.powf(b), c - a, b) } else { (w.powf(a), a, c - b) };
    if x <= 0.5 {
        return Ok(pre * series(aa, bb, c, x)?);
    }
    Ok(pre * near_one(aa, bb, c, w)?)
}

/// ₂F₁(A,B;C;1-w) for w ∈ (0, 1/2], assuming C - A - B ≥ 0.
fn near_one(aa: f64, bb: f64, cc: f64, w: f64) -> Result<f64, SpecError> {
    if is_nonpositive_integer(aa) || is_nonpositive_integer(bb) {
        return series(aa, bb, cc, 1.0 - w);
    }
    let m = cc - aa - bb;
    let mr = m.round();
    if (m - mr).abs() < 1e-9 {
        return near_one_log(aa, bb, mr as usize, w);
    }
    if (m - mr).abs() < 1e-5 {
        return Err(SpecError::Domain(format!("c - a - b = {m} is too close to an integer for the connection formula")));
    }
    let g = gamma_signed(cc);
    let t1 = g * gamma_signed(m) * rgamma(cc - aa) * rgamma(cc - bb) * series(aa, bb, 1.0 - m, w)?;
    let t2 = w.powf(m) * g * gamma_signed(-m) * rgamma(aa) * rgamma(bb) * series(cc - aa, cc - bb, 1.0 + m, w)?;
    Ok(t1 + t2)
}

/// Logarithmic connection formula for C = A + B + m with integer m ≥ 0.
fn near_one_log(aa: f64, bb: f64, m: usize, w: f64) -> Result<f64, SpecError> {
    let cc = aa + bb + m as f64;
    let gc = gamma_signed(cc);
    let mut finite = 0.0;
    if m > 0 {
        let pre = gamma_signed(m as f64) * gc * rgamma(aa + m as f64) * rgamma(bb + m as f64);
        let mut t = 1.0;
        for k in 0..m {
            finite += t;
            let kf = k as f64;
            t *= (aa + kf) * (bb + kf) / ((kf + 1.0) * (1.0 - m as f64 + kf)) * w;
        }
        finite *= pre;
    }
    let mf = m as f64;
    let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
    let pre = sign * gc * rgamma(aa) * rgamma(bb) * w.powi(m as i32);
    let lnw = w.ln();
    let mut t = rgamma(mf + 1.0);
    let (mut p1, mut p2) = (digamma(1.0), digamma(mf + 1.0));
    let (mut pa, mut pb) = (digamma(aa + mf), digamma(bb + mf));
    let mut sum = 0.0;
    let mut small = 0;
    for k in 0..MAX_SERIES_TERMS {
        let term = t * (lnw - p1 - p2 + pa + pb);
        sum += term;
        if term.abs() <= SERIES_RATIO_STOP * sum.abs() {
            small += 1;
            if small >= 2 {
                return Ok(finite + pre * sum);
            }
        } else {
            small = 0;
        }
        let kf = k as f64;
        t *= (aa + mf + kf) * (bb + mf + kf) / ((kf + 1.0) * (kf + mf + 1.0)) * w;
        p1 += 1.0 / (kf + 1.0);
        p2 += 1.0 / (kf + mf + 1.0);
        pa += 1.0 / (aa + mf + kf);
        pb += 1.0 / (bb + mf + kf);
    }
    Err(SpecError::Accuracy { partial: finite + pre * sum, terms: MAX_SERIES_TERMS })
}

/// Euler-integral route,
/// `Γ(c)/(Γ(b)Γ(c-b)) ∫₀¹ t^{b-1}(1-t)^{c-b-1}(1-zt)^{-a} dt`,
/// by Gauss-Jacobi quadrature carrying both endpoint exponents.
/// Requires `c > b > 0`; intended for moderate `|z|` (a cross-check route).
pub fn hyp2f1_euler(p: Hyp2F1Params, z: f64) -> Result<f64, SpecError> {
    p.validate()?;
    let Hyp2F1Params { a, b, c } = p;
    if !(c > b && b > 0.0) {
        return Err(SpecError::Domain(format!("Euler route needs c > b > 0, got b={b}, c={c}")));
    }
    if !z.is_finite() || z > 0.0 {
        return Err(SpecError::Domain(format!("Euler route is implemented for z <= 0, got {z}")));
    }
    let alpha = c - b - 1.0;
    let beta = b - 1.0;
    // Convergence is set by the pole of (1 - zt)^{-a} at distance 1/|z| from t = 0.
    let deg = (48.0 + 9.0 * z.abs().sqrt()).min(600.0) as usize;
    let deg = deg + deg % 2;
    let rule = GaussJacobi::new(
        NonZeroUsize::new(deg).expect("positive degree"),
        alpha.try_into().map_err(|_| SpecError::Domain("Jacobi exponent must exceed -1".into()))?,
        beta.try_into().map_err(|_| SpecError::Domain("Jacobi exponent must exceed -1".into()))?,
    );
    let mut sum = 0.0;
    for &(x, wgt) in rule.as_node_weight_pairs() {
        let t = 0.5 * (1.0 + x);
        sum += wgt * (1.0 - z * t).powf(-a);
    }
    let scale = 2f64.powf(-(alpha + beta + 1.0));
    let pre = (ln_gamma(c)? - ln_gamma(b)? - ln_gamma(c - b)?).exp();
    Ok(pre * scale * sum)
}

/// `((ρ²+t)/(1+ρ²t))^{(n+2s)/2} ρ^{2(1-s)} - 1`, strictly negative on the open unit square.
pub fn euler_integrand_bracket(rho: f64, t: f64, n: u32, s: f64) -> Result<f64, SpecError> {
    if !(rho > 0.0 && rho < 1.0 && t > 0.0 && t < 1.0) {
        return Err(SpecError::Domain(format!("bracket needs rho, t in (0,1), got rho={rho}, t={t}")));
    }
    if n < 3 || !(s > 0.0 && s < 1.0) {
        return Err(SpecError::Domain(format!("bracket needs n >= 3, s in (0,1), got n={n}, s={s}")));
    }
    let r2 = rho * rho;
    let g = 0.5 * (n as f64 + 2.0 * s) * ((r2 + t) / (1.0 + r2 * t)).ln() + 2.0 * (1.0 - s) * rho.ln();
    let v = g.exp_m1();
    if !(v < 0.0) {
        return Err(SpecError::Invariant(format!("bracket is {v} >= 0 at rho={rho}, t={t}, n={n}, s={s}")));
    }
    Ok(v)
}
