//! Bubble profile, kernel function and nonlinearities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParamError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Model parameters. `mu = delta^{2(1-s)}` is derived on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: u32,
    pub s: f64,
    pub eps: f64,
    pub delta: f64,
    pub alpha: f64,
    mu: f64,
}

impl ModelParams {
    pub fn new(n: u32, s: f64, eps: f64, delta: f64, alpha: f64) -> Result<Self, ParamError> {
        let bad = |m: String| Err(ParamError::Invalid(m));
        if n < 3 {
            return bad(format!("dimension n must be >= 3, got {n}"));
        }
        if !(s > 0.0 && s < 1.0) {
            return bad(format!("s must lie in (0,1), got {s}"));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return bad(format!("eps must be finite and >= 0, got {eps}"));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return bad(format!("delta must be finite and >= 0, got {delta}"));
        }
        let p1 = p1(n);
        if !(p1 - eps > 1.0) {
            return bad(format!("eps must be below 4/(n-2) = {}, got {eps}", p1 - 1.0));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return bad(format!("alpha must lie in (0,1), got {alpha}"));
        }
        if !(alpha > 1.0 / (p1 - eps)) {
            return bad(format!("alpha must exceed 1/p_eps = {}, got {alpha}", 1.0 / (p1 - eps)));
        }
        let mu = delta.powf(2.0 * (1.0 - s));
        Ok(Self { n, s, eps, delta, alpha, mu })
    }

    /// Parameters on the ray `mu = lambda * eps`, i.e. `delta = (lambda eps)^{1/(2(1-s))}`.
    pub fn on_ray(n: u32, s: f64, eps: f64, lambda: f64, alpha: f64) -> Result<Self, ParamError> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(ParamError::Invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let delta = (lambda * eps).powf(1.0 / (2.0 * (1.0 - s)));
        let mut p = Self::new(n, s, eps, delta, alpha)?;
        // Keep mu exactly lambda*eps rather than the round trip through delta.
        p.mu = lambda * eps;
        Ok(p)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn p1(&self) -> f64 {
        p1(self.n)
    }

    pub fn p_eps(&self) -> f64 {
        p1(self.n) - self.eps
    }

    /// `(eps + mu)^alpha`, the radius of the fixed-point ball.
    pub fn ball_radius(&self) -> f64 {
        (self.eps + self.mu).powf(self.alpha)
    }
}

/// Default ball exponent `max(1/2, 1.1/p₁)`.
pub fn default_alpha(n: u32) -> f64 {
    (1.1 / p1(n)).max(0.5)
}

pub fn p1(n: u32) -> f64 {
    (n as f64 + 2.0) / (n as f64 - 2.0)
}

/// `(n(n-2))`, the normalizing constant of the nonlinearity.
pub fn nonlinearity_constant(n: u32) -> f64 {
    let nf = n as f64;
    nf * (nf - 2.0)
}

/// U(r) = (1 + r²)^{-(n-2)/2}.
pub fn bubble(r: f64, n: u32) -> f64 {
    (-(n as f64 - 2.0) / 2.0 * (r * r).ln_1p()).exp()
}

/// log U(r) = -(n-2)/2 · log1p(r²).
pub fn log_bubble(r: f64, n: u32) -> f64 {
    -(n as f64 - 2.0) / 2.0 * (r * r).ln_1p()
}

/// `delta^{(n-2)/2} U(r/delta)`.
pub fn bubble_scaled(r: f64, delta: f64, n: u32) -> Result<f64, ParamError> {
    if !(delta > 0.0) {
        return Err(ParamError::Invalid(format!("delta must be positive, got {delta}")));
    }
    Ok(delta.powf((n as f64 - 2.0) / 2.0) * bubble(r / delta, n))
}

/// `lambda^{(n-2)/2} U(lambda r)`, the dilation family solving −Δu = n(n−2)u^{p₁}.
/// Its λ-derivative at λ = 1 is ψ.
pub fn talenti_dilation(r: f64, lambda: f64, n: u32) -> Result<f64, ParamError> {
    if !(lambda > 0.0) {
        return Err(ParamError::Invalid(format!("lambda must be positive, got {lambda}")));
    }
    Ok(lambda.powf((n as f64 - 2.0) / 2.0) * bubble(lambda * r, n))
}

/// ψ(r) = ((n-2)/2)(1 - r²)/(1 + r²)^{n/2}.
pub fn kernel_psi(r: f64, n: u32) -> f64 {
    let nf = n as f64;
    let r2 = r * r;
    0.5 * (nf - 2.0) * (1.0 - r2) * (-(nf / 2.0) * r2.ln_1p()).exp()
}

fn pos_pow(t: f64, p: f64) -> f64 {
    if t > 0.0 {
        (p * t.ln()).exp()
    } else {
        0.0
    }
}

/// f_ε(t) = n(n-2) t₊^{p_ε}.
pub fn f_eps(t: f64, params: &ModelParams) -> f64 {
    nonlinearity_constant(params.n) * pos_pow(t, params.p_eps())
}

pub fn f_eps_prime(t: f64, params: &ModelParams) -> f64 {
    let p = params.p_eps();
    nonlinearity_constant(params.n) * p * pos_pow(t, p - 1.0)
}

/// f₀(t) = n(n-2) t₊^{p₁}.
pub fn f0(t: f64, n: u32) -> f64 {
    nonlinearity_constant(n) * pos_pow(t, p1(n))
}

/// f₀'(U(r)) = n(n+2) U(r)^{4/(n-2)}, written as n(n+2)(1+r²)^{-2}.
pub fn f0_prime_of_bubble(r: f64, n: u32) -> f64 {
    let nf = n as f64;
    nf * (nf + 2.0) / (1.0 + r * r).powi(2)
}

/// g(t) = f_ε(t) + μ t.
pub fn g_eps_delta(t: f64, params: &ModelParams) -> f64 {
    f_eps(t, params) + params.mu() * t
}

pub fn g_prime(t: f64, params: &ModelParams) -> f64 {
    f_eps_prime(t, params) + params.mu()
}
