//! The fractional Laplacian of radial functions: closed form for the bubble,
//! a singular-integral oracle, the Fourier-multiplier route, and the
//! bilinear forms ⟨·,·⟩_s and ⟨·,·⟩₁.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bessel::bessel_j;
use crate::profiles::bubble;
use crate::quad::{self, Estimate, QuadError, Tol};
use crate::radialgrid::{sphere_area, GridError, RadialField};
use crate::specfun::{gamma_signed, hyp2f1, Hyp2F1Params, SpecError};

#[derive(Debug, Error)]
pub enum FracError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("quadrature: {0}")]
    Quad(#[from] QuadError),
    #[error("form is not calibrated")]
    Uncalibrated,
    #[error("pairing is not integrable: decay {du} + {dv} + 2s = {total} <= n = {n}")]
    NonIntegrable { du: f64, dv: f64, total: f64, n: u32 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// Normalization of the singular-integral definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracLapConvention {
    pub c_singular: f64,
}

impl FracLapConvention {
    /// `c_{n,s} = 4^s Γ(n/2+s)/(π^{n/2}|Γ(-s)|)`, matching the multiplier |ξ|^{2s}.
    pub fn standard(n: u32, s: f64) -> Self {
        let nf = n as f64;
        let c = 4f64.powf(s) * gamma_signed(nf / 2.0 + s)
            / (std::f64::consts::PI.powf(nf / 2.0) * gamma_signed(-s).abs());
        Self { c_singular: c }
    }
}

/// `(−Δ)^s U = C_ns · ₂F₁(params; −r²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleFracLapForm {
    pub n: u32,
    pub s: f64,
    pub c_ns: Option<f64>,
    pub c_ns_err: f64,
    pub params: Hyp2F1Params,
}

impl BubbleFracLapForm {
    pub fn uncalibrated(n: u32, s: f64) -> Result<Self, FracError> {
        Ok(Self { n, s, c_ns: None, c_ns_err: f64::NAN, params: Hyp2F1Params::bubble(n, s)? })
    }

    pub fn c(&self) -> Result<f64, FracError> {
        self.c_ns.ok_or(FracError::Uncalibrated)
    }
}

pub fn fraclap_bubble_closed(r: f64, form: &BubbleFracLapForm) -> Result<f64, FracError> {
    let c = form.c()?;
    let v = c * hyp2f1(form.params, -r * r)?;
    if !(v > 0.0) {
        return Err(FracError::Spec(SpecError::Invariant(format!("(−Δ)^s U({r}) = {v} is not positive"))));
    }
    Ok(v)
}

/// Calibrates `C(n,s)` as the singular-integral oracle value at r = 0.
pub fn calibrate_C(n: u32, s: f64, conv: &FracLapConvention) -> Result<BubbleFracLapForm, FracError> {
    let mut form = BubbleFracLapForm::uncalibrated(n, s)?;
    let est = fraclap_singular_oracle(&|r| bubble(r, n), 0.0, n, s, conv, Tol::new(1e-15, 1e-12))?;
    if !(est.value > 0.0) {
        return Err(FracError::Spec(SpecError::Invariant(format!("calibrated C(n,s) = {} is not positive", est.value))));
    }
    form.c_ns = Some(est.value);
    form.c_ns_err = est.abs_err;
    Ok(form)
}

/// Below this the second difference `D(ρ)` is replaced by the fit
/// `ρ²(a + bρ² + cρ⁴)` through three interior samples.
const RHO_TAYLOR: f64 = 1e-2;

/// `c_{n,s} P.V.∫ (u(x) − u(y))/|x−y|^{n+2s} dy` for radial `u`.
///
/// Polar coordinates around x turn this into
/// `∫₀^∞ ρ^{-1-2s} (|S^{n-1}| u(r) − M(ρ)) dρ` with the spherical mean
/// `M(ρ) = |S^{n-2}| ∫₀^π u(|x+ρω|) sin^{n-2}θ dθ`. For ρ < 1 the bracket is
/// evaluated as the symmetrized second difference over θ ∈ [0, π/2] and the
/// variable `t = ρ^{2-2s}` removes the endpoint singularity. For ρ > 1,
/// `ρ = 1/t` maps the far field onto (0, 1] and the constant part is exact.
/// `u` must be smooth as a function of r² (as U and Gaussians are).
pub fn fraclap_singular_oracle(
    u: &dyn Fn(f64) -> f64,
    r: f64,
    n: u32,
    s: f64,
    conv: &FracLapConvention,
    tol: Tol,
) -> Result<Estimate, FracError> {
    if n < 2 || !(s > 0.0 && s < 1.0) || !(r >= 0.0) {
        return Err(FracError::Invalid(format!("oracle needs n >= 2, s in (0,1), r >= 0 (n={n}, s={s}, r={r})")));
    }
    let sn1 = sphere_area(n);
    let ur = u(r);
    let inner_tol = Tol::new(tol.abs * 1e-3, tol.rel * 1e-2);

    // ∫ over the sphere of [2u(r) − u(r₊) − u(r₋)]/2, with r± = |x ± ρω|.
    let second_diff = |rho: f64| -> Result<f64, QuadError> {
        if r == 0.0 {
            return Ok(sn1 * (ur - u(rho)));
        }
        let sn2 = sphere_area(n - 1);
        let f = |th: f64| {
            let c = th.cos();
            let base = r * r + rho * rho;
            let rp = (base + 2.0 * r * rho * c).max(0.0).sqrt();
            let rm = (base - 2.0 * r * rho * c).max(0.0).sqrt();
            (2.0 * ur - u(rp) - u(rm)) * th.sin().powi(n as i32 - 2)
        };
        Ok(sn2 * quad::integrate(f, 0.0, std::f64::consts::FRAC_PI_2, inner_tol)?.value)
    };

    // Near field, t = ρ^{2-2s}: dρ ρ^{-1-2s} D(ρ) = dt D(ρ)/(ρ² (2-2s)).
    let k = 2.0 - 2.0 * s;
    let t_ref = RHO_TAYLOR.powf(k);
    let (a, b, c) = {
        let rs = [RHO_TAYLOR, RHO_TAYLOR * 0.75, RHO_TAYLOR * 0.5];
        let mut g = [0.0; 3];
        for (gi, &p) in g.iter_mut().zip(&rs) {
            *gi = second_diff(p)? / (p * p);
        }
        // quadratic in x = ρ² through the three points (Newton form)
        let x: Vec<f64> = rs.iter().map(|p| p * p).collect();
        let d01 = (g[1] - g[0]) / (x[1] - x[0]);
        let d12 = (g[2] - g[1]) / (x[2] - x[1]);
        let c = (d12 - d01) / (x[2] - x[0]);
        let b = d01 - c * (x[0] + x[1]);
        let a = g[0] - b * x[0] - c * x[0] * x[0];
        (a, b, c)
    };
    // ∫₀^{t_ref} (a + bρ² + cρ⁴)/k dt with ρ² = t^{2/k}
    let e = 2.0 / k;
    let clamp = (a * t_ref + b * t_ref.powf(1.0 + e) / (1.0 + e) + c * t_ref.powf(1.0 + 2.0 * e) / (1.0 + 2.0 * e)) / k;
    let near_fn = |t: f64| -> f64 {
        let rho = t.powf(1.0 / k);
        match second_diff(rho) {
            Ok(d) => d / (rho * rho * k),
            Err(_) => f64::NAN,
        }
    };
    let mut pts = vec![t_ref];
    if r > RHO_TAYLOR && r < 1.0 {
        pts.push(r.powf(k));
    }
    pts.push(1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let near = quad::integrate_pieces(near_fn, &pts, tol)? + Estimate::new(clamp, 0.0);

    // Far field: ∫₁^∞ ρ^{-1-2s}(|S|u(r) − M(ρ)) = |S|u(r)/(2s) − ∫₀¹ t^{2s-1} M(1/t) dt.
    let mean = |rho: f64| -> Result<f64, QuadError> {
        if r == 0.0 {
            return Ok(sn1 * u(rho));
        }
        let sn2 = sphere_area(n - 1);
        let f = |th: f64| {
            let rr = (r * r + rho * rho + 2.0 * r * rho * th.cos()).max(0.0).sqrt();
            u(rr) * th.sin().powi(n as i32 - 2)
        };
        Ok(sn2 * quad::integrate(f, 0.0, std::f64::consts::PI, inner_tol)?.value)
    };
    let far_fn = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match mean(1.0 / t) {
            Ok(m) => t.powf(2.0 * s - 1.0) * m,
            Err(_) => f64::NAN,
        }
    };
    let mut fpts = vec![0.0];
    if r > 1.0 {
        fpts.push(1.0 / r);
    }
    fpts.push(1.0);
    let far = quad::integrate_pieces(far_fn, &fpts, tol)?;
    let total = near + Estimate::new(sn1 * ur / (2.0 * s), 0.0) + far.scale(-1.0);
    Ok(total.scale(conv.c_singular))
}

/// Multiplier route `(2π)^{-n/2} r^{-ν} ∫₀^∞ ξ^{2s} û(ξ) J_ν(ξr) ξ^{ν+1} dξ` for a radial
/// function with known n-dimensional Fourier transform `û` (convention ∫u e^{-ix·ξ}).
pub fn fraclap_multiplier_route(
    uhat: &dyn Fn(f64) -> f64,
    r: f64,
    n: u32,
    s: f64,
    xi_max: f64,
    tol: Tol,
) -> Result<Estimate, FracError> {
    let nu = n as f64 / 2.0 - 1.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    let est = if r == 0.0 {
        // J_ν(ξr)(ξr)^{-ν} → 2^{-ν}/Γ(ν+1)
        let c = 1.0 / (2f64.powf(nu) * gamma_signed(nu + 1.0));
        quad::integrate(|x| c * x.powf(2.0 * s + 2.0 * nu + 1.0) * uhat(x), 0.0, xi_max, tol)?
    } else {
        let f = |x: f64| {
            if x == 0.0 {
                0.0
            } else {
                x.powf(2.0 * s) * uhat(x) * bessel_j(nu, x * r) * x.powf(nu + 1.0)
            }
        };
        let step = std::f64::consts::PI / r;
        let mut pts = vec![0.0];
        let mut x = step;
        while x < xi_max {
            pts.push(x);
            x += step;
        }
        pts.push(xi_max);
        quad::integrate_pieces(f, &pts, tol)?.scale(r.powf(-nu))
    };
    Ok(est.scale(two_pi.powf(-(n as f64) / 2.0)))
}

/// ⟨u,v⟩_s on the grid: `|S^{n-1}| Σ ξ^{2s} ĉ_u ĉ_v`. Requires the pairing to
/// be integrable according to the decay metadata, `d_u + d_v + 2s > n`.
pub fn inner_s(u: &RadialField, v: &RadialField, s: f64) -> Result<f64, FracError> {
    u.check_same_grid(v)?;
    let n = u.grid.n();
    let total = u.decay_exp + v.decay_exp + 2.0 * s;
    if !(total > n as f64) {
        return Err(FracError::NonIntegrable { du: u.decay_exp, dv: v.decay_exp, total, n });
    }
    Ok(inner_s_truncated(u, v, s))
}

/// The same spectral sum without the integrability check; on a divergent
/// pairing this is the ball-truncated value.
pub fn inner_s_truncated(u: &RadialField, v: &RadialField, s: f64) -> f64 {
    u.grid.spectral_pairing(&u.values, &v.values, |x| x.powf(2.0 * s))
}

/// Oracle route for ⟨u,v⟩_s: `∫ v (−Δ)^s u dx`, with (−Δ)^s u from the
/// singular-integral oracle at Gauss-Kronrod radii. Equal to the Gagliardo
/// double integral by symmetry of the kernel.
pub fn inner_s_oracle(
    u: &dyn Fn(f64) -> f64,
    v: &dyn Fn(f64) -> f64,
    n: u32,
    s: f64,
    r_cut: f64,
    conv: &FracLapConvention,
    tol: Tol,
) -> Result<Estimate, FracError> {
    let otol = Tol::new(tol.abs * 0.1, tol.rel * 0.1);
    let sn1 = sphere_area(n);
    let inner_err = std::cell::RefCell::new(None);
    let f = |r: f64| {
        let vr = v(r);
        if vr == 0.0 {
            return 0.0;
        }
        match fraclap_singular_oracle(u, r, n, s, conv, otol) {
            Ok(e) => sn1 * e.value * vr * r.powi(n as i32 - 1),
            Err(e) => {
                inner_err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let pts = [0.0, 0.5 * r_cut.min(2.0), r_cut.min(2.0), r_cut];
    let mut p: Vec<f64> = pts.to_vec();
    p.dedup();
    let res = quad::integrate_pieces(f, &p, tol);
    if let Some(e) = inner_err.into_inner() {
        return Err(e);
    }
    Ok(res?)
}

/// ⟨u,v⟩₁ = ∫∇u·∇v, computed from the spectral coefficients.
pub fn inner_1(u: &RadialField, v: &RadialField) -> Result<f64, FracError> {
    u.check_same_grid(v)?;
    Ok(u.grid.dirichlet_form(&u.values, &v.values))
}
