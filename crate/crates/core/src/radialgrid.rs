//! Radial Bessel spectral grid on the ball `B_R`, with the matched exterior
//! condition `u'(R) + (n-2)/R·u(R) = 0`.
//!
//! Basis functions are `e_m(r) = r^{-ν} J_ν(ξ_m r)/‖·‖` with `ν = n/2 - 1` and
//! `ξ_m R` the zeros of `J_{ν-1}`, which is exactly the matched condition:
//! a grid function continues outside the ball as `c·r^{2-n}`. Both −Δ and
//! (−Δ)^s act diagonally (eigenvalues ξ_m² and ξ_m^{2s}). Nodes sit at
//! `r_k = ξ_k R²/j_{ν,N}` (the dual zeros), where the closed-form weights
//! `2 r_k^{2ν}/(Ξ² J_ν(ξ_k R)²)`, `Ξ = j_{ν,N}/R`, are positive and
//! integrate smooth decaying integrands spectrally. In n = 3 this is the
//! midpoint sine transform and the transform matrix is exactly orthogonal.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bessel::{bessel_j, bessel_j_zeros};
use crate::specfun::gamma_signed;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("fields live on different grids")]
    Mismatch,
    #[error("singular operator: {0}")]
    Singular(String),
    #[error("source tail r^-{decay} is not integrable against the exterior Green function")]
    NonIntegrableTail { decay: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

/// |S^{n-1}| = 2π^{n/2}/Γ(n/2).
pub fn sphere_area(n: u32) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_signed(n as f64 / 2.0)
}

#[derive(Debug)]
pub struct RadialGrid {
    n: u32,
    r_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    xi: Vec<f64>,
    t: DMatrix<f64>,
    t_inv: DMatrix<f64>,
    surface: f64,
}

pub fn make_grid(n: u32, r_max: f64, size: usize) -> Result<Arc<RadialGrid>, GridError> {
    RadialGrid::new(n, r_max, size).map(Arc::new)
}

impl RadialGrid {
    pub fn new(n: u32, r_max: f64, size: usize) -> Result<Self, GridError> {
        if size < 16 {
            return Err(GridError::Usage(format!("grid needs at least 16 nodes, got {size}")));
        }
        if size > 8192 {
            return Err(GridError::Usage(format!("grid size {size} exceeds the dense-transform limit 8192")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(GridError::Usage(format!("R_max must be positive, got {r_max}")));
        }
        if n < 3 {
            return Err(GridError::Usage(format!("dimension must be >= 3, got {n}")));
        }
        let nu = n as f64 / 2.0 - 1.0;
        let d = bessel_j_zeros(nu - 1.0, size);
        let j_last = *bessel_j_zeros(nu, size).last().expect("size >= 16");
        let xi: Vec<f64> = d.iter().map(|x| x / r_max).collect();
        let nodes: Vec<f64> = d.iter().map(|x| x * r_max / j_last).collect();
        let jd: Vec<f64> = d.iter().map(|&x| bessel_j(nu, x)).collect();
        let norm: Vec<f64> = jd.iter().map(|j| r_max * j.abs() / 2f64.sqrt()).collect();
        let big_xi = j_last / r_max;
        let weights: Vec<f64> = (0..size)
            .map(|k| 2.0 * nodes[k].powf(2.0 * nu) / (big_xi * big_xi * jd[k] * jd[k]))
            .collect();
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(GridError::Usage("non-positive quadrature weight".into()));
        }
        let t = DMatrix::from_fn(size, size, |k, m| {
            bessel_j(nu, xi[m] * nodes[k]) * nodes[k].powf(-nu) / norm[m]
        });
        let sw = DVector::from_iterator(size, weights.iter().map(|w| w.sqrt()));
        let mut a = t.clone();
        for (k, mut row) in a.row_iter_mut().enumerate() {
            row *= sw[k];
        }
        let a_inv = a
            .lu()
            .try_inverse()
            .ok_or_else(|| GridError::Singular("transform matrix is singular".into()))?;
        let mut t_inv = a_inv;
        for (k, mut col) in t_inv.column_iter_mut().enumerate() {
            col *= sw[k];
        }
        Ok(Self { n, r_max, nodes, weights, xi, t, t_inv, surface: sphere_area(n) })
    }

    /// The same grid in the variable `δ r`.
    pub fn rescaled(&self, delta: f64) -> Result<Self, GridError> {
        if !(delta > 0.0) {
            return Err(GridError::Usage(format!("rescaling factor must be positive, got {delta}")));
        }
        let half = delta.powf(self.n as f64 / 2.0);
        Ok(Self {
            n: self.n,
            r_max: self.r_max * delta,
            nodes: self.nodes.iter().map(|r| r * delta).collect(),
            weights: self.weights.iter().map(|w| w * half * half).collect(),
            xi: self.xi.iter().map(|x| x / delta).collect(),
            t: &self.t / half,
            t_inv: &self.t_inv * half,
            surface: self.surface,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn frequencies(&self) -> &[f64] {
        &self.xi
    }
    pub fn surface(&self) -> f64 {
        self.surface
    }
    pub fn transform_order(&self) -> f64 {
        self.n as f64 / 2.0 - 1.0
    }
    /// Nodal values = `synthesis_matrix() · coefficients`.
    pub fn synthesis_matrix(&self) -> &DMatrix<f64> {
        &self.t
    }
    pub fn analysis_matrix(&self) -> &DMatrix<f64> {
        &self.t_inv
    }

    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        (&self.t_inv * DVector::from_column_slice(values)).as_slice().to_vec()
    }

    pub fn synthesize(&self, coef: &[f64]) -> Vec<f64> {
        (&self.t * DVector::from_column_slice(coef)).as_slice().to_vec()
    }

    /// Multiplies the spectral coefficients by `symbol`.
    pub fn apply_symbol(&self, values: &[f64], symbol: &[f64]) -> Vec<f64> {
        let mut c = self.coefficients(values);
        for (ci, si) in c.iter_mut().zip(symbol) {
            *ci *= si;
        }
        self.synthesize(&c)
    }

    /// `|S^{n-1}| Σ w_k v_k ≈ ∫_{B_R} v dx`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.surface * self.weights.iter().zip(values).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn lq_norm(&self, values: &[f64], q: f64) -> f64 {
        let s: f64 = self.weights.iter().zip(values).map(|(w, v)| w * v.abs().powf(q)).sum();
        (self.surface * s).powf(1.0 / q)
    }

    /// Spectral pairing `|S^{n-1}| Σ m(ξ) ĉ_u ĉ_v`.
    pub fn spectral_pairing(&self, u: &[f64], v: &[f64], weight: impl Fn(f64) -> f64) -> f64 {
        let cu = self.coefficients(u);
        let cv = self.coefficients(v);
        self.surface * self.xi.iter().zip(cu.iter().zip(&cv)).map(|(x, (a, b))| weight(*x) * a * b).sum::<f64>()
    }

    /// Dirichlet energy form, including the harmonic exterior continuation.
    pub fn dirichlet_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.spectral_pairing(u, v, |x| x * x)
    }

    /// Grid L² pairing (Parseval in the orthonormal basis).
    pub fn l2_pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        self.spectral_pairing(u, v, |_| 1.0)
    }

    fn same(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.n == other.n && self.r_max == other.r_max && self.nodes.len() == other.nodes.len())
    }
}

/// A radial function sampled on a grid, with its asserted far-field decay
/// exponent `d` (the field behaves like `r^{-d}`).
#[derive(Debug, Clone)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub decay_exp: f64,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, decay_exp: f64) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Usage(format!("{} values for a {}-node grid", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GridError::Usage("field values must be finite".into()));
        }
        Ok(Self { grid, values, decay_exp })
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64, decay_exp: f64) -> Result<Self, GridError> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid.clone(), values, decay_exp)
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()], decay_exp: f64::INFINITY }
    }

    pub fn check_same_grid(&self, other: &RadialField) -> Result<(), GridError> {
        if self.grid.same(&other.grid) {
            Ok(())
        } else {
            Err(GridError::Mismatch)
        }
    }

    pub fn with_values(&self, values: Vec<f64>, decay_exp: f64) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { grid: self.grid.clone(), values, decay_exp }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let d = if c == 0.0 { f64::INFINITY } else { self.decay_exp };
        self.with_values(self.values.iter().map(|v| c * v).collect(), d)
    }

    /// `self + c·other`; the result decays like the slower of the two.
    pub fn axpy(&self, c: f64, other: &RadialField) -> Result<Self, GridError> {
        self.check_same_grid(other)?;
        let vals = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        let d = if c == 0.0 { self.decay_exp } else { self.decay_exp.min(other.decay_exp) };
        Ok(self.with_values(vals, d))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Writes `r,value` CSV plus a `<stem>.json` metadata sidecar.
    pub fn write_csv(&self, path: &Path, s: Option<f64>) -> Result<(), GridError> {
        let mut out = String::from("r,value\n");
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            out.push_str(&format!("{r:.17e},{v:.17e}\n"));
        }
        std::fs::write(path, out)?;
        let meta = FieldMeta {
            n: self.grid.n(),
            s,
            r_max: self.grid.r_max(),
            size: self.grid.len(),
            decay_exp: if self.decay_exp.is_finite() { Some(self.decay_exp) } else { None },
        };
        let text = serde_json::to_string_pretty(&meta).map_err(|e| GridError::Format(e.to_string()))?;
        std::fs::write(path.with_extension("json"), text + "\n")?;
        Ok(())
    }

    /// Reads a field written by [`RadialField::write_csv`] onto `grid`.
    pub fn read_csv(grid: &Arc<RadialGrid>, path: &Path) -> Result<Self, GridError> {
        let meta: FieldMeta = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json"))?)
            .map_err(|e| GridError::Format(e.to_string()))?;
        if meta.n != grid.n() || meta.size != grid.len() || meta.r_max != grid.r_max() {
            return Err(GridError::Mismatch);
        }
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        if lines.next() != Some("r,value") {
            return Err(GridError::Format("missing `r,value` header".into()));
        }
        let mut values = Vec::with_capacity(grid.len());
        for (i, line) in lines.enumerate() {
            let (r, v) = line.split_once(',').ok_or_else(|| GridError::Format(format!("bad line {}", i + 2)))?;
            let r: f64 = r.trim().parse().map_err(|_| GridError::Format(format!("bad radius on line {}", i + 2)))?;
            let v: f64 = v.trim().parse().map_err(|_| GridError::Format(format!("bad value on line {}", i + 2)))?;
            if i >= grid.len() || (r - grid.nodes()[i]).abs() > 1e-12 * r.abs().max(1.0) {
                return Err(GridError::Mismatch);
            }
            values.push(v);
        }
        Self::new(grid.clone(), values, meta.decay_exp.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldMeta {
    pub n: u32,
    pub s: Option<f64>,
    #[serde(rename = "R_max")]
    pub r_max: f64,
    #[serde(rename = "N")]
    pub size: usize,
    pub decay_exp: Option<f64>,
}

/// Symbol `ξ² + μ ξ^{2s} + μ` of the operator whose inverse is I_δ.
#[derive(Debug, Clone)]
pub struct SpectralMultiplier {
    pub grid: Arc<RadialGrid>,
    pub mu: f64,
    pub s: f64,
    pub symbol: Vec<f64>,
}

impl SpectralMultiplier {
    pub fn new(grid: &Arc<RadialGrid>, mu: f64, s: f64) -> Result<Self, GridError> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(GridError::Usage(format!("mu must be finite and >= 0, got {mu}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(GridError::Usage(format!("s must lie in (0,1), got {s}")));
        }
        let symbol = grid.frequencies().iter().map(|&x| x * x + mu * x.powf(2.0 * s) + mu).collect();
        Ok(Self { grid: grid.clone(), mu, s, symbol })
    }

    /// Symbol `ξ² + ξ^{2s}` of the unit-coefficient mixed operator (no mass term).
    pub fn unit_mixed(grid: &Arc<RadialGrid>, s: f64) -> Result<Self, GridError> {
        let mut m = Self::new(grid, 0.0, s)?;
        m.symbol = grid.frequencies().iter().map(|&x| x * x + x.powf(2.0 * s)).collect();
        m.mu = f64::NAN;
        Ok(m)
    }

    fn check(&self, u: &RadialField) -> Result<(), GridError> {
        if self.grid.same(&u.grid) {
            Ok(())
        } else {
            Err(GridError::Mismatch)
        }
    }

    fn has_mass(&self) -> bool {
        self.mu > 0.0
    }
}

pub fn apply_forward(mult: &SpectralMultiplier, u: &RadialField) -> Result<RadialField, GridError> {
    mult.check(u)?;
    let vals = mult.grid.apply_symbol(&u.values, &mult.symbol);
    let n = mult.grid.n() as f64;
    let d = if mult.has_mass() { u.decay_exp.min(n + 2.0 * mult.s) } else { u.decay_exp + 2.0 };
    Ok(u.with_values(vals, d))
}

/// Spectral inverse of [`apply_forward`]: exact on the grid space.
pub fn resolvent_I_delta(mult: &SpectralMultiplier, h: &RadialField) -> Result<RadialField, GridError> {
    mult.check(h)?;
    if mult.symbol.iter().any(|x| !(*x > 0.0)) {
        return Err(GridError::Singular("zero symbol node".into()));
    }
    let inv: Vec<f64> = mult.symbol.iter().map(|x| 1.0 / x).collect();
    let vals = mult.grid.apply_symbol(&h.values, &inv);
    let n = mult.grid.n() as f64;
    let d = if mult.has_mass() {
        h.decay_exp.min(n + 2.0 * mult.s)
    } else {
        (h.decay_exp - 2.0).min(n - 2.0)
    };
    Ok(h.with_values(vals, d))
}

/// Constant that the part of a radially symmetric source outside `B_R`
/// contributes inside the ball through the Newton potential,
/// `∫_R^∞ h(t) t dt/(n-2)`. The tail is modelled as `a r^{-d} + b r^{-d-2}`
/// with `d` the field's decay exponent and `(a, b)` fitted to the last two nodes.
pub fn exterior_tail_constant(h: &RadialField) -> Result<f64, GridError> {
    let d = h.decay_exp;
    if d.is_infinite() {
        return Ok(0.0);
    }
    if !(d > 2.0) {
        return Err(GridError::NonIntegrableTail { decay: d });
    }
    let g = &h.grid;
    let k = g.len();
    let (r1, r2) = (g.nodes()[k - 2], g.nodes()[k - 1]);
    let (h1, h2) = (h.values[k - 2], h.values[k - 1]);
    // Solve [r1^-d r1^-(d+2); r2^-d r2^-(d+2)] (a, b) = (h1, h2).
    let (a11, a12, a21, a22) = (r1.powf(-d), r1.powf(-d - 2.0), r2.powf(-d), r2.powf(-d - 2.0));
    let det = a11 * a22 - a12 * a21;
    let a = (h1 * a22 - a12 * h2) / det;
    let b = (a11 * h2 - a21 * h1) / det;
    let r = g.r_max();
    let n = g.n() as f64;
    Ok((a * r.powf(2.0 - d) / (d - 2.0) + b * r.powf(-d) / d) / (n - 2.0))
}

/// Free-space resolvent: [`resolvent_I_delta`] plus, for μ = 0, the
/// contribution of the source tail beyond `R` (see [`exterior_tail_constant`]).
/// For μ > 0 the tail is screened and no closure is added.
pub fn resolvent_free_space(mult: &SpectralMultiplier, h: &RadialField) -> Result<RadialField, GridError> {
    let mut u = resolvent_I_delta(mult, h)?;
    if !mult.has_mass() {
        let c = exterior_tail_constant(h)?;
        for v in &mut u.values {
            *v += c;
        }
    }
    Ok(u)
}

/// `max(‖u‖_{D^{1,2}}, ‖u‖_{L^{2n/(n+2)}})` on the grid.
pub fn norm_X(u: &RadialField) -> f64 {
    let (d12, lq) = norm_X_parts(u);
    d12.max(lq)
}

/// The two components `(‖u‖_{D^{1,2}}, ‖u‖_{L^{2n/(n+2)}})`.
pub fn norm_X_parts(u: &RadialField) -> (f64, f64) {
    let g = &u.grid;
    let n = g.n() as f64;
    let d12 = g.dirichlet_form(&u.values, &u.values).max(0.0).sqrt();
    let lq = g.lq_norm(&u.values, 2.0 * n / (n + 2.0));
    (d12, lq)
}

/// `norm_X(I h)/‖h‖_{L^{2n/(n+2)}}`, the empirical continuity constant of the resolvent at `h`.
pub fn resolvent_continuity_ratio(mult: &SpectralMultiplier, h: &RadialField) -> Result<f64, GridError> {
    let u = resolvent_free_space(mult, h)?;
    let n = h.grid.n() as f64;
    Ok(norm_X(&u) / h.grid.lq_norm(&h.values, 2.0 * n / (n + 2.0)))
}
