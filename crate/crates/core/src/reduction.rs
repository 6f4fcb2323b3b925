//! Lyapunov-Schmidt reduction around the bubble.
//!
//! Writing z = U + φ with φ ⊥ ψ in the Dirichlet inner product, the fixed-point
//! form z = I_δ(g(z)) splits into
//!
//! ```text
//! L_δ φ = I_δ N(φ) − E_U + cψ,   N(φ) = f_ε(U+φ) − f₀(U) − f₀'(U)φ,
//! ```
//!
//! with E_U = U − I_δ(f₀(U) + μU) the defect of the bubble, and a scalar
//! equation F(λ) = ⟨z − I_δ(g(z)), ψ⟩₁ = 0 along the ray μ = λε.
//!
//! The constrained inverse of L_δ on K = ψ^⊥ is the bordered system
//! `[L_δ  −ψ; ⟨·,ψ⟩₁  0]`, solved by GMRES right-preconditioned with the
//! LU factors of the same system at δ = 0.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fracop::{fraclap_bubble_closed, BubbleFracLapForm, FracError};
use crate::profiles::{
    bubble, f0, f0_prime_of_bubble, f_eps, g_eps_delta, kernel_psi, ModelParams, ParamError,
};
use crate::radialgrid::{
    exterior_tail_constant, make_grid, norm_X, resolvent_I_delta, resolvent_free_space, GridError, RadialField,
    RadialGrid, SpectralMultiplier,
};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("degenerate projection: {0}")]
    Degenerate(String),
    #[error("linear solve stalled after {iterations} iterations at relative residual {residual:e}")]
    Solver { iterations: usize, residual: f64 },
    #[error("fixed point did not converge in {iterations} iterations (last steps {trace:?})")]
    NonConvergence { iterations: usize, trace: Vec<f64> },
    #[error("iterate {iteration} left the ball: norm {norm:e} > radius {radius:e}; eps and delta too large")]
    Regime { iteration: usize, norm: f64, radius: f64 },
    #[error("no sign change of F on [{lo}, {hi}]: F = {f_lo:e}, {f_hi:e}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// What to do when an iterate leaves the ball of radius (ε+μ)^α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BallPolicy {
    /// Abort with [`ReductionError::Regime`].
    #[default]
    Enforce,
    /// Keep iterating and record the exit in the state.
    Report,
}

/// How the bubble defect E_U is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingModel {
    /// `U − I_δ(f₀(U) + μU)` with the grid operators, so the discrete
    /// fixed point solves the discrete equation exactly.
    #[default]
    GridConsistent,
    /// `μ I_δ((−Δ)^s U)` with the calibrated closed form; vanishes at μ = 0.
    ClosedForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub r_max: f64,
    pub size: usize,
    pub ball_policy: BallPolicy,
    pub forcing: ForcingModel,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub solve_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            r_max: 100.0,
            size: 1024,
            ball_policy: BallPolicy::Enforce,
            forcing: ForcingModel::GridConsistent,
            fp_tol: 1e-10,
            fp_max_iter: 200,
            solve_tol: 1e-10,
            gmres_restart: 50,
            gmres_max_iter: 500,
        }
    }
}

/// Grid-level data shared by every (ε, δ): U, ψ, f₀'(U) and the
/// factorized bordered operator at δ = 0.
pub struct Reducer {
    pub n: u32,
    pub s: f64,
    pub config: ReductionConfig,
    grid: Arc<RadialGrid>,
    u: RadialField,
    psi: RadialField,
    f0p: Vec<f64>,
    /// row vector of v ↦ ⟨v, ψ⟩₁
    cpsi: Vec<f64>,
    psi_norm2: f64,
    precond: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    fraclap_u: Option<Vec<f64>>,
}

/// Decay exponent of every element of K (like ψ and U).
fn k_decay(n: u32) -> f64 {
    n as f64 - 2.0
}

impl Reducer {
    pub fn new(n: u32, s: f64, config: ReductionConfig) -> Result<Self, ReductionError> {
        if n < 3 || !(s > 0.0 && s < 1.0) {
            return Err(ReductionError::Invalid(format!("need n >= 3 and s in (0,1), got n={n}, s={s}")));
        }
        let grid = make_grid(n, config.r_max, config.size)?;
        Self::on_grid(grid, s, config)
    }

    pub fn on_grid(grid: Arc<RadialGrid>, s: f64, config: ReductionConfig) -> Result<Self, ReductionError> {
        let n = grid.n();
        let u = RadialField::from_fn(&grid, |r| bubble(r, n), k_decay(n))?;
        let psi = RadialField::from_fn(&grid, |r| kernel_psi(r, n), k_decay(n))?;
        let f0p: Vec<f64> = grid.nodes().iter().map(|&r| f0_prime_of_bubble(r, n)).collect();
        let size = grid.len();

        let c_psi = grid.coefficients(&psi.values);
        let weighted = DVector::from_iterator(size, grid.frequencies().iter().zip(&c_psi).map(|(x, c)| x * x * c));
        let cpsi: Vec<f64> = (grid.analysis_matrix().transpose() * weighted * grid.surface()).as_slice().to_vec();
        let psi_norm2: f64 = cpsi.iter().zip(&psi.values).map(|(a, b)| a * b).sum();
        if !(psi_norm2 > 0.0) {
            return Err(ReductionError::Degenerate(format!("⟨ψ,ψ⟩₁ = {psi_norm2:e}")));
        }

        // I₀ as a matrix: spectral inverse plus the exterior-tail closure for
        // sources decaying like r^{-(n+2)} (f₀'(U)·v for v ∈ K).
        let inv_sym = DVector::from_iterator(size, grid.frequencies().iter().map(|x| 1.0 / (x * x)));
        let mut i0 = grid.synthesis_matrix() * DMatrix::from_diagonal(&inv_sym) * grid.analysis_matrix();
        for k in [size - 2, size - 1] {
            let mut e = vec![0.0; size];
            e[k] = 1.0;
            let c = exterior_tail_constant(&RadialField::new(grid.clone(), e, n as f64 + 2.0)?)?;
            for i in 0..size {
                i0[(i, k)] += c;
            }
        }
        let mut b = DMatrix::<f64>::zeros(size + 1, size + 1);
        for j in 0..size {
            for i in 0..size {
                b[(i, j)] = -i0[(i, j)] * f0p[j];
            }
            b[(j, j)] += 1.0;
            b[(j, size)] = -psi.values[j];
            b[(size, j)] = cpsi[j];
        }
        let precond = b.lu();
        if !precond.is_invertible() {
            return Err(ReductionError::Grid(GridError::Singular("bordered L₀ is singular".into())));
        }
        Ok(Self { n, s, config, grid, u, psi, f0p, cpsi, psi_norm2, precond, fraclap_u: None })
    }

    /// Supplies the calibrated closed form used by [`ForcingModel::ClosedForm`].
    pub fn with_fraclap(mut self, form: &BubbleFracLapForm) -> Result<Self, ReductionError> {
        if form.n != self.n || form.s != self.s {
            return Err(ReductionError::Invalid("closed form belongs to another (n, s)".into()));
        }
        let vals = self.grid.nodes().iter().map(|&r| fraclap_bubble_closed(r, form)).collect::<Result<Vec<_>, _>>()?;
        self.fraclap_u = Some(vals);
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
    pub fn bubble(&self) -> &RadialField {
        &self.u
    }
    pub fn psi(&self) -> &RadialField {
        &self.psi
    }

    /// ⟨v, ψ⟩₁ through the precomputed row vector.
    pub fn pair_psi(&self, v: &[f64]) -> f64 {
        self.cpsi.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Π u = u − (⟨u,ψ⟩₁/⟨ψ,ψ⟩₁) ψ.
    pub fn project_K(&self, u: &RadialField) -> Result<RadialField, ReductionError> {
        u.check_same_grid(&self.psi)?;
        let c = self.pair_psi(&u.values) / self.psi_norm2;
        Ok(u.axpy(-c, &self.psi)?)
    }

    /// Operator data for one parameter set.
    pub fn at(&self, params: ModelParams) -> Result<Operating, ReductionError> {
        if params.n != self.n || params.s != self.s {
            return Err(ReductionError::Invalid("parameters belong to another (n, s)".into()));
        }
        let mu = params.mu();
        let mult = SpectralMultiplier::new(&self.grid, mu, self.s)?;
        let nf = self.n as f64;
        let e_u = match self.config.forcing {
            ForcingModel::GridConsistent => {
                let src: Vec<f64> =
                    self.u.values.iter().map(|&u| f0(u, self.n) + mu * u).collect();
                let d = if mu > 0.0 { k_decay(self.n) } else { nf + 2.0 };
                let iu = resolvent_free_space(&mult, &self.u.with_values(src, d))?;
                self.u.values.iter().zip(&iu.values).map(|(a, b)| a - b).collect()
            }
            ForcingModel::ClosedForm => {
                if mu == 0.0 {
                    vec![0.0; self.grid.len()]
                } else {
                    let fl = self.fraclap_u.as_ref().ok_or_else(|| {
                        ReductionError::Invalid("closed-form forcing needs a calibrated (−Δ)^s U".into())
                    })?;
                    let src = self.u.with_values(fl.iter().map(|v| mu * v).collect(), nf - 2.0 + 2.0 * self.s);
                    resolvent_free_space(&mult, &src)?.values
                }
            }
        };
        Ok(Operating { params, mult, e_u })
    }

    /// L_δ u = u − I_δ((f₀'(U) + μ) u).
    pub fn L_delta(&self, u: &RadialField, op: &Operating) -> Result<RadialField, ReductionError> {
        u.check_same_grid(&self.u)?;
        let mu = op.params.mu();
        let src: Vec<f64> = u.values.iter().zip(&self.f0p).map(|(v, f)| (f + mu) * v).collect();
        let d = if mu > 0.0 { u.decay_exp } else { u.decay_exp + 4.0 };
        let iu = resolvent_free_space(&op.mult, &u.with_values(src, d))?;
        Ok(u.axpy(-1.0, &iu)?)
    }

    fn bordered_apply(&self, x: &[f64], op: &Operating) -> Result<Vec<f64>, ReductionError> {
        let size = self.grid.len();
        let w = self.u.with_values(x[..size].to_vec(), k_decay(self.n));
        let lw = self.L_delta(&w, op)?;
        let c = x[size];
        let mut out: Vec<f64> = lw.values.iter().zip(&self.psi.values).map(|(a, p)| a - c * p).collect();
        out.push(self.pair_psi(&x[..size]));
        Ok(out)
    }

    /// Solves L_δ w = rhs + cψ with w ∈ K, for rhs ∈ K.
    ///
    /// GMRES runs on `D x` with `D = diag(√(|S|w_k), 1)`, so its residual is
    /// measured in the L²(B_R) norm rather than on raw nodal values (which
    /// would ignore the large volume weights of the far nodes).
    pub fn solve_in_K(&self, rhs: &RadialField, op: &Operating) -> Result<RadialField, ReductionError> {
        let size = self.grid.len();
        let mut d: Vec<f64> = self.grid.weights().iter().map(|w| (self.grid.surface() * w).sqrt()).collect();
        d.push(1.0);
        let scale = |v: &[f64]| -> Vec<f64> { v.iter().zip(&d).map(|(a, b)| a * b).collect() };
        let unscale = |v: &[f64]| -> Vec<f64> { v.iter().zip(&d).map(|(a, b)| a / b).collect() };
        let mut b = rhs.values.clone();
        b.push(0.0);
        let precond = |v: &[f64]| -> Vec<f64> {
            self.precond
                .solve(&DVector::from_column_slice(&unscale(v)))
                .map(|x| scale(x.as_slice()))
                .unwrap_or_else(|| vec![f64::NAN; v.len()])
        };
        let y = gmres(
            |v| self.bordered_apply(&unscale(v), op).map(|r| scale(&r)),
            precond,
            &scale(&b),
            self.config.solve_tol,
            self.config.gmres_restart,
            self.config.gmres_max_iter,
        )?;
        let x = unscale(&y);
        Ok(self.u.with_values(x[..size].to_vec(), k_decay(self.n)))
    }

    /// T(φ) = L̃_δ⁻¹ Π(I_δ N(φ) − E_U).
    pub fn T_map(&self, phi: &RadialField, op: &Operating) -> Result<RadialField, ReductionError> {
        phi.check_same_grid(&self.u)?;
        let p = &op.params;
        let src: Vec<f64> = self
            .u
            .values
            .iter()
            .zip(&phi.values)
            .zip(&self.f0p)
            .map(|((&u, &f), &fp)| f_eps(u + f, p) - f0(u, self.n) - fp * f)
            .collect();
        let d = if p.mu() > 0.0 { k_decay(self.n) } else { self.n as f64 + 2.0 };
        let inl = resolvent_free_space(&op.mult, &self.u.with_values(src, d))?;
        let h: Vec<f64> = inl.values.iter().zip(&op.e_u).map(|(a, e)| a - e).collect();
        let rhs = self.project_K(&self.u.with_values(h, k_decay(self.n)))?;
        self.solve_in_K(&rhs, op)
    }

    /// φ_{k+1} = T(φ_k) from φ₀ = 0.
    pub fn fixed_point(&self, op: &Operating) -> Result<ReductionState, ReductionError> {
        let zero = self.u.with_values(vec![0.0; self.grid.len()], k_decay(self.n));
        self.fixed_point_from(op, &zero)
    }

    /// The same iteration from a given start in K (used to warm-start continuation in λ).
    pub fn fixed_point_from(&self, op: &Operating, start: &RadialField) -> Result<ReductionState, ReductionError> {
        let radius = op.params.ball_radius();
        let psi_n = self.psi_norm2.sqrt();
        let mut phi = start.clone();
        let mut trace = Vec::new();
        let mut in_ball = true;
        for k in 1..=self.config.fp_max_iter {
            let next = self.T_map(&phi, op)?;
            let diff = next.axpy(-1.0, &phi)?;
            let step = norm_X(&diff);
            let norm = norm_X(&next);
            let d12 = self.grid.dirichlet_form(&next.values, &next.values).max(0.0).sqrt();
            let orth = self.pair_psi(&next.values).abs();
            debug_assert!(orth <= 1e-8 * d12.max(1e-300) * psi_n + 1e-300, "iterate left K: {orth:e}");
            if norm > radius {
                in_ball = false;
                if self.config.ball_policy == BallPolicy::Enforce {
                    return Err(ReductionError::Regime { iteration: k, norm, radius });
                }
            }
            trace.push(step);
            phi = next;
            if norm == 0.0 || step <= self.config.fp_tol * norm {
                return Ok(ReductionState { params: op.params, phi, iterations: k, last_step: step, in_ball, step_trace: trace });
            }
        }
        let tail = trace.iter().rev().take(5).rev().cloned().collect();
        Err(ReductionError::NonConvergence { iterations: self.config.fp_max_iter, trace: tail })
    }

    /// z − I_δ(g(z)) for z = U + φ.
    pub fn residual_field(&self, state: &ReductionState, op: &Operating) -> Result<RadialField, ReductionError> {
        let z = self.u.axpy(1.0, &state.phi)?;
        let p = &op.params;
        let g: Vec<f64> = z.values.iter().map(|&t| g_eps_delta(t, p)).collect();
        let d = if p.mu() > 0.0 { k_decay(self.n) } else { (self.n as f64 - 2.0) * p.p_eps() };
        let ig = resolvent_free_space(&op.mult, &z.with_values(g, d))?;
        Ok(z.axpy(-1.0, &ig)?)
    }

    /// F = ⟨z − I_δ(g(z)), ψ⟩₁.
    pub fn bifurcation_value(&self, state: &ReductionState, op: &Operating) -> Result<f64, ReductionError> {
        Ok(self.pair_psi(&self.residual_field(state, op)?.values))
    }

    /// A random element of K with ‖v‖_X = `norm`, built from the profiles
    /// r^{2j}/(1+r²)^{j+(n−2)/2}, j = 0..5.
    pub fn random_K_field(&self, rng: &mut ChaCha8Rng, norm: f64) -> Result<RadialField, ReductionError> {
        let h = (self.n as f64 - 2.0) / 2.0;
        let coef: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = RadialField::from_fn(
            &self.grid,
            |r| {
                let r2 = r * r;
                coef.iter().enumerate().map(|(j, c)| c * r2.powi(j as i32) / (1.0 + r2).powf(j as f64 + h)).sum()
            },
            k_decay(self.n),
        )?;
        let v = self.project_K(&v)?;
        let nv = norm_X(&v);
        if !(nv > 0.0) {
            return Err(ReductionError::Degenerate("random field projected to zero".into()));
        }
        Ok(v.scaled(norm / nv))
    }

    /// Empirical Lipschitz constant of T and ball-invariance ratio
    /// max ‖T(φ)‖/(ε+μ)^α over `pairs` random pairs inside the ball.
    pub fn sample_ball(&self, op: &Operating, pairs: usize, seed: u64) -> Result<BallSample, ReductionError> {
        let radius = op.params.ball_radius();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lip: f64 = 0.0;
        let mut inv: f64 = 0.0;
        for _ in 0..pairs {
            let (fa, fb) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
            let a = self.random_K_field(&mut rng, fa * radius)?;
            let b = self.random_K_field(&mut rng, fb * radius)?;
            let (ta, tb) = (self.T_map(&a, op)?, self.T_map(&b, op)?);
            lip = lip.max(norm_X(&ta.axpy(-1.0, &tb)?) / norm_X(&a.axpy(-1.0, &b)?));
            inv = inv.max(norm_X(&ta).max(norm_X(&tb)) / radius);
        }
        Ok(BallSample { pairs, contraction: lip, invariance_ratio: inv, radius })
    }

    /// max |⟨res, v⟩₁|/‖v‖_{D^{1,2}} over random fields v; a weak-form view
    /// of the residual, bounded above by its Dirichlet norm.
    pub fn weak_residual(&self, res: &RadialField, count: usize, seed: u64) -> Result<f64, ReductionError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = (self.n as f64 - 2.0) / 2.0;
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let coef: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let scale = rng.gen_range(0.3..3.0);
            let v: Vec<f64> = self
                .grid
                .nodes()
                .iter()
                .map(|&r| {
                    let r2 = (r / scale).powi(2);
                    coef.iter().enumerate().map(|(j, c)| c * r2.powi(j as i32) / (1.0 + r2).powf(j as f64 + h)).sum()
                })
                .collect();
            let vv = self.grid.dirichlet_form(&v, &v).sqrt();
            worst = worst.max(self.grid.dirichlet_form(&res.values, &v).abs() / vv);
        }
        Ok(worst)
    }

    /// Residual of the unit-coefficient equation −Δu + (−Δ)^s u = f_ε(u)
    /// for u(x) = δ^{−2/(p_ε−1)} z(x/δ), on the grid rescaled by δ:
    /// `norm_X(u − J(f_ε(u)))` with J the spectral inverse of ξ² + ξ^{2s}.
    pub fn rescaled_residual(&self, state: &ReductionState) -> Result<f64, ReductionError> {
        let p = &state.params;
        if !(p.delta > 0.0) {
            return Err(ReductionError::Invalid("rescaling needs delta > 0".into()));
        }
        let fine = Arc::new(self.grid.rescaled(p.delta)?);
        let amp = p.delta.powf(-2.0 / (p.p_eps() - 1.0));
        let z = self.u.axpy(1.0, &state.phi)?;
        let u = RadialField::new(fine.clone(), z.values.iter().map(|v| amp * v).collect(), k_decay(self.n))?;
        let src = u.with_values(u.values.iter().map(|&t| f_eps(t, p)).collect(), k_decay(self.n));
        let mult = SpectralMultiplier::unit_mixed(&fine, self.s)?;
        let ju = resolvent_I_delta(&mult, &src)?;
        Ok(norm_X(&u.axpy(-1.0, &ju)?))
    }

    /// Bisection in λ for F(ε, λ) = 0 on `bracket`, stopping at
    /// |F| ≤ `f_tol`·(ε+μ) or when the bracket stops shrinking.
    pub fn solve_theorem1(
        &self,
        eps: f64,
        alpha: f64,
        bracket: (f64, f64),
        f_tol: f64,
    ) -> Result<Solution, ReductionError> {
        let (mut lo, mut hi) = bracket;
        if !(lo > 0.0 && hi > lo) {
            return Err(ReductionError::Invalid(format!("bracket must satisfy 0 < lo < hi, got ({lo}, {hi})")));
        }
        let eval = |lam: f64, start: Option<&RadialField>| -> Result<(f64, ReductionState, Operating), ReductionError> {
            let params = ModelParams::on_ray(self.n, self.s, eps, lam, alpha)?;
            let op = self.at(params)?;
            let st = match start {
                Some(s) => self.fixed_point_from(&op, s)?,
                None => self.fixed_point(&op)?,
            };
            let f = self.bifurcation_value(&st, &op)?;
            Ok((f, st, op))
        };
        let (f_lo, st_lo, _) = eval(lo, None)?;
        let (f_hi, _, _) = eval(hi, Some(&st_lo.phi))?;
        if f_lo.signum() == f_hi.signum() {
            return Err(ReductionError::Bracket { lo, hi, f_lo, f_hi });
        }
        let mut s_lo = f_lo.signum();
        let mut warm = st_lo.phi;
        let mut evaluations = 2;
        loop {
            let mid = 0.5 * (lo + hi);
            let (f, st, op) = eval(mid, Some(&warm))?;
            evaluations += 1;
            let mu = op.params.mu();
            let done = f.abs() <= f_tol * (eps + mu) || (hi - lo) <= 1e-13 * hi || evaluations >= 200;
            if done {
                return Ok(Solution { lambda: mid, bifurcation_value: f, state: st, op, evaluations, bracket: (lo, hi) });
            }
            warm = st.phi.clone();
            if f.signum() == s_lo {
                lo = mid;
                s_lo = f.signum();
            } else {
                hi = mid;
            }
        }
    }

    /// Assembles the report for a solved parameter set.
    pub fn report(&self, sol: &Solution, ball_pairs: usize, seed: u64) -> Result<ReductionReport, ReductionError> {
        let st = &sol.state;
        let res = self.residual_field(st, &sol.op)?;
        let ball = if ball_pairs > 0 { Some(self.sample_ball(&sol.op, ball_pairs, seed)?) } else { None };
        let z = self.u.axpy(1.0, &st.phi)?;
        let p = &st.params;
        let rescaled = if p.delta > 0.0 { Some(self.rescaled_residual(st)?) } else { None };
        Ok(ReductionReport {
            n: self.n,
            s: self.s,
            eps: p.eps,
            lambda: sol.lambda,
            mu: p.mu(),
            delta: p.delta,
            alpha: p.alpha,
            phi_norm: norm_X(&st.phi),
            ball_radius: p.ball_radius(),
            converged: st.in_ball,
            in_ball: st.in_ball,
            iterations: st.iterations,
            contraction_estimate: ball.map(|b| b.contraction),
            ball_invariance_ratio: ball.map(|b| b.invariance_ratio),
            bifurcation_value: sol.bifurcation_value,
            pde_residual: norm_X(&res),
            weak_residual: self.weak_residual(&res, 20, seed ^ 0x5eed)?,
            rescaled_residual: rescaled,
            positivity_min: z.min(),
            profile_csv: None,
        })
    }
}

/// Per-parameter operator data.
#[derive(Debug)]
pub struct Operating {
    pub params: ModelParams,
    pub mult: SpectralMultiplier,
    e_u: Vec<f64>,
}

impl Operating {
    pub fn defect(&self) -> &[f64] {
        &self.e_u
    }
}

#[derive(Debug, Clone)]
pub struct ReductionState {
    pub params: ModelParams,
    pub phi: RadialField,
    pub iterations: usize,
    pub last_step: f64,
    pub in_ball: bool,
    pub step_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSample {
    pub pairs: usize,
    pub contraction: f64,
    pub invariance_ratio: f64,
    pub radius: f64,
}

#[derive(Debug)]
pub struct Solution {
    pub lambda: f64,
    pub bifurcation_value: f64,
    pub state: ReductionState,
    pub op: Operating,
    pub evaluations: usize,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub n: u32,
    pub s: f64,
    pub eps: f64,
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub alpha: f64,
    pub phi_norm: f64,
    pub ball_radius: f64,
    /// fixed point reached with every iterate inside the ball
    pub converged: bool,
    pub in_ball: bool,
    pub iterations: usize,
    pub contraction_estimate: Option<f64>,
    pub ball_invariance_ratio: Option<f64>,
    pub bifurcation_value: f64,
    pub pde_residual: f64,
    pub weak_residual: f64,
    pub rescaled_residual: Option<f64>,
    pub positivity_min: f64,
    /// file name of the z profile, relative to the output directory
    pub profile_csv: Option<PathBuf>,
}

/// Restarted GMRES with right preconditioning; relative residual in the Euclidean norm.
fn gmres(
    apply: impl Fn(&[f64]) -> Result<Vec<f64>, ReductionError>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<Vec<f64>, ReductionError> {
    let nrm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let bn = nrm(b);
    let dim = b.len();
    let mut x = vec![0.0; dim];
    if bn == 0.0 {
        return Ok(x);
    }
    let mut total = 0;
    let mut rel = 1.0;
    while total < max_iter {
        let ax = apply(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let beta = nrm(&r);
        rel = beta / bn;
        if rel <= tol {
            return Ok(x);
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for j in 0..restart {
            total += 1;
            let z = precond(&v[j]);
            let mut w = apply(&z)?;
            for i in 0..=j {
                h[i][j] = dot(&w, &v[i]);
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= h[i][j] * vk;
                }
            }
            h[j + 1][j] = nrm(&w);
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let den = h[j][j].hypot(h[j + 1][j]);
            cs[j] = h[j][j] / den;
            sn[j] = h[j + 1][j] / den;
            h[j][j] = den;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k_used = j + 1;
            if g[j + 1].abs() / bn <= tol * 0.5 || total >= max_iter {
                break;
            }
            let wn = nrm(&w);
            if wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|t| t / wn).collect());
        }
        // back substitution
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for l in i + 1..k_used {
                acc -= h[i][l] * y[l];
            }
            y[i] = acc / h[i][i];
        }
        let mut upd = vec![0.0; dim];
        for (yi, vi) in y.iter().zip(&v) {
            for (u, t) in upd.iter_mut().zip(vi) {
                *u += yi * t;
            }
        }
        let dz = precond(&upd);
        for (xi, d) in x.iter_mut().zip(&dz) {
            *xi += d;
        }
    }
    let ax = apply(&x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
    let fin = nrm(&r) / bn;
    if fin <= tol {
        return Ok(x);
    }
    Err(ReductionError::Solver { iterations: total, residual: fin.max(rel) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gmres_solves_small_system() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let b = [1.0, 2.0, 3.0];
        let x = gmres(
            |v| Ok((&a * DVector::from_column_slice(v)).as_slice().to_vec()),
            |v| v.to_vec(),
            &b,
            1e-13,
            2,
            100,
        )
        .unwrap();
        let r = &a * DVector::from_column_slice(&x) - DVector::from_column_slice(&b);
        assert!(r.norm() < 1e-12);
    }
}
