//! Adaptive Gauss-Kronrod (7/15) quadrature with global subdivision.

use std::collections::BinaryHeap;

use thiserror::Error;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
}

impl Estimate {
    pub fn new(value: f64, abs_err: f64) -> Self {
        Self { value, abs_err }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(c * self.value, c.abs() * self.abs_err)
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate::new(self.value + o.value, self.abs_err + o.abs_err)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadError {
    #[error("tolerance not reached after {intervals} subintervals (value {partial}, error {err:e})")]
    Tolerance { partial: f64, err: f64, intervals: usize },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

impl QuadError {
    pub fn partial(&self) -> Option<Estimate> {
        match *self {
            QuadError::Tolerance { partial, err, .. } => Some(Estimate::new(partial, err)),
            QuadError::NonFinite { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_intervals: 2000 }
    }

    pub fn with_max_intervals(mut self, m: usize) -> Self {
        self.max_intervals = m;
        self
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: c });
    }
    let mut rk = WGK[7] * fc;
    let mut rg = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let (x1, x2) = (c - dx, c + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { x: x1 });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { x: x2 });
        }
        rk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((rk * h, ((rk - rg) * h).abs()))
}

struct Panel {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Integrates `f` over `[a, b]` until the summed error is below
/// `max(tol.abs, tol.rel * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<Estimate, QuadError> {
    if a == b {
        return Ok(Estimate::zero());
    }
    let (v, e) = kronrod(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, val: v, err: e });
    let (mut total, mut total_err) = (v, e);
    loop {
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(Estimate::new(total, total_err));
        }
        if heap.len() >= tol.max_intervals {
            return Err(QuadError::Tolerance { partial: total, err: total_err, intervals: heap.len() });
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Panel cannot be split further in floating point.
            return Err(QuadError::Tolerance { partial: total, err: total_err, intervals: heap.len() + 1 });
        }
        let (v1, e1) = kronrod(&f, p.a, m)?;
        let (v2, e2) = kronrod(&f, m, p.b)?;
        total += v1 + v2 - p.val;
        total_err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2 });
        // Re-sum occasionally to stop drift from the running updates.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|q| q.val).sum();
            total_err = heap.iter().map(|q| q.err).sum();
        }
    }
}

/// Integrates over consecutive breakpoints, sharing the absolute tolerance.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tol) -> Result<Estimate, QuadError> {
    let mut acc = Estimate::zero();
    let k = (points.len().saturating_sub(1)).max(1) as f64;
    for w in points.windows(2) {
        acc = acc + integrate(&f, w[0], w[1], Tol { abs: tol.abs / k, ..tol })?;
    }
    Ok(acc)
}

/// `∫_a^∞ f`, via `x = a + (1 - t)/t`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tol) -> Result<Estimate, QuadError> {
    integrate(
        |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let x = a + (1.0 - t) / t;
            f(x) / (t * t)
        },
        0.0,
        1.0,
        tol,
    )
}
