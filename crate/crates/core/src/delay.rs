//! Stability of the closed loop formed by the reference model and the delayed
//! operator, `μ̇ = 𝒜_n μ + 𝒜_d μ(t − τ)`.
//!
//! The rightmost characteristic root is estimated from a Chebyshev
//! discretisation of the infinitesimal generator of the solution semigroup,
//! then refined by Newton's method on `det T(s)` with
//! `T(s) = sI − 𝒜_n − 𝒜_d e^{−τs}`.
//!
//! Only the rank of `𝒜_d` enters the history variables, so the generator
//! matrix has size `d + r N` with `r = rank 𝒜_d` (one for a scalar operator).

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use crate::error::DelayError;
use crate::linalg;
use crate::operator::{realize_operator, OperatorModel, ALTITUDE_CHANNEL};

type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct DelaySystem {
    pub a_n: DMatrix<f64>,
    pub a_d: DMatrix<f64>,
    pub tau: f64,
}

impl DelaySystem {
    pub fn new(a_n: DMatrix<f64>, a_d: DMatrix<f64>, tau: f64) -> Result<Self, DelayError> {
        let d = a_n.nrows();
        if a_n.ncols() != d || a_d.shape() != (d, d) {
            return Err(DelayError::Dimension(format!(
                "A_n is {:?}, A_d is {:?}",
                a_n.shape(),
                a_d.shape()
            )));
        }
        if !(tau >= 0.0) {
            return Err(DelayError::NegativeDelay(tau));
        }
        Ok(Self { a_n, a_d, tau })
    }

    pub fn dim(&self) -> usize {
        self.a_n.nrows()
    }

    /// `T(s) = sI − 𝒜_n − 𝒜_d e^{−τs}`.
    pub fn characteristic_matrix(&self, s: C64) -> DMatrix<C64> {
        let d = self.dim();
        let decay = (-s * self.tau).exp();
        DMatrix::from_fn(d, d, |i, j| {
            let diag = if i == j { s } else { C64::new(0.0, 0.0) };
            diag - self.a_n[(i, j)] - self.a_d[(i, j)] * decay
        })
    }

    /// `T'(s) = I + τ 𝒜_d e^{−τs}`.
    pub fn characteristic_derivative(&self, s: C64) -> DMatrix<C64> {
        let d = self.dim();
        let scale = (-s * self.tau).exp() * self.tau;
        DMatrix::from_fn(d, d, |i, j| {
            let diag = if i == j { 1.0 } else { 0.0 };
            C64::new(diag, 0.0) + self.a_d[(i, j)] * scale
        })
    }

    /// Smallest singular value of `T(s)`.
    pub fn residual(&self, s: C64) -> f64 {
        self.characteristic_matrix(s).singular_values().min()
    }

    fn scale(&self) -> f64 {
        (self.a_n.norm() + self.a_d.norm()).max(1.0)
    }
}

/// Closed loop of `(A_m, B_m)` with an operator `(A_h, B_h, C_h, D_h)` closing
/// the loop through `ζ = −E_h x_m` (the command `c` does not affect stability):
///
/// `𝒜_n = [[A_m, B_m C_h], [0, A_h]]`, `𝒜_d = [[−B_m D_h E_h, 0], [−B_h E_h, 0]]`.
#[allow(clippy::too_many_arguments)]
pub fn build_closed_loop_dde_general(
    a_m: &DMatrix<f64>,
    b_m: &DMatrix<f64>,
    a_h: &DMatrix<f64>,
    b_h: &DMatrix<f64>,
    c_h: &DMatrix<f64>,
    d_h: &DMatrix<f64>,
    e_h: &DMatrix<f64>,
    tau: f64,
) -> Result<DelaySystem, DelayError> {
    let n = a_m.nrows();
    let nr = b_m.ncols();
    let nh = a_h.nrows();
    let nc = b_h.ncols();
    let ok = a_m.ncols() == n
        && b_m.nrows() == n
        && a_h.ncols() == nh
        && b_h.nrows() == nh
        && c_h.shape() == (nr, nh)
        && d_h.shape() == (nr, nc)
        && e_h.shape() == (nc, n);
    if !ok {
        return Err(DelayError::Dimension("operator and reference model do not conform".into()));
    }
    let d = n + nh;
    let mut a_n = DMatrix::zeros(d, d);
    a_n.view_mut((0, 0), (n, n)).copy_from(a_m);
    a_n.view_mut((0, n), (n, nh)).copy_from(&(b_m * c_h));
    a_n.view_mut((n, n), (nh, nh)).copy_from(a_h);
    let mut a_d = DMatrix::zeros(d, d);
    a_d.view_mut((0, 0), (n, n)).copy_from(&(-(b_m * d_h * e_h)));
    a_d.view_mut((n, 0), (nh, n)).copy_from(&(-(b_h * e_h)));
    DelaySystem::new(a_n, a_d, tau)
}

/// Row selector `E_h` picking the altitude state of an `n`-state model.
pub fn altitude_selector(n: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(1, n);
    e[(0, ALTITUDE_CHANNEL)] = 1.0;
    e
}

pub fn build_closed_loop_dde(
    a_m: &DMatrix<f64>,
    b_m: &DMatrix<f64>,
    op: &OperatorModel,
    e_h: &DMatrix<f64>,
) -> Result<DelaySystem, DelayError> {
    let nr = b_m.ncols();
    if nr <= ALTITUDE_CHANNEL {
        return Err(DelayError::Dimension("reference has no altitude channel".into()));
    }
    build_closed_loop_dde_general(
        a_m,
        b_m,
        &DMatrix::from_element(1, 1, op.a_h()),
        &DMatrix::from_element(1, 1, op.b_h()),
        &op.c_h_matrix(nr),
        &op.d_h_matrix(nr),
        e_h,
        op.delay,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Chebyshev order `N`.
    pub order: usize,
    /// Candidates left of `−r_cut` are ignored.
    pub r_cut: f64,
    pub newton_iterations: usize,
    /// Number of discretisation eigenvalues refined by Newton.
    pub candidates: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { order: 32, r_cut: 50.0, newton_iterations: 50, candidates: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RightmostRoot {
    pub root: C64,
    /// False when Newton did not confirm the estimate.
    pub refined: bool,
    pub residual: f64,
}

/// Chebyshev points `x_i = cos(iπ/N)` and the differentiation matrix on them.
pub fn chebyshev(order: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = order;
    let x: Vec<f64> = (0..=n).map(|i| (std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
    let c = |i: usize| {
        let base = if i == 0 || i == n { 2.0 } else { 1.0 };
        if i.is_multiple_of(2) {
            base
        } else {
            -base
        }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// Generator discretisation for `μ̇ = 𝒜_n μ + U Vᵀ μ(t−τ)`.
fn generator_matrix(sys: &DelaySystem, u: &DMatrix<f64>, v: &DMatrix<f64>, order: usize) -> DMatrix<f64> {
    let d = sys.dim();
    let r = u.ncols();
    let n = order;
    let (_, dx) = chebyshev(n);
    // θ = τ (x − 1)/2 maps [−1, 1] onto [−τ, 0].
    let dtheta = dx * (2.0 / sys.tau);
    let size = d + r * n;
    let mut m = DMatrix::zeros(size, size);
    m.view_mut((0, 0), (d, d)).copy_from(&sys.a_n);
    m.view_mut((0, d + (n - 1) * r), (d, r)).copy_from(u);
    let vt = v.transpose();
    let eye = DMatrix::<f64>::identity(r, r);
    for i in 1..=n {
        let row = d + (i - 1) * r;
        m.view_mut((row, 0), (r, d)).copy_from(&(&vt * dtheta[(i, 0)]));
        for j in 1..=n {
            m.view_mut((row, d + (j - 1) * r), (r, r)).copy_from(&(&eye * dtheta[(i, j)]));
        }
    }
    m
}

/// Newton on `det T(s)`: `s ← s − 1 / tr(T⁻¹ T')`.
fn newton_refine(sys: &DelaySystem, start: C64, iterations: usize) -> Option<C64> {
    let mut s = start;
    for _ in 0..iterations {
        let t = sys.characteristic_matrix(s);
        let dt = sys.characteristic_derivative(s);
        // A singular T(s) means s is already a root to working precision.
        let Some(x) = t.lu().solve(&dt) else { return Some(s) };
        let tr = x.trace();
        if tr.norm() == 0.0 || !tr.is_finite() {
            return None;
        }
        let step = tr.inv();
        s -= step;
        if !s.is_finite() {
            return None;
        }
        if step.norm() <= 1e-13 * s.norm().max(1.0) {
            return Some(s);
        }
    }
    Some(s)
}

fn rightmost_eigenvalue(m: &DMatrix<f64>) -> C64 {
    linalg::eigenvalues(m)
        .into_iter()
        .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.abs().total_cmp(&b.im.abs())))
        .unwrap_or(C64::new(f64::NEG_INFINITY, 0.0))
}

/// Rightmost characteristic root of the delay system.
pub fn rightmost_root(sys: &DelaySystem, opts: &RootOptions) -> Result<RightmostRoot, DelayError> {
    if opts.order < 2 {
        return Err(DelayError::Range(format!("Chebyshev order must be at least 2, got {}", opts.order)));
    }
    let tol = 1e-8 * sys.scale();
    let svd = sys.a_d.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-12 * smax.max(f64::MIN_POSITIVE)).count();

    if sys.tau == 0.0 || rank == 0 {
        let base = if sys.tau == 0.0 { &sys.a_n + &sys.a_d } else { sys.a_n.clone() };
        let root = rightmost_eigenvalue(&base);
        let residual = sys.residual(root);
        return Ok(RightmostRoot { root, refined: true, residual });
    }

    // Singular values are sorted; keep the leading `rank` triplets.
    let u_full = svd.u.as_ref().expect("left vectors requested");
    let vt_full = svd.v_t.as_ref().expect("right vectors requested");
    let mut u = DMatrix::zeros(sys.dim(), rank);
    let mut v = DMatrix::zeros(sys.dim(), rank);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    for (k, &idx) in order.iter().take(rank).enumerate() {
        u.set_column(k, &(u_full.column(idx) * svd.singular_values[idx]));
        v.set_column(k, &vt_full.row(idx).transpose());
    }

    let gen = generator_matrix(sys, &u, &v, opts.order);
    let mut candidates: Vec<C64> = linalg::eigenvalues(&gen)
        .into_iter()
        .filter(|l| l.re > -opts.r_cut && l.im >= -1e-9)
        .collect();
    if candidates.is_empty() {
        return Err(DelayError::NoRoots(opts.r_cut));
    }
    candidates.sort_by(|a, b| b.re.total_cmp(&a.re));
    let estimate = candidates[0];

    let mut best: Option<(C64, f64)> = None;
    for &c in candidates.iter().take(opts.candidates) {
        let Some(s) = newton_refine(sys, c, opts.newton_iterations) else { continue };
        let residual = sys.residual(s);
        if residual < tol && best.is_none_or(|(b, _)| s.re > b.re) {
            best = Some((s, residual));
        }
    }
    Ok(match best {
        Some((root, residual)) => RightmostRoot { root: conj_upper(root), refined: true, residual },
        None => RightmostRoot { root: estimate, refined: false, residual: sys.residual(estimate) },
    })
}

fn conj_upper(s: C64) -> C64 {
    if s.im < 0.0 {
        s.conj()
    } else {
        s
    }
}

/// Evenly spaced sweep `lo, …, hi` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl SweepRange {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self, DelayError> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo || count == 0 || (count == 1 && hi != lo) {
            return Err(DelayError::Range(format!("[{lo}, {hi}] with {count} points")));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.lo + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCell {
    pub kp: f64,
    pub tp: f64,
    /// NaN when the root could not be computed.
    pub re: f64,
    pub im: f64,
    pub refined: bool,
}

impl StabilityCell {
    pub fn is_stable(&self) -> bool {
        self.re < 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMap {
    pub kp: Vec<f64>,
    pub tp: Vec<f64>,
    /// Row-major over `K_p`, then `T_p`.
    pub cells: Vec<StabilityCell>,
}

impl StabilityMap {
    pub fn cell(&self, i_kp: usize, i_tp: usize) -> &StabilityCell {
        &self.cells[i_kp * self.tp.len() + i_tp]
    }

    pub fn stable_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_stable()).count()
    }

    pub fn unstable_count(&self) -> usize {
        self.cells.iter().filter(|c| c.re >= 0.0).count()
    }

    pub fn failed_count(&self) -> usize {
        self.cells.iter().filter(|c| c.re.is_nan()).count()
    }
}

/// Reference model and operator delay, with the operator gains left free.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityProblem {
    pub a_m: DMatrix<f64>,
    pub b_m: DMatrix<f64>,
    pub e_h: DMatrix<f64>,
    pub delay: f64,
}

impl StabilityProblem {
    pub fn root_at(&self, kp: f64, tp: f64, opts: &RootOptions) -> Result<RightmostRoot, DelayError> {
        let op = realize_operator(kp, tp, self.delay)?;
        let sys = build_closed_loop_dde(&self.a_m, &self.b_m, &op, &self.e_h)?;
        rightmost_root(&sys, opts)
    }
}

/// Rightmost root over a `K_p × T_p` grid, evaluated in parallel.
pub fn stability_map(
    problem: &StabilityProblem,
    kp: &SweepRange,
    tp: &SweepRange,
    opts: &RootOptions,
) -> Result<StabilityMap, DelayError> {
    if !(kp.lo > 0.0 && tp.lo > 0.0) {
        return Err(DelayError::Range("operator gains must be positive".into()));
    }
    let kps = kp.values();
    let tps = tp.values();
    let cells = (0..kps.len() * tps.len())
        .into_par_iter()
        .map(|idx| {
            let (k, t) = (kps[idx / tps.len()], tps[idx % tps.len()]);
            match problem.root_at(k, t, opts) {
                Ok(r) => StabilityCell { kp: k, tp: t, re: r.root.re, im: r.root.im, refined: r.refined },
                Err(_) => StabilityCell { kp: k, tp: t, re: f64::NAN, im: f64::NAN, refined: false },
            }
        })
        .collect();
    Ok(StabilityMap { kp: kps, tp: tps, cells })
}
