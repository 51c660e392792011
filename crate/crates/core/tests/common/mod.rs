//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};

pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "no sign change in [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if f_lo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `cos b cosh b = −1`, bracketed around `(j − ½)π`.
pub fn clamped_free_root(j: usize) -> f64 {
    let centre = (j as f64 - 0.5) * std::f64::consts::PI;
    bisect(|b| b.cos() * b.cosh() + 1.0, centre - 0.5, centre + 0.5)
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Unnormalised clamped-free shape `(cos βx − cosh βx) − β*(sin βx − sinh βx)`.
pub fn raw_shape(beta_bar: f64, length: f64, x: f64) -> f64 {
    let b = beta_bar;
    let star = (b.cos() + b.cosh()) / (b.sin() + b.sinh());
    let bx = b / length * x;
    (bx.cos() - bx.cosh()) - star * (bx.sin() - bx.sinh())
}

/// Principal-branch Lambert W by Halley iteration on `w eʷ = z`.
pub fn lambert_w(z: Complex<f64>, guess: Complex<f64>) -> Complex<f64> {
    let mut w = guess;
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (wp1 * 2.0));
        w -= step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    w
}

/// `μ̇ = A_n μ + A_d μ(t−τ)` from the constant history `μ(θ) = μ₀`, by RK4
/// with cubic Hermite interpolation of the history between grid points.
/// Returns `(t, ‖μ(t)‖)` at every step.
pub fn simulate_dde(
    a_n: &DMatrix<f64>,
    a_d: &DMatrix<f64>,
    tau: f64,
    mu0: &DVector<f64>,
    dt: f64,
    t_end: f64,
) -> Vec<(f64, f64)> {
    let lag = (tau / dt).round() as isize;
    let steps = (t_end / dt).round() as usize;
    let mut xs: Vec<DVector<f64>> = vec![mu0.clone()];
    let mut fs: Vec<DVector<f64>> = Vec::new();
    let zero = DVector::zeros(mu0.len());
    let hist = |xs: &Vec<DVector<f64>>, fs: &Vec<DVector<f64>>, k: isize, frac: f64| -> DVector<f64> {
        if k < 0 {
            return mu0.clone();
        }
        let k = k as usize;
        if frac == 0.0 || k + 1 >= xs.len() {
            return xs[k].clone();
        }
        let (x0, x1) = (&xs[k], &xs[k + 1]);
        let (f0, f1) = (fs.get(k).unwrap_or(&zero), fs.get(k + 1).unwrap_or(&zero));
        let s = frac;
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        x0 * h00 + f0 * (h10 * dt) + x1 * h01 + f1 * (h11 * dt)
    };
    let mut out = vec![(0.0, mu0.norm())];
    for n in 0..steps {
        let x = xs[n].clone();
        let k = n as isize - lag;
        let f = |y: &DVector<f64>, d: &DVector<f64>| a_n * y + a_d * d;
        let k1 = f(&x, &hist(&xs, &fs, k, 0.0));
        fs.push(k1.clone());
        let dh = hist(&xs, &fs, k, 0.5);
        let d1 = hist(&xs, &fs, k + 1, 0.0);
        let k2 = f(&(&x + &k1 * (0.5 * dt)), &dh);
        let k3 = f(&(&x + &k2 * (0.5 * dt)), &dh);
        let k4 = f(&(&x + &k3 * dt), &d1);
        let next = &x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        out.push(((n + 1) as f64 * dt, next.norm()));
        xs.push(next);
    }
    out
}

/// Exponential rate fitted between the peak norms of two windows.
pub fn growth_rate(trace: &[(f64, f64)], early: (f64, f64), late: (f64, f64)) -> f64 {
    let peak = |(a, b): (f64, f64)| {
        trace
            .iter()
            .filter(|(t, _)| *t >= a && *t <= b)
            .map(|p| p.1)
            .fold(0.0, f64::max)
    };
    let (p0, p1) = (peak(early), peak(late));
    let span = 0.5 * (late.0 + late.1) - 0.5 * (early.0 + early.1);
    (p1 / p0).ln() / span
}
