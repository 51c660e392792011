//! Small dense linear-algebra kernels: spectra, Lyapunov and Riccati solves,
//! and composite Simpson quadrature.
//!
//! Matrices here are at most a few dozen rows, so the Lyapunov solver uses the
//! Kronecker formulation with one step of iterative refinement.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::LinalgError;

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m)
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(m: &DMatrix<f64>) -> bool {
    spectral_abscissa(m) < 0.0
}

/// Solves `Mᵀ P + P M = -Q` for symmetric `P`. `M` must be Hurwitz.
pub fn lyapunov(m: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let n = m.nrows();
    if m.ncols() != n || q.shape() != (n, n) {
        return Err(LinalgError::Dimension(format!(
            "lyapunov: M is {:?}, Q is {:?}",
            m.shape(),
            q.shape()
        )));
    }
    let abscissa = spectral_abscissa(m);
    if abscissa >= 0.0 {
        return Err(LinalgError::NotHurwitz { abscissa });
    }

    let mut kron = DMatrix::<f64>::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for l in 0..n {
                kron[(row, l + j * n)] += m[(l, i)];
                kron[(row, i + l * n)] += m[(l, j)];
            }
        }
    }
    let rhs = DVector::from_iterator(n * n, q.iter().map(|v| -v));
    let lu = kron.clone().lu();
    let mut x = lu.solve(&rhs).ok_or(LinalgError::Singular {
        context: "lyapunov",
    })?;
    let resid = &rhs - &kron * &x;
    if let Some(dx) = lu.solve(&resid) {
        x += dx;
    }
    let p = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// Frobenius norm of `Mᵀ P + P M + Q`.
pub fn lyapunov_residual(m: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (m.transpose() * p + p * m + q).norm()
}

fn log_abs_det(m: &DMatrix<f64>) -> Option<f64> {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut acc = 0.0;
    for i in 0..u.nrows() {
        let d = u[(i, i)].abs();
        if d == 0.0 {
            return None;
        }
        acc += d.ln();
    }
    Some(acc)
}

/// Stabilizing solution of the continuous algebraic Riccati equation
/// `AᵀX + XA − XBR⁻¹BᵀX + Q = 0`.
///
/// Matrix-sign iteration on the Hamiltonian, followed by Newton–Kleinman
/// refinement steps.
pub fn care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>, LinalgError> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(LinalgError::Dimension("care: inconsistent A, B, Q, R".into()));
    }
    let r_inv = r.clone().try_inverse().ok_or(LinalgError::Singular { context: "care: R" })?;
    let g = b * &r_inv * b.transpose();

    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    const MAX_ITER: usize = 200;
    let dim = (2 * n) as f64;
    let mut z = h;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or(LinalgError::Singular { context: "care: sign iteration" })?;
        let c = match log_abs_det(&z) {
            Some(l) => (l / dim).exp(),
            None => return Err(LinalgError::Singular { context: "care: sign iteration" }),
        };
        let next = (&z / c + z_inv * c) * 0.5;
        let delta = (&next - &z).norm();
        let scale = next.norm();
        z = next;
        if delta <= 1e-13 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence { context: "care: sign iteration", iterations: MAX_ITER });
    }

    let w11 = z.view((0, 0), (n, n)).into_owned();
    let w12 = z.view((0, n), (n, n)).into_owned();
    let w21 = z.view((n, 0), (n, n)).into_owned();
    let w22 = z.view((n, n), (n, n)).into_owned();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::<f64>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w12);
    lhs.view_mut((n, 0), (n, n)).copy_from(&(&w22 + &eye));
    let mut rhs = DMatrix::<f64>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(&w11 + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-&w21));
    let x = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|_| LinalgError::Singular { context: "care: subspace solve" })?;
    let mut x = (&x + x.transpose()) * 0.5;

    for _ in 0..3 {
        let k = &r_inv * b.transpose() * &x;
        let a_cl = a - b * &k;
        let rhs = q + k.transpose() * r * &k;
        match lyapunov(&a_cl, &rhs) {
            Ok(next) => x = next,
            Err(_) => break,
        }
    }
    Ok(x)
}

/// Composite Simpson rule on `[a, b]`; `panels` is rounded up to an even count.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}
