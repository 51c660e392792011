//! Classical fixed-step Runge–Kutta.

use nalgebra::DVector;

/// One RK4 step of size `h`. The closure receives the stage offset as a
/// fraction of the step (`0`, `½`, `½`, `1`) and the stage state.
pub fn rk4_step<F>(y: &DVector<f64>, h: f64, mut f: F) -> DVector<f64>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = f(0.0, y);
    rk4_finish(y, h, k1, f)
}

/// Completes a step whose first stage `k1 = f(0, y)` is already known.
pub fn rk4_finish<F>(y: &DVector<f64>, h: f64, k1: DVector<f64>, mut f: F) -> DVector<f64>
where
    F: FnMut(f64, &DVector<f64>) -> DVector<f64>,
{
    let k2 = f(0.5, &(y + &k1 * (0.5 * h)));
    let k3 = f(0.5, &(y + &k2 * (0.5 * h)));
    let k4 = f(1.0, &(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}
