//! Rightmost roots of scalar delay equations, `x' = a x + b x(t - tau)`.
use flexquad::delay::{rightmost_root, DelaySystem, RootOptions};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = RootOptions::default();
    for (a, b, tau) in [(0.0, -1.0, 1.0), (0.0, -1.0, std::f64::consts::FRAC_PI_2), (0.0, -1.0, 2.0), (-1.0, 0.5, 1.0)] {
        let sys = DelaySystem::new(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b), tau)?;
        let r = rightmost_root(&sys, &opts)?;
        println!(
            "a = {a:>4}, b = {b:>4}, tau = {tau:.4}: s = {:.6} {:+.6}i (residual {:.1e})",
            r.root.re, r.root.im, r.residual
        );
    }
    Ok(())
}
