//! Transverse vibration of a damped cantilever arm carrying a rotor at its tip.
//!
//! Each arm is an Euler–Bernoulli beam clamped at the hub. The tip mass enters
//! the frequency equation through the ratio `m̄ = m_r / m_c`; mode shapes are
//! the undamped ones and damping is attached modally as `σ'_c = σ_c / (ρ_c A_c)`.
//! Elastic states are scaled by the tip value of each mode, so the tip
//! deflection of an arm is the plain sum of its modal displacements.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix4};

use crate::error::ModalError;
use crate::linalg::simpson;

/// Panel count used by the quadrature checks.
pub const QUADRATURE_PANELS: usize = 10_000;

const BISECTION_TOL: f64 = 1e-12;
const NEWTON_POLISH_STEPS: usize = 3;

/// Material and geometric description of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    /// Arm length `L_c` (m).
    pub length: f64,
    /// Density `ρ_c` (kg/m³).
    pub density: f64,
    /// Young's modulus `E_c` (Pa).
    pub youngs_modulus: f64,
    /// Cross-section area `A_c` (m²).
    pub area: f64,
    /// Second moment of area `J_c` (m⁴).
    pub area_moment: f64,
    /// External damping coefficient `σ_c` (N·s/m²).
    pub damping: f64,
    /// Rotor mass at the free end `m_r` (kg). Zero gives the clamped-free arm.
    pub tip_mass: f64,
}

impl BeamSpec {
    pub fn new(
        length: f64,
        density: f64,
        youngs_modulus: f64,
        area: f64,
        area_moment: f64,
        damping: f64,
        tip_mass: f64,
    ) -> Result<Self, ModalError> {
        let spec = Self { length, density, youngs_modulus, area, area_moment, damping, tip_mass };
        spec.validate()?;
        Ok(spec)
    }

    /// Solid rectangular section of the given width and height (m).
    pub fn rectangular(
        length: f64,
        density: f64,
        youngs_modulus: f64,
        width: f64,
        height: f64,
        damping: f64,
        tip_mass: f64,
    ) -> Result<Self, ModalError> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("width", width));
        }
        if !(height > 0.0 && height.is_finite()) {
            return Err(invalid("height", height));
        }
        Self::new(
            length,
            density,
            youngs_modulus,
            width * height,
            width * height.powi(3) / 12.0,
            damping,
            tip_mass,
        )
    }

    pub fn validate(&self) -> Result<(), ModalError> {
        let positive = [
            ("length", self.length),
            ("density", self.density),
            ("youngs_modulus", self.youngs_modulus),
            ("area", self.area),
            ("area_moment", self.area_moment),
            ("damping", self.damping),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, v));
            }
        }
        if !(self.tip_mass >= 0.0 && self.tip_mass.is_finite()) {
            return Err(ModalError::InvalidBeam {
                field: "tip_mass",
                reason: format!("must be non-negative and finite, got {}", self.tip_mass),
            });
        }
        Ok(())
    }

    /// Mass per unit length `ρ_c A_c` (kg/m).
    pub fn mass_per_length(&self) -> f64 {
        self.density * self.area
    }

    /// Arm mass `m_c = ρ_c A_c L_c`.
    pub fn arm_mass(&self) -> f64 {
        self.mass_per_length() * self.length
    }

    /// `m̄ = m_r / m_c`.
    pub fn mass_ratio(&self) -> f64 {
        self.tip_mass / self.arm_mass()
    }

    /// `√(E_c J_c / (ρ_c A_c))` (m²/s).
    pub fn stiffness_speed(&self) -> f64 {
        (self.youngs_modulus * self.area_moment / self.mass_per_length()).sqrt()
    }

    /// `σ'_c = σ_c / (ρ_c A_c)` (1/s).
    pub fn normalized_damping(&self) -> f64 {
        self.damping / self.mass_per_length()
    }
}

fn invalid(field: &'static str, v: f64) -> ModalError {
    ModalError::InvalidBeam { field, reason: format!("must be positive and finite, got {v}") }
}

/// Residual of the frequency equation in its quotient form (poles where cos β̄ cosh β̄ = 0),
/// `1 + 1/(cos β̄ cosh β̄) − m̄ β̄ (tan β̄ − tanh β̄)`.
pub fn frequency_residual(beta_bar: f64, mass_ratio: f64) -> f64 {
    1.0 + 1.0 / (beta_bar.cos() * beta_bar.cosh())
        - mass_ratio * beta_bar * (beta_bar.tan() - beta_bar.tanh())
}

// Quotient form times cos β̄: `sech β̄ + cos β̄ + m̄ β̄ (cos β̄ tanh β̄ − sin β̄)`.
// Same roots, no poles, and O(1) for every mode.
fn regular_form(b: f64, mr: f64) -> f64 {
    let (s, c) = b.sin_cos();
    let sech = 1.0 / b.cosh();
    sech + c + mr * b * (c * b.tanh() - s)
}

fn regular_form_derivative(b: f64, mr: f64) -> f64 {
    let (s, c) = b.sin_cos();
    let (th, sech) = (b.tanh(), 1.0 / b.cosh());
    -sech * th - s + mr * (c * th - s) + mr * b * (-s * th + c * sech * sech - c)
}

// Size of the terms summed in `regular_form`, which bounds its rounding error.
fn regular_form_scale(b: f64, mr: f64) -> f64 {
    1.0 + mr * b
}

/// First `n_modes` roots `β̄_j` of the frequency equation for tip-mass ratio `m̄`.
///
/// Root `j` is bracketed in `((j−1)π, jπ)`: it lies between the clamped-pinned
/// root (the `m̄ → ∞` limit) and the clamped-free root (`m̄ = 0`), and the
/// pole-free form changes sign across every multiple of π. Bisection narrows
/// the bracket to 1e−12 and a few Newton steps polish the result.
pub fn solve_frequency_roots(mass_ratio: f64, n_modes: usize) -> Result<Vec<f64>, ModalError> {
    if !(mass_ratio >= 0.0) || !mass_ratio.is_finite() {
        return Err(ModalError::NegativeMassRatio(mass_ratio));
    }
    if n_modes == 0 {
        return Err(ModalError::NoModes);
    }
    let mut roots = Vec::with_capacity(n_modes);
    for j in 1..=n_modes {
        let mut lo = (j - 1) as f64 * PI;
        let mut hi = j as f64 * PI;
        let mut f_lo = regular_form(lo, mass_ratio);
        let f_hi = regular_form(hi, mass_ratio);
        if f_lo * f_hi > 0.0 {
            return Err(ModalError::RootNotConverged { mode: j, residual: f_lo.abs().min(f_hi.abs()) });
        }
        let mut iterations = 0;
        while hi - lo > BISECTION_TOL * hi.max(1.0) && iterations < 200 {
            let mid = 0.5 * (lo + hi);
            let f_mid = regular_form(mid, mass_ratio);
            if f_mid == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if f_lo * f_mid < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                f_lo = f_mid;
            }
            iterations += 1;
        }
        let mut root = 0.5 * (lo + hi);
        let mut best = regular_form(root, mass_ratio).abs();
        for _ in 0..NEWTON_POLISH_STEPS {
            let d = regular_form_derivative(root, mass_ratio);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let cand = root - regular_form(root, mass_ratio) / d;
            let r = regular_form(cand, mass_ratio).abs();
            if cand > (j - 1) as f64 * PI && cand < j as f64 * PI && r < best {
                root = cand;
                best = r;
            } else {
                break;
            }
        }
        let scaled = best / regular_form_scale(root, mass_ratio);
        if !(scaled < 1e-9) || root <= 0.0 {
            return Err(ModalError::RootNotConverged { mode: j, residual: scaled });
        }
        roots.push(root);
    }
    Ok(roots)
}

/// `ω̄ = (β̄/L_c)² √(E_c J_c / (ρ_c A_c))`.
pub fn natural_frequency(beta_bar: f64, beam: &BeamSpec) -> f64 {
    let beta = beta_bar / beam.length;
    beta * beta * beam.stiffness_speed()
}

/// `β̄* = (cos β̄ + cosh β̄) / (sin β̄ + sinh β̄)`.
pub fn shape_ratio(beta_bar: f64) -> f64 {
    (beta_bar.cos() + beta_bar.cosh()) / (beta_bar.sin() + beta_bar.sinh())
}

/// Closed form of `∫₀^L [(cos βx − cosh βx) − β̄*(sin βx − sinh βx)]² dx`.
pub fn normalization_integral(beta_bar: f64, length: f64) -> f64 {
    let b = beta_bar;
    let beta = b / length;
    let bs = shape_ratio(b);
    let bs2 = bs * bs;
    let (s, c) = b.sin_cos();
    let (sh, ch) = (b.sinh(), b.cosh());
    let (s2, c2) = (2.0 * b).sin_cos();
    let (sh2, ch2) = ((2.0 * b).sinh(), (2.0 * b).cosh());
    let bracket = -bs2 * s2 + bs2 * sh2 + 4.0 * bs2 * c * sh - 4.0 * (bs2 + 1.0) * s * ch
        + 2.0 * bs * c2
        - 2.0 * bs * ch2
        + 8.0 * bs * s * sh
        + 4.0 * b
        + s2
        + sh2
        - 4.0 * c * sh;
    bracket / (4.0 * beta)
}

/// `γ̄_j = 1/√(ρ_c A_c γ_c)`, making `∫ ρ_c A_c W_j² = 1`.
pub fn normalization_constant(beta_bar: f64, beam: &BeamSpec) -> Result<f64, ModalError> {
    normalization_constant_for(0, beta_bar, beam)
}

fn normalization_constant_for(mode: usize, beta_bar: f64, beam: &BeamSpec) -> Result<f64, ModalError> {
    let gamma_c = normalization_integral(beta_bar, beam.length);
    if !(gamma_c > 0.0) || !gamma_c.is_finite() {
        return Err(ModalError::Conditioning { mode, gamma_c });
    }
    Ok(1.0 / (beam.mass_per_length() * gamma_c).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// 1-based mode number.
    pub index: usize,
    pub beta_bar: f64,
    /// `β_j = β̄_j / L_c` (1/m).
    pub beta: f64,
    /// Natural frequency (rad/s).
    pub omega: f64,
    pub gamma_bar: f64,
    pub beta_star: f64,
    /// `W_j(L_c)`.
    pub tip_value: f64,
    length: f64,
}

impl Mode {
    pub fn new(index: usize, beta_bar: f64, beam: &BeamSpec) -> Result<Self, ModalError> {
        let gamma_bar = normalization_constant_for(index, beta_bar, beam)?;
        let mut mode = Self {
            index,
            beta_bar,
            beta: beta_bar / beam.length,
            omega: natural_frequency(beta_bar, beam),
            gamma_bar,
            beta_star: shape_ratio(beta_bar),
            tip_value: 0.0,
            length: beam.length,
        };
        mode.tip_value = mode.shape_unchecked(beam.length);
        Ok(mode)
    }

    fn shape_unchecked(&self, x: f64) -> f64 {
        let bx = self.beta * x;
        self.gamma_bar * ((bx.cos() - bx.cosh()) - self.beta_star * (bx.sin() - bx.sinh()))
    }

    /// `W_j(x̄)` for `0 ≤ x̄ ≤ L_c`.
    pub fn shape(&self, x: f64) -> Result<f64, ModalError> {
        let slack = 1e-12 * self.length;
        if !(x >= -slack && x <= self.length + slack) {
            return Err(ModalError::OutOfDomain { x, length: self.length });
        }
        Ok(self.shape_unchecked(x.clamp(0.0, self.length)))
    }
}

/// Mode shape evaluation; see [`Mode::shape`].
pub fn mode_shape_eval(mode: &Mode, x: f64) -> Result<f64, ModalError> {
    mode.shape(x)
}

/// Solved modes of one arm, shared by all four arms.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    pub beam: BeamSpec,
    pub modes: Vec<Mode>,
    /// `σ'_c` (1/s).
    pub sigma_prime: f64,
}

impl ModalBasis {
    pub fn new(beam: BeamSpec, n_modes: usize) -> Result<Self, ModalError> {
        beam.validate()?;
        let roots = solve_frequency_roots(beam.mass_ratio(), n_modes)?;
        let modes = roots
            .iter()
            .enumerate()
            .map(|(i, &b)| Mode::new(i + 1, b, &beam))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { beam, modes, sigma_prime: beam.normalized_damping() })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Elastic states per arm (`2 × n_modes`).
    pub fn arm_states(&self) -> usize {
        2 * self.modes.len()
    }

    pub fn max_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.omega).fold(0.0, f64::max)
    }

    /// Steady arm state under a constant tip force: `z_j = W_j²(L_c) F / ω̄_j²`.
    pub fn static_arm_state(&self, force: f64) -> DVector<f64> {
        let mut z = DVector::zeros(self.arm_states());
        for (j, m) in self.modes.iter().enumerate() {
            z[2 * j] = m.tip_value * m.tip_value * force / (m.omega * m.omega);
        }
        z
    }
}

/// `G_jl = ∫₀^L ρ_c A_c W_j W_l dx̄` by composite Simpson.
pub fn orthogonality_gram(basis: &ModalBasis) -> DMatrix<f64> {
    let n = basis.n_modes();
    let rho_a = basis.beam.mass_per_length();
    let length = basis.beam.length;
    let mut gram = DMatrix::zeros(n, n);
    for j in 0..n {
        for l in j..n {
            let (mj, ml) = (&basis.modes[j], &basis.modes[l]);
            let v = simpson(
                |x| rho_a * mj.shape_unchecked(x) * ml.shape_unchecked(x),
                0.0,
                length,
                QUADRATURE_PANELS,
            );
            gram[(j, l)] = v;
            gram[(l, j)] = v;
        }
    }
    gram
}

/// Gram matrix of the inner product that includes the rotor at the tip,
/// `∫ ρ_c A_c W_j W_l dx̄ + m_r W_j(L_c) W_l(L_c)`. Its off-diagonal entries
/// vanish for any tip mass; it coincides with [`orthogonality_gram`] at `m_r = 0`.
pub fn tip_mass_gram(basis: &ModalBasis) -> DMatrix<f64> {
    let mut gram = orthogonality_gram(basis);
    let n = basis.n_modes();
    for j in 0..n {
        for l in 0..n {
            gram[(j, l)] += basis.beam.tip_mass * basis.modes[j].tip_value * basis.modes[l].tip_value;
        }
    }
    gram
}

/// Per-arm block: state `(z₁, ż₁, z₂, ż₂, …)`, input the tip thrust `F_k`.
pub fn assemble_arm_block(basis: &ModalBasis) -> (DMatrix<f64>, DVector<f64>) {
    let ns = basis.arm_states();
    let mut a = DMatrix::zeros(ns, ns);
    let mut b = DVector::zeros(ns);
    for (j, m) in basis.modes.iter().enumerate() {
        let i = 2 * j;
        a[(i, i + 1)] = 1.0;
        a[(i + 1, i)] = -m.omega * m.omega;
        a[(i + 1, i + 1)] = -basis.sigma_prime;
        b[i + 1] = m.tip_value * m.tip_value;
    }
    (a, b)
}

/// Elastic dynamics of all four arms, `ż_e = A_e z_e + B_e Λ u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticSystem {
    pub a_e: DMatrix<f64>,
    pub b_ze: DMatrix<f64>,
    pub b_e: DMatrix<f64>,
    arm_states: usize,
}

impl ElasticSystem {
    pub fn arm_states(&self) -> usize {
        self.arm_states
    }

    pub fn n_states(&self) -> usize {
        4 * self.arm_states
    }

    /// Tip deflections `w_k(L_c)` of the four arms.
    pub fn tip_displacements(&self, z_e: &DVector<f64>) -> [f64; 4] {
        let ns = self.arm_states;
        std::array::from_fn(|k| tip_displacement(&z_e.as_slice()[k * ns..(k + 1) * ns]))
    }
}

pub fn assemble_elastic_system(
    basis: &ModalBasis,
    force_map: &Matrix4<f64>,
) -> Result<ElasticSystem, ModalError> {
    let inv = force_map.try_inverse().ok_or(ModalError::SingularForceMap)?;
    let (arm_a, arm_b) = assemble_arm_block(basis);
    let ns = basis.arm_states();
    let mut a_e = DMatrix::zeros(4 * ns, 4 * ns);
    let mut b_ze = DMatrix::zeros(4 * ns, 4);
    for k in 0..4 {
        a_e.view_mut((k * ns, k * ns), (ns, ns)).copy_from(&arm_a);
        b_ze.view_mut((k * ns, k), (ns, 1)).copy_from(&arm_b);
    }
    let inv_dyn = DMatrix::from_iterator(4, 4, inv.iter().copied());
    let b_e = &b_ze * inv_dyn;
    Ok(ElasticSystem { a_e, b_ze, b_e, arm_states: ns })
}

/// Tip deflection of one arm from its interleaved state `(z₁, ż₁, z₂, ż₂, …)`.
pub fn tip_displacement(z_arm: &[f64]) -> f64 {
    z_arm.iter().step_by(2).sum()
}

/// Height of a rectangular section giving first-mode frequency `target_omega`.
///
/// Width, tip mass and material are held fixed; the section height is found
/// by bisection on `ω̄₁(h)`, which increases monotonically with `h`.
pub fn calibrate_section_height(
    length: f64,
    density: f64,
    youngs_modulus: f64,
    width: f64,
    tip_mass: f64,
    target_omega: f64,
) -> Result<f64, ModalError> {
    let first = |h: f64| -> Result<f64, ModalError> {
        let beam = BeamSpec::rectangular(length, density, youngs_modulus, width, h, 1.0, tip_mass)?;
        let roots = solve_frequency_roots(beam.mass_ratio(), 1)?;
        Ok(natural_frequency(roots[0], &beam))
    };
    let (mut lo, mut hi) = (1e-6 * length, length);
    if first(lo)? > target_omega || first(hi)? < target_omega {
        return Err(ModalError::InvalidBeam {
            field: "height",
            reason: format!("target frequency {target_omega} rad/s not attainable"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if first(mid)? < target_omega {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn beam(tip_mass: f64) -> BeamSpec {
        BeamSpec::rectangular(0.21, 1370.0, 2.91e9, 0.012, 0.0039, 0.3, tip_mass).unwrap()
    }

    // Bisection on cos β cosh β = −1, independent of the solver above.
    fn clamped_free_oracle(j: usize) -> f64 {
        let f = |b: f64| b.cos() * b.cosh() + 1.0;
        let (mut lo, mut hi) = ((j as f64 - 0.5) * PI - 0.5, (j as f64 - 0.5) * PI + 0.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn clamped_free_roots() {
        let roots = solve_frequency_roots(0.0, 3).unwrap();
        for (j, r) in roots.iter().enumerate() {
            assert!((r - clamped_free_oracle(j + 1)).abs() < 1e-10);
            assert!(frequency_residual(*r, 0.0).abs() < 1e-10);
        }
        assert!((roots[0] - 1.87510).abs() < 1e-5);
        assert!((roots[1] - 4.69409).abs() < 1e-5);
        assert!((roots[2] - 7.85476).abs() < 1e-5);
    }

    #[test]
    fn unit_mass_ratio_lowers_first_root() {
        let r = solve_frequency_roots(1.0, 1).unwrap()[0];
        assert!(r > 0.0 && r < 1.87510);
        assert!(frequency_residual(r, 1.0).abs() < 1e-12);
    }

    #[test]
    fn huge_tip_mass_approaches_pinned_limit() {
        let roots = solve_frequency_roots(1e6, 2).unwrap();
        // β̄₁⁴ ≈ 3/m̄ for a dominant tip mass; β̄₂ → first root of tan β = tanh β.
        assert_relative_eq!(roots[0], (3.0f64 / 1e6).powf(0.25), max_relative = 1e-3);
        assert!((roots[1] - 3.92660).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(solve_frequency_roots(-0.1, 3), Err(ModalError::NegativeMassRatio(_))));
        assert!(matches!(solve_frequency_roots(0.0, 0), Err(ModalError::NoModes)));
        assert!(BeamSpec::rectangular(0.21, 1370.0, -1.0, 0.01, 0.004, 0.3, 0.0).is_err());
    }

    #[test]
    fn frequency_scaling() {
        let b = beam(0.0);
        assert_eq!(natural_frequency(0.0, &b), 0.0);
        let mut long = b;
        long.length *= 2.0;
        assert_relative_eq!(natural_frequency(1.875, &long), natural_frequency(1.875, &b) / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn normalization_matches_quadrature() {
        for tip in [0.0, 0.01] {
            let b = beam(tip);
            let basis = ModalBasis::new(b, 3).unwrap();
            for m in &basis.modes {
                let beta = m.beta;
                let bs = m.beta_star;
                let quad = simpson(
                    |x| {
                        let bx = beta * x;
                        let v = (bx.cos() - bx.cosh()) - bs * (bx.sin() - bx.sinh());
                        v * v
                    },
                    0.0,
                    b.length,
                    QUADRATURE_PANELS,
                );
                assert_relative_eq!(normalization_integral(m.beta_bar, b.length), quad, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn normalization_scales_with_line_density() {
        let b = beam(0.0);
        let mut heavy = b;
        heavy.density *= 4.0;
        let g = normalization_constant(1.875, &b).unwrap();
        let gh = normalization_constant(1.875, &heavy).unwrap();
        assert_relative_eq!(gh, g / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn shape_domain_is_checked() {
        let basis = ModalBasis::new(beam(0.0), 3).unwrap();
        let m = &basis.modes[0];
        assert_eq!(m.shape(0.0).unwrap(), 0.0);
        assert!(matches!(m.shape(0.3), Err(ModalError::OutOfDomain { .. })));
        assert!(m.shape(-0.01).is_err());
    }

    #[test]
    fn arm_block_spectrum() {
        let basis = ModalBasis::new(beam(0.0), 3).unwrap();
        let (a, b) = assemble_arm_block(&basis);
        assert!(crate::linalg::spectral_abscissa(&a) < 0.0);
        for (j, m) in basis.modes.iter().enumerate() {
            assert_eq!(b[2 * j], 0.0);
            assert_relative_eq!(b[2 * j + 1], m.tip_value * m.tip_value);
        }
    }

    #[test]
    fn tip_sum() {
        assert_eq!(tip_displacement(&[0.0; 6]), 0.0);
        assert_eq!(tip_displacement(&[1.0, 9.0, 2.0, 9.0, 3.5, 9.0]), 6.5);
    }

    #[test]
    fn calibration_hits_target() {
        let h = calibrate_section_height(0.21, 1370.0, 2.91e9, 0.012, 0.0, 131.0).unwrap();
        let b = BeamSpec::rectangular(0.21, 1370.0, 2.91e9, 0.012, h, 0.3, 0.0).unwrap();
        let basis = ModalBasis::new(b, 1).unwrap();
        assert_relative_eq!(basis.modes[0].omega, 131.0, max_relative = 1e-9);
    }

    #[test]
    fn regular_form_derivative_matches_differences() {
        for mr in [0.0, 0.3, 2.0] {
            for b in [0.7, 3.0, 9.5, 20.0] {
                let h = 1e-6;
                let fd = (regular_form(b + h, mr) - regular_form(b - h, mr)) / (2.0 * h);
                assert_relative_eq!(regular_form_derivative(b, mr), fd, epsilon = 1e-7, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn high_modes_converge() {
        let roots = solve_frequency_roots(0.0, 12).unwrap();
        assert_relative_eq!(roots[11], 11.5 * PI, epsilon = 1e-9);
    }

    #[test]
    fn heavy_tip_limits() {
        // Rigid-mass-on-spring limit for the first root, clamped-pinned for the second.
        let mr = 1e6;
        let roots = solve_frequency_roots(mr, 2).unwrap();
        assert_relative_eq!(roots[0], (3.0 / mr).powf(0.25), max_relative = 1e-6);
        assert!((roots[1] - 3.92660).abs() < 1e-3);
    }
}
