//! Rigid-body kinematics, rotor mixing, the nonlinear rigid equations of
//! motion and the elastic arm propagation.
//!
//! The rigid state is ordered `(x, y, z, φ, θ, ψ, ẋ, ẏ, ż, φ̇, θ̇, ψ̇)`. Rotor
//! numbering follows the mixer: rotors 2 and 4 produce roll, 1 and 3 pitch.
//! Elastic states never feed back into the rigid equations.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, SVector, Vector3, Vector4};

use crate::error::DynamicsError;
use crate::modal::ElasticSystem;

pub const RIGID_STATES: usize = 12;
pub const INPUTS: usize = 4;
/// Tracked outputs `(x, y, z, ψ)` as indices into the rigid state.
pub const TRACKED_OUTPUTS: [usize; 4] = [0, 1, 2, 5];

/// Vehicle constants. `thrust_factor` and `drag_factor` defaults are assumed
/// values for a 0.5 kg class airframe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrotorParams {
    pub mass: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    /// Rotor inertia `J_r`.
    pub jr: f64,
    pub arm_length: f64,
    /// `k_t` (N·s²).
    pub thrust_factor: f64,
    /// `k_q` (N·m·s²).
    pub drag_factor: f64,
    pub gravity: f64,
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        Self {
            mass: 0.5,
            jx: 4.85e-3,
            jy: 4.85e-3,
            jz: 8.81e-3,
            jr: 3.36e-5,
            arm_length: 0.21,
            thrust_factor: 2.98e-5,
            drag_factor: 1.14e-6,
            gravity: 9.81,
        }
    }
}

impl QuadrotorParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let fields = [
            ("mass", self.mass),
            ("jx", self.jx),
            ("jy", self.jy),
            ("jz", self.jz),
            ("jr", self.jr),
            ("arm_length", self.arm_length),
            ("thrust_factor", self.thrust_factor),
            ("drag_factor", self.drag_factor),
            ("gravity", self.gravity),
        ];
        for (field, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DynamicsError::InvalidParams {
                    field,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Collective input holding hover, `(m g, 0, 0, 0)`.
    pub fn hover_input(&self) -> Vector4<f64> {
        Vector4::new(self.mass * self.gravity, 0.0, 0.0, 0.0)
    }
}

/// `R^B`: body (`𝒢`) to inertial (`ℱ`) rotation for Euler angles `(φ, θ, ψ)`.
pub fn rotation_body_to_inertial(angles: &Vector3<f64>) -> Matrix3<f64> {
    let (sf, cf) = angles[0].sin_cos();
    let (st, ct) = angles[1].sin_cos();
    let (sp, cp) = angles[2].sin_cos();
    Matrix3::new(
        cp * ct,
        cp * st * sf - sp * cf,
        cp * st * cf + sp * sf,
        sp * ct,
        sp * st * sf + cp * cf,
        sp * st * cf - cp * sf,
        -st,
        ct * sf,
        ct * cf,
    )
}

/// `R^υ` with `ω = R^υ υ̇`.
pub fn euler_rate_map(angles: &Vector3<f64>) -> Matrix3<f64> {
    let (st, ct) = angles[1].sin_cos();
    let (sp, cp) = angles[2].sin_cos();
    Matrix3::new(-st, 0.0, 1.0, ct * sp, cp, 0.0, ct * cp, -sp, 0.0)
}

/// `(R^υ)⁻¹`; rejected within 1e−6 of the pitch singularity.
pub fn euler_rate_map_inverse(angles: &Vector3<f64>) -> Result<Matrix3<f64>, DynamicsError> {
    let ct = angles[1].cos();
    if ct.abs() < 1e-6 {
        return Err(DynamicsError::GimbalSingularity { pitch: angles[1] });
    }
    euler_rate_map(angles)
        .try_inverse()
        .ok_or(DynamicsError::GimbalSingularity { pitch: angles[1] })
}

/// Result of allocating a commanded input to the rotors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    /// Rotor thrusts after clipping negative values to zero.
    pub forces: Vector4<f64>,
    pub speeds: Vector4<f64>,
    /// `Ω_g = Ω₁ − Ω₂ + Ω₃ − Ω₄`.
    pub gyro_speed: f64,
    /// Input actually produced by the clipped thrusts.
    pub applied: Vector4<f64>,
    pub saturated: bool,
}

/// Rotor mixing matrices `R^Ωs` and `R^F = R^Ωs / k_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixer {
    pub rotor_map: Matrix4<f64>,
    pub force_map: Matrix4<f64>,
    pub rotor_map_inv: Matrix4<f64>,
    pub force_map_inv: Matrix4<f64>,
    thrust_factor: f64,
}

impl Mixer {
    pub fn new(params: &QuadrotorParams) -> Result<Self, DynamicsError> {
        params.validate()?;
        let (kt, kq) = (params.thrust_factor, params.drag_factor);
        #[rustfmt::skip]
        let rotor_map = Matrix4::new(
            kt,  kt,  kt,  kt,
            0.0, -kt, 0.0, kt,
            -kt, 0.0, kt,  0.0,
            -kq, kq,  -kq, kq,
        );
        let force_map = rotor_map / kt;
        let inv = |m: Matrix4<f64>| {
            m.try_inverse()
                .ok_or_else(|| DynamicsError::Dimension("mixer matrix is singular".into()))
        };
        Ok(Self {
            rotor_map,
            force_map,
            rotor_map_inv: inv(rotor_map)?,
            force_map_inv: inv(force_map)?,
            thrust_factor: kt,
        })
    }

    /// `u = R^Ωs Ω_s` and the gyroscopic speed for non-negative rotor speeds.
    pub fn mix_rotor_speeds(&self, speeds: &[f64; 4]) -> Result<(Vector4<f64>, f64), DynamicsError> {
        for (rotor, &speed) in speeds.iter().enumerate() {
            if !(speed >= 0.0) {
                return Err(DynamicsError::NegativeRotorSpeed { rotor: rotor + 1, speed });
            }
        }
        let squares = Vector4::from_iterator(speeds.iter().map(|w| w * w));
        let gyro = speeds[0] - speeds[1] + speeds[2] - speeds[3];
        Ok((self.rotor_map * squares, gyro))
    }

    /// `F = (R^F)⁻¹ u`.
    pub fn forces_from_input(&self, u: &Vector4<f64>) -> Vector4<f64> {
        self.force_map_inv * u
    }

    /// Rotor thrusts, speeds `Ω_k = √(F_k / k_t)` and the realised input.
    pub fn allocate(&self, u: &Vector4<f64>) -> Allocation {
        let raw = self.forces_from_input(u);
        let saturated = raw.iter().any(|&f| f < 0.0);
        let forces = raw.map(|f| f.max(0.0));
        let speeds = forces.map(|f| (f / self.thrust_factor).sqrt());
        let applied = if saturated { self.force_map * forces } else { *u };
        Allocation {
            forces,
            speeds,
            gyro_speed: speeds[0] - speeds[1] + speeds[2] - speeds[3],
            applied,
            saturated,
        }
    }
}

/// Rigid state; also used to hold its time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidState {
    pub position: Vector3<f64>,
    pub angles: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub rates: Vector3<f64>,
}

impl RigidState {
    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            position: Vector3::new(s[0], s[1], s[2]),
            angles: Vector3::new(s[3], s[4], s[5]),
            velocity: Vector3::new(s[6], s[7], s[8]),
            rates: Vector3::new(s[9], s[10], s[11]),
        }
    }

    pub fn to_vector(&self) -> SVector<f64, RIGID_STATES> {
        let mut v = SVector::<f64, RIGID_STATES>::zeros();
        self.write_into(v.as_mut_slice());
        v
    }

    pub fn write_into(&self, out: &mut [f64]) {
        out[0..3].copy_from_slice(self.position.as_slice());
        out[3..6].copy_from_slice(self.angles.as_slice());
        out[6..9].copy_from_slice(self.velocity.as_slice());
        out[9..12].copy_from_slice(self.rates.as_slice());
    }
}

/// Full vehicle state: rigid part plus the interleaved elastic arm states.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub rigid: RigidState,
    pub elastic: DVector<f64>,
}

impl VehicleState {
    /// True when roll and pitch stay inside the linearised controller's range.
    pub fn attitude_in_range(&self) -> bool {
        self.rigid.angles[0].abs() < std::f64::consts::FRAC_PI_2
            && self.rigid.angles[1].abs() < std::f64::consts::FRAC_PI_2
    }

    pub fn is_finite(&self) -> bool {
        self.rigid.to_vector().iter().all(|v| v.is_finite()) && self.elastic.iter().all(|v| v.is_finite())
    }
}

/// Nonlinear rigid equations of motion driven by `u = (u₁, u₂, u₃, u₄)` and
/// the gyroscopic speed `Ω_g`.
pub fn rigid_derivatives(
    state: &RigidState,
    u: &Vector4<f64>,
    gyro_speed: f64,
    p: &QuadrotorParams,
) -> RigidState {
    let (sf, cf) = state.angles[0].sin_cos();
    let (st, ct) = state.angles[1].sin_cos();
    let (sp, cp) = state.angles[2].sin_cos();
    let thrust = u[0] / p.mass;
    let accel = Vector3::new(
        (cp * st * cf + sp * sf) * thrust,
        (sp * st * cf - cp * sf) * thrust,
        -p.gravity + ct * cf * thrust,
    );
    let (dphi, dtheta, dpsi) = (state.rates[0], state.rates[1], state.rates[2]);
    let ang_accel = Vector3::new(
        dtheta * dpsi * (p.jy - p.jz) / p.jx - p.jr / p.jx * dtheta * gyro_speed
            + p.arm_length / p.jx * u[1],
        dphi * dpsi * (p.jz - p.jx) / p.jy + p.jr / p.jy * dphi * gyro_speed + p.arm_length / p.jy * u[2],
        dphi * dtheta * (p.jx - p.jy) / p.jz + u[3] / p.jz,
    );
    RigidState { position: state.velocity, angles: state.rates, velocity: accel, rates: ang_accel }
}

/// Checks that every effectiveness entry lies in `(0, 1]`.
pub fn validate_effectiveness(effectiveness: &Vector4<f64>) -> Result<(), DynamicsError> {
    for (index, &value) in effectiveness.iter().enumerate() {
        if !(value > 0.0 && value <= 1.0) {
            return Err(DynamicsError::InvalidEffectiveness { index, value });
        }
    }
    Ok(())
}

/// `ż_e = A_e z_e + B_e Λ u`.
pub fn elastic_derivatives(
    system: &ElasticSystem,
    z_e: &DVector<f64>,
    u: &Vector4<f64>,
    effectiveness: &Vector4<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    validate_effectiveness(effectiveness)?;
    if z_e.len() != system.n_states() {
        return Err(DynamicsError::Dimension(format!(
            "elastic state has {} entries, expected {}",
            z_e.len(),
            system.n_states()
        )));
    }
    let lu = DVector::from_iterator(4, u.component_mul(effectiveness).iter().copied());
    Ok(&system.a_e * z_e + &system.b_e * lu)
}

/// `ż_e = A_e z_e + B_ze F` for rotor thrusts already resolved.
pub fn elastic_derivatives_from_forces(
    system: &ElasticSystem,
    z_e: &DVector<f64>,
    forces: &Vector4<f64>,
) -> DVector<f64> {
    let f = DVector::from_iterator(4, forces.iter().copied());
    &system.a_e * z_e + &system.b_ze * f
}

/// Hover linearisation `ẋ_p = A_p x_p + B_p u`, `y_p = C_p x_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    pub a_p: DMatrix<f64>,
    pub b_p: DMatrix<f64>,
    pub c_p: DMatrix<f64>,
}

/// Small-angle linearisation about `ξ̇ = υ = υ̇ = 0`, `u₁ = m g`.
pub fn linearize_hover(p: &QuadrotorParams) -> LinearPlant {
    let n = RIGID_STATES;
    let mut a_p = DMatrix::zeros(n, n);
    for i in 0..6 {
        a_p[(i, i + 6)] = 1.0;
    }
    a_p[(6, 4)] = p.gravity;
    a_p[(7, 3)] = -p.gravity;
    let mut b_p = DMatrix::zeros(n, INPUTS);
    b_p[(8, 0)] = 1.0 / p.mass;
    b_p[(9, 1)] = p.arm_length / p.jx;
    b_p[(10, 2)] = p.arm_length / p.jy;
    b_p[(11, 3)] = 1.0 / p.jz;
    let mut c_p = DMatrix::zeros(TRACKED_OUTPUTS.len(), n);
    for (row, &col) in TRACKED_OUTPUTS.iter().enumerate() {
        c_p[(row, col)] = 1.0;
    }
    LinearPlant { a_p, b_p, c_p }
}

/// Plant augmented with the integral of the output tracking error,
/// `x = (x_p, e_p)`, `ẋ = A x + B u + B_m r`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPlant {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub b_m: DMatrix<f64>,
    pub n_plant: usize,
    pub n_outputs: usize,
}

impl AugmentedPlant {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
}

pub fn augment_with_tracking_integral(
    plant: &LinearPlant,
    r_dim: usize,
) -> Result<AugmentedPlant, DynamicsError> {
    let np = plant.a_p.nrows();
    let nm = plant.b_p.ncols();
    if plant.a_p.ncols() != np || plant.b_p.nrows() != np || plant.c_p.ncols() != np {
        return Err(DynamicsError::Dimension("plant matrices are inconsistent".into()));
    }
    if plant.c_p.nrows() != r_dim {
        return Err(DynamicsError::Dimension(format!(
            "C_p has {} rows but the reference has {r_dim} channels",
            plant.c_p.nrows()
        )));
    }
    let n = np + r_dim;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (np, np)).copy_from(&plant.a_p);
    a.view_mut((np, 0), (r_dim, np)).copy_from(&plant.c_p);
    let mut b = DMatrix::zeros(n, nm);
    b.view_mut((0, 0), (np, nm)).copy_from(&plant.b_p);
    let mut b_m = DMatrix::zeros(n, r_dim);
    for i in 0..r_dim {
        b_m[(np + i, i)] = -1.0;
    }
    Ok(AugmentedPlant { a, b, b_m, n_plant: np, n_outputs: r_dim })
}

/// Rank test on `[B, AB, …, Aⁿ⁻¹B]`, columns normalised before the SVD.
pub fn is_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let m = b.ncols();
    let mut ctrb = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        ctrb.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = a * block;
    }
    for mut col in ctrb.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let sv = ctrb.singular_values();
    let max = sv.max();
    max > 0.0 && sv.iter().filter(|&&s| s > 1e-10 * max).count() == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_angles_give_identity() {
        assert_eq!(rotation_body_to_inertial(&Vector3::zeros()), Matrix3::identity());
    }

    #[test]
    fn yaw_quarter_turn() {
        let r = rotation_body_to_inertial(&Vector3::new(0.0, 0.0, FRAC_PI_2));
        let v = r * Vector3::new(1.0, 0.0, 0.0);
        assert!((v - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn euler_map_at_zero() {
        let r = euler_rate_map(&Vector3::zeros());
        let w = r * Vector3::new(1.0, 2.0, 3.0);
        // ω = (ψ̇, θ̇, φ̇) at zero angles with this column order.
        assert_eq!(w, Vector3::new(3.0, 2.0, 1.0));
        assert!(euler_rate_map_inverse(&Vector3::new(0.0, FRAC_PI_2, 0.0)).is_err());
    }

    #[test]
    fn equal_speeds_mix_to_collective() {
        let p = QuadrotorParams::default();
        let mixer = Mixer::new(&p).unwrap();
        let (u, g) = mixer.mix_rotor_speeds(&[200.0; 4]).unwrap();
        assert_relative_eq!(u[0], 4.0 * p.thrust_factor * 200.0 * 200.0, max_relative = 1e-15);
        assert_eq!((u[1], u[2], u[3], g), (0.0, 0.0, 0.0, 0.0));
        assert!(mixer.mix_rotor_speeds(&[1.0, -1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn roll_row_uses_rotors_two_and_four() {
        let p = QuadrotorParams::default();
        let mixer = Mixer::new(&p).unwrap();
        let (u, _) = mixer.mix_rotor_speeds(&[100.0, 100.0, 100.0, 110.0]).unwrap();
        assert_relative_eq!(u[1], p.thrust_factor * (110.0f64.powi(2) - 100.0f64.powi(2)), max_relative = 1e-12);
    }

    #[test]
    fn allocation_clips_negative_thrust() {
        let mixer = Mixer::new(&QuadrotorParams::default()).unwrap();
        let a = mixer.allocate(&Vector4::new(1.0, 5.0, 0.0, 0.0));
        assert!(a.saturated);
        assert!(a.forces.iter().all(|&f| f >= 0.0));
        let b = mixer.allocate(&Vector4::new(4.0, 0.0, 0.0, 0.0));
        assert!(!b.saturated);
        assert_eq!(b.gyro_speed, 0.0);
    }

    #[test]
    fn hover_is_equilibrium() {
        let p = QuadrotorParams::default();
        let d = rigid_derivatives(&RigidState::default(), &p.hover_input(), 0.0, &p);
        assert_eq!(d.velocity, Vector3::zeros());
        assert_eq!(d.rates, Vector3::zeros());
    }

    #[test]
    fn double_thrust_climbs_at_g() {
        let p = QuadrotorParams { mass: 0.5, gravity: 9.81, ..Default::default() };
        let d = rigid_derivatives(&RigidState::default(), &Vector4::new(2.0 * 0.5 * 9.81, 0.0, 0.0, 0.0), 0.0, &p);
        assert_relative_eq!(d.velocity[2], 9.81, max_relative = 1e-15);
    }

    #[test]
    fn symmetric_inertia_cancels_roll_coupling() {
        let p = QuadrotorParams { jy: 6e-3, jz: 6e-3, ..Default::default() };
        let s = RigidState { rates: Vector3::new(0.0, 1.0, 1.0), ..Default::default() };
        let d = rigid_derivatives(&s, &Vector4::new(4.9, 0.0, 0.0, 0.0), 0.0, &p);
        assert_eq!(d.rates[0], 0.0);
    }

    #[test]
    fn effectiveness_bounds() {
        assert!(validate_effectiveness(&Vector4::new(1.0, 0.25, 0.5, 1.0)).is_ok());
        assert!(validate_effectiveness(&Vector4::new(1.0, 0.0, 0.5, 1.0)).is_err());
        assert!(validate_effectiveness(&Vector4::new(1.0, 1.5, 0.5, 1.0)).is_err());
    }

    #[test]
    fn augmented_blocks() {
        let p = QuadrotorParams::default();
        let plant = linearize_hover(&p);
        let aug = augment_with_tracking_integral(&plant, 4).unwrap();
        assert_eq!(aug.a.shape(), (16, 16));
        assert_eq!(aug.a.view((12, 0), (4, 12)).into_owned(), plant.c_p);
        assert_eq!(aug.b_m.view((12, 0), (4, 4)).into_owned(), -DMatrix::<f64>::identity(4, 4));
        assert!(aug.b_m.view((0, 0), (12, 4)).iter().all(|&v| v == 0.0));
        assert!(augment_with_tracking_integral(&plant, 3).is_err());
        assert!(is_controllable(&plant.a_p, &plant.b_p));
        assert!(is_controllable(&aug.a, &aug.b));
    }
}
