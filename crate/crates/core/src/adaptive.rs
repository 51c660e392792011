//! Baseline state feedback plus an adaptive augmentation, with either an
//! open-loop (MRAC) or closed-loop (CRM) reference model.
//!
//! The plant seen by the controller is the hover linearisation augmented with
//! the integral of the output tracking error. The baseline gain comes from an
//! LQR design on the nominal plant and is then degraded by a configurable
//! factor; the adaptive term `−Θ̂ᵀΦ(x)` compensates that degradation, the
//! loss of control effectiveness and the rate-product couplings left out of
//! the linear model.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{AugmentedPlant, QuadrotorParams};
use crate::error::ControlError;
use crate::linalg;

/// Rate indices `(φ̇, θ̇, ψ̇)` inside the augmented state.
const RATE_INDICES: [usize; 3] = [9, 10, 11];
/// Rate-product and gyroscopic regressor entries appended to the state.
pub const NONLINEAR_TERMS: usize = 5;

/// LQR baseline gain `K` (n × m) such that `A − B Kᵀ` is Hurwitz.
pub fn design_baseline_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    state_weights: &DMatrix<f64>,
    input_weights: &DMatrix<f64>,
) -> Result<DMatrix<f64>, ControlError> {
    if b.iter().all(|&v| v == 0.0) {
        return Err(ControlError::Design("input matrix is zero; pair is not stabilizable".into()));
    }
    let x = linalg::care(a, b, state_weights, input_weights)
        .map_err(|e| ControlError::Design(format!("Riccati solve failed: {e}")))?;
    let r_inv = input_weights
        .clone()
        .try_inverse()
        .ok_or_else(|| ControlError::Design("input weight is singular".into()))?;
    let k = &x * b * r_inv;
    let closed = a - b * k.transpose();
    let abscissa = linalg::spectral_abscissa(&closed);
    if !(abscissa < 0.0) {
        return Err(ControlError::Design(format!(
            "closed loop is not Hurwitz (spectral abscissa {abscissa:.3e})"
        )));
    }
    Ok(k)
}

/// Symmetric positive definite `P` with `Mᵀ P + P M = −Q`.
pub fn lyapunov_solve(m: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, ControlError> {
    Ok(linalg::lyapunov(m, q)?)
}

/// `Φ(x) = [x; φ̇θ̇; φ̇ψ̇; θ̇ψ̇; φ̇Ω_g; θ̇Ω_g]`, the last block optional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regressor {
    pub n_state: usize,
    pub nonlinear: bool,
}

impl Regressor {
    pub fn new(n_state: usize, nonlinear: bool) -> Self {
        Self { n_state, nonlinear }
    }

    pub fn dim(&self) -> usize {
        self.n_state + if self.nonlinear { NONLINEAR_TERMS } else { 0 }
    }

    pub fn eval(&self, x: &DVector<f64>, gyro_speed: f64) -> DVector<f64> {
        let mut phi = DVector::zeros(self.dim());
        phi.rows_mut(0, self.n_state).copy_from(&x.rows(0, self.n_state));
        if self.nonlinear {
            let [p, q, r] = RATE_INDICES.map(|i| x[i]);
            let n = self.n_state;
            phi[n] = p * q;
            phi[n + 1] = p * r;
            phi[n + 2] = q * r;
            phi[n + 3] = p * gyro_speed;
            phi[n + 4] = q * gyro_speed;
        }
        phi
    }
}

/// Matched weights of the rate-product couplings, `Θ_p` (5 × 4), such that
/// `B_p Θ_pᵀ Φ_p` reproduces the nonlinear terms of the rotational equations.
pub fn coupling_weights(p: &QuadrotorParams) -> DMatrix<f64> {
    let l = p.arm_length;
    let mut w = DMatrix::zeros(NONLINEAR_TERMS, 4);
    // rows: φ̇θ̇, φ̇ψ̇, θ̇ψ̇, φ̇Ω_g, θ̇Ω_g; columns: u₁..u₄
    w[(2, 1)] = (p.jy - p.jz) / l;
    w[(4, 1)] = -p.jr / l;
    w[(1, 2)] = (p.jz - p.jx) / l;
    w[(3, 2)] = p.jr / l;
    w[(0, 3)] = p.jx - p.jy;
    w
}

/// Convex set for one parameter column, `{θ : h(θ) ≤ 1}`.
pub trait ConvexBound {
    fn value(&self, theta: &DVector<f64>) -> f64;
    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64>;
}

/// Smoothed norm ball `h(θ) = ((1+ε)‖θ‖² − θ_max²) / (ε θ_max²)`.
///
/// `h = 0` on the sphere of radius `θ_max/√(1+ε)`, `h = 1` on the sphere of
/// radius `θ_max`; the shell between them is the tolerance band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBound {
    pub theta_max: f64,
    pub tolerance: f64,
}

impl ConvexBound for NormBound {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        let m2 = self.theta_max * self.theta_max;
        ((1.0 + self.tolerance) * theta.norm_squared() - m2) / (self.tolerance * m2)
    }

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        theta * (2.0 * (1.0 + self.tolerance) / (self.tolerance * self.theta_max * self.theta_max))
    }
}

/// `Proj(θ, y, h)`: removes the outward normal component of `y`, scaled by `h`,
/// when `h(θ) > 0` and `y` points outward.
pub fn projection(
    theta: &DVector<f64>,
    y: &DVector<f64>,
    bound: &impl ConvexBound,
) -> Result<DVector<f64>, ControlError> {
    let h = bound.value(theta);
    if h <= 0.0 {
        return Ok(y.clone());
    }
    let grad = bound.gradient(theta);
    let along = y.dot(&grad);
    if along <= 0.0 {
        return Ok(y.clone());
    }
    let g2 = grad.norm_squared();
    if g2 == 0.0 {
        return Err(ControlError::ZeroGradient);
    }
    Ok(y - grad * (along * h / g2))
}

/// Projected adaptive law `Θ̂̇ = Γ Proj(Θ̂, Φ eᵀ P B, H)` with one adaptation
/// rate and one bound per input column.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveLaw {
    pub gamma: Vec<f64>,
    pub bounds: Vec<NormBound>,
    /// `P B`.
    pub pb: DMatrix<f64>,
}

impl AdaptiveLaw {
    /// Parameter rate and whether any column sits outside its bound.
    pub fn rate(
        &self,
        theta_hat: &DMatrix<f64>,
        phi: &DVector<f64>,
        e: &DVector<f64>,
    ) -> Result<(DMatrix<f64>, bool), ControlError> {
        let epb = self.pb.tr_mul(e);
        let mut out = DMatrix::zeros(theta_hat.nrows(), theta_hat.ncols());
        let mut outside = false;
        for j in 0..theta_hat.ncols() {
            let theta = theta_hat.column(j).into_owned();
            let y = phi * epb[j];
            let bound = &self.bounds[j];
            if bound.value(&theta) > 1.0 {
                outside = true;
            }
            let proj = projection(&theta, &y, bound)?;
            out.set_column(j, &(proj * self.gamma[j]));
        }
        Ok((out, outside))
    }
}

/// `u = −Kᵀx − Θ̂ᵀΦ`.
pub fn control_law(
    x: &DVector<f64>,
    theta_hat: &DMatrix<f64>,
    k: &DMatrix<f64>,
    phi: &DVector<f64>,
) -> DVector<f64> {
    -(k.tr_mul(x)) - theta_hat.tr_mul(phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    Mrac,
    #[default]
    Crm,
}

/// `ẋ_m = A_m x_m + B_m r − L e`; `L = 0` for MRAC.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    pub a_m: DMatrix<f64>,
    pub b_m: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

impl ReferenceModel {
    pub fn derivative(&self, x_m: &DVector<f64>, r: &DVector<f64>, e: &DVector<f64>) -> DVector<f64> {
        &self.a_m * x_m + &self.b_m * r - &self.l * e
    }

    /// `x_m* = −A_m⁻¹ B_m r` for a constant reference with zero error.
    pub fn steady_state(&self, r: &DVector<f64>) -> Option<DVector<f64>> {
        self.a_m.clone().lu().solve(&(&self.b_m * r)).map(|v| -v)
    }
}

/// `Γ_j = ‖Θ_j‖ / (3 τ_m r̄²)` per column, floored.
pub fn adaptation_rate_heuristic(
    theta_nominal: &DMatrix<f64>,
    tau_m: f64,
    r_bar: f64,
    floor: f64,
) -> Result<Vec<f64>, ControlError> {
    if !(tau_m > 0.0) {
        return Err(ControlError::Config(format!("time constant must be positive, got {tau_m}")));
    }
    if r_bar == 0.0 || !r_bar.is_finite() {
        return Err(ControlError::Config("maximum reference value is zero".into()));
    }
    Ok(theta_nominal
        .column_iter()
        .map(|c| (c.norm() / (3.0 * tau_m * r_bar * r_bar)).max(floor))
        .collect())
}

/// Design inputs for [`Controller::design`].
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSettings {
    pub kind: ReferenceKind,
    /// LQR state weights (diagonal), one per augmented state.
    pub state_weights: Vec<f64>,
    pub input_weights: Vec<f64>,
    /// Factor applied to the nominal gain in the flown baseline law.
    pub gain_degradation: f64,
    /// CRM gain `ℓ` in `L = −ℓ I`; derived from `A_m` when absent.
    pub crm_gain: Option<f64>,
    pub q_scale: f64,
    pub gamma_scale: f64,
    pub gamma: Option<Vec<f64>>,
    pub gamma_floor: f64,
    pub theta_max: Vec<f64>,
    pub projection_tolerance: f64,
    pub nonlinear_regressor: bool,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        Self {
            kind: ReferenceKind::Crm,
            state_weights: vec![1.0; 16],
            input_weights: vec![1.0; 4],
            gain_degradation: 0.8,
            crm_gain: None,
            q_scale: 1.0,
            gamma_scale: 1.0,
            gamma: None,
            gamma_floor: 1e-3,
            theta_max: vec![100.0; 4],
            projection_tolerance: 0.1,
            nonlinear_regressor: true,
        }
    }
}

/// Fully designed controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub kind: ReferenceKind,
    pub k_nominal: DMatrix<f64>,
    pub k_baseline: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub reference: ReferenceModel,
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub regressor: Regressor,
    pub law: AdaptiveLaw,
    /// Ideal parameters for the nominal effectiveness, `[K − K_bl; Θ_p]`.
    pub theta_nominal: DMatrix<f64>,
    /// Smallest time constant of `A_m`.
    pub tau_m: f64,
}

impl Controller {
    pub fn design(
        plant: &AugmentedPlant,
        params: &QuadrotorParams,
        s: &ControllerSettings,
        r_bar: f64,
    ) -> Result<Self, ControlError> {
        let n = plant.n_states();
        let m = plant.n_inputs();
        if s.state_weights.len() != n || s.input_weights.len() != m {
            return Err(ControlError::Config(format!(
                "expected {n} state weights and {m} input weights, got {} and {}",
                s.state_weights.len(),
                s.input_weights.len()
            )));
        }
        if s.theta_max.len() != m || s.theta_max.iter().any(|&t| !(t > 0.0)) {
            return Err(ControlError::Config(format!("theta_max needs {m} positive entries")));
        }
        if !(s.projection_tolerance > 0.0) {
            return Err(ControlError::Config("projection tolerance must be positive".into()));
        }
        if !(s.gain_degradation > 0.0) {
            return Err(ControlError::Config("gain degradation must be positive".into()));
        }
        let qw = DMatrix::from_diagonal(&DVector::from_vec(s.state_weights.clone()));
        let rw = DMatrix::from_diagonal(&DVector::from_vec(s.input_weights.clone()));
        let k_nominal = design_baseline_gain(&plant.a, &plant.b, &qw, &rw)?;
        let k_baseline = &k_nominal * s.gain_degradation;
        let a_m = &plant.a - &plant.b * k_nominal.transpose();

        let spectrum = linalg::eigenvalues(&a_m);
        let fastest = spectrum.iter().map(|l| -l.re).fold(0.0, f64::max);
        let slowest = spectrum.iter().map(|l| -l.re).fold(f64::INFINITY, f64::min);
        let tau_m = 1.0 / fastest;

        let l = match s.kind {
            ReferenceKind::Mrac => DMatrix::zeros(n, n),
            ReferenceKind::Crm => {
                let ell = s.crm_gain.unwrap_or(2.0 * slowest);
                if !(ell >= 0.0) {
                    return Err(ControlError::Config("CRM gain must be non-negative".into()));
                }
                -DMatrix::<f64>::identity(n, n) * ell
            }
        };
        let q = DMatrix::<f64>::identity(n, n) * s.q_scale;
        let p = lyapunov_solve(&(&a_m + &l), &q)?;

        let regressor = Regressor::new(n, s.nonlinear_regressor);
        let mut theta_nominal = DMatrix::zeros(regressor.dim(), m);
        theta_nominal
            .view_mut((0, 0), (n, m))
            .copy_from(&(&k_nominal - &k_baseline));
        if s.nonlinear_regressor {
            theta_nominal
                .view_mut((n, 0), (NONLINEAR_TERMS, m))
                .copy_from(&coupling_weights(params));
        }

        let gamma = match &s.gamma {
            Some(g) if g.len() == m => g.clone(),
            Some(g) => {
                return Err(ControlError::Config(format!("gamma needs {m} entries, got {}", g.len())))
            }
            None => adaptation_rate_heuristic(&theta_nominal, tau_m, r_bar, s.gamma_floor)?
                .into_iter()
                .map(|g| g * s.gamma_scale)
                .collect(),
        };
        let bounds = s
            .theta_max
            .iter()
            .map(|&theta_max| NormBound { theta_max, tolerance: s.projection_tolerance })
            .collect();
        let law = AdaptiveLaw { gamma, bounds, pb: &p * &plant.b };

        Ok(Self {
            kind: s.kind,
            k_nominal,
            k_baseline,
            b: plant.b.clone(),
            reference: ReferenceModel { a_m, b_m: plant.b_m.clone(), l },
            p,
            q,
            regressor,
            law,
            theta_nominal,
            tau_m,
        })
    }

    pub fn n_states(&self) -> usize {
        self.reference.a_m.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    /// Ideal parameters `Θ` for a given effectiveness `Λ` (diagonal entries):
    /// `[(K − K_bl Λ) Λ⁻¹; Θ_p Λ⁻¹]`, with `Θ_p` the matched nonlinear weights.
    pub fn ideal_parameters(&self, effectiveness: &[f64], theta_p: Option<&DMatrix<f64>>) -> DMatrix<f64> {
        let n = self.n_states();
        let m = self.n_inputs();
        let mut theta = DMatrix::zeros(self.regressor.dim(), m);
        for j in 0..m {
            let lam = effectiveness[j];
            for i in 0..n {
                theta[(i, j)] = (self.k_nominal[(i, j)] - self.k_baseline[(i, j)] * lam) / lam;
            }
            if let (true, Some(tp)) = (self.regressor.nonlinear, theta_p) {
                for i in 0..NONLINEAR_TERMS {
                    theta[(n + i, j)] = tp[(i, j)] / lam;
                }
            }
        }
        theta
    }
}
