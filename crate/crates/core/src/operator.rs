//! Human operator as a delayed proportional-integral compensator acting on
//! the altitude error, `G_h(s) = K_p (T_p s + 1)/s · e^{−τ s}`.

use std::collections::VecDeque;

use nalgebra::{Complex, DMatrix};

use crate::error::OperatorError;

/// Index of the altitude channel in the reference vector `(x, y, z, ψ)`.
pub const ALTITUDE_CHANNEL: usize = 2;

/// State-space realisation `η̇ = A_h η + B_h ζ(t−τ)`,
/// `r_z = C_h η + D_h ζ(t−τ)` with `A_h = 0`, `B_h = 1`, `C_h = K_p`,
/// `D_h = K_p T_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorModel {
    pub kp: f64,
    pub tp: f64,
    pub delay: f64,
}

pub fn realize_operator(kp: f64, tp: f64, delay: f64) -> Result<OperatorModel, OperatorError> {
    if !(kp > 0.0) {
        return Err(OperatorError::NonPositiveGain(kp));
    }
    if !(tp > 0.0) {
        return Err(OperatorError::NonPositiveLead(tp));
    }
    if !(delay >= 0.0) {
        return Err(OperatorError::NegativeDelay(delay));
    }
    Ok(OperatorModel { kp, tp, delay })
}

impl OperatorModel {
    pub fn a_h(&self) -> f64 {
        0.0
    }

    pub fn b_h(&self) -> f64 {
        1.0
    }

    pub fn c_h(&self) -> f64 {
        self.kp
    }

    pub fn d_h(&self) -> f64 {
        self.kp * self.tp
    }

    /// `C_h` embedded in the reference space (`n_r × 1`).
    pub fn c_h_matrix(&self, n_r: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n_r, 1);
        m[(ALTITUDE_CHANNEL, 0)] = self.c_h();
        m
    }

    /// `D_h` embedded in the reference space (`n_r × 1`).
    pub fn d_h_matrix(&self, n_r: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n_r, 1);
        m[(ALTITUDE_CHANNEL, 0)] = self.d_h();
        m
    }

    /// `G_h(s)` for complex `s`.
    pub fn transfer_function(&self, s: Complex<f64>) -> Complex<f64> {
        let rational = self.c_h() * self.b_h() / (s - self.a_h()) + self.d_h();
        rational * (-s * self.delay).exp()
    }

    pub fn frequency_response(&self, omega: f64) -> Complex<f64> {
        self.transfer_function(Complex::new(0.0, omega))
    }

    pub fn output(&self, eta: f64, zeta_delayed: f64) -> f64 {
        self.c_h() * eta + self.d_h() * zeta_delayed
    }

    pub fn derivative(&self, eta: f64, zeta_delayed: f64) -> f64 {
        self.a_h() * eta + self.b_h() * zeta_delayed
    }
}

/// `(η̇, r_z)` for the current operator state and delayed error.
pub fn operator_step(model: &OperatorModel, eta: f64, zeta_delayed: f64) -> (f64, f64) {
    (model.derivative(eta, zeta_delayed), model.output(eta, zeta_delayed))
}

/// Fixed-step history of a scalar signal, read back `k = round(τ/dt)` samples
/// late. Samples before the first push are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    dt: f64,
    steps: usize,
    requested: f64,
    /// Values at `t_{n−k}, …, t_n`, oldest first.
    samples: VecDeque<f64>,
}

impl DelayLine {
    pub fn new(delay: f64, dt: f64) -> Result<Self, OperatorError> {
        if !(delay >= 0.0) {
            return Err(OperatorError::NegativeDelay(delay));
        }
        let steps = (delay / dt).round() as usize;
        Ok(Self { dt, steps, requested: delay, samples: VecDeque::from(vec![0.0; steps]) })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Delay actually applied, `k · dt`.
    pub fn applied_delay(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn requested_delay(&self) -> f64 {
        self.requested
    }

    pub fn is_rounded(&self) -> bool {
        (self.applied_delay() - self.requested).abs() > 1e-12 * self.requested.max(1.0)
    }

    /// Appends the sample for the next grid time.
    pub fn push(&mut self, value: f64) {
        self.samples.push_back(value);
        while self.samples.len() > self.steps + 1 {
            self.samples.pop_front();
        }
    }

    /// Delayed value at `t_n + θ dt − k dt`, `θ ∈ [0, 1]`, where `t_n` is the
    /// time of the last pushed sample. Interpolates linearly between grid
    /// samples. `current` is used when there is no delay.
    pub fn delayed(&self, fraction: f64, current: f64) -> f64 {
        if self.steps == 0 {
            return current;
        }
        let s0 = self.samples[0];
        let s1 = self.samples[1];
        (1.0 - fraction) * s0 + fraction * s1
    }
}
