//! Run configuration: a TOML document with `[beam]`, `[vehicle]`,
//! `[controller]`, `[operator]`, `[scenario]` and `[stabmap]` sections.
//! `[beam]` and `[vehicle]` have no defaults.

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptive::{Controller, ControllerSettings, ReferenceKind};
use crate::delay::{altitude_selector, RootOptions, StabilityProblem, SweepRange};
use crate::dynamics::{augment_with_tracking_integral, linearize_hover, QuadrotorParams, TRACKED_OUTPUTS};
use crate::error::ScenarioError;
use crate::modal::{BeamSpec, ModalBasis};
use crate::operator::{realize_operator, OperatorModel};
use crate::scenario::{Anomaly, FlightMode, Interpolation, Profile, ReferenceSchedule, Scenario, Vehicle};

/// Configuration shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub beam: BeamConfig,
    pub vehicle: VehicleConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub stabmap: StabmapConfig,
}

/// Rectangular arm section; the rotor sits at the tip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub length: f64,
    pub density: f64,
    pub youngs_modulus: f64,
    pub width: f64,
    pub height: f64,
    pub damping: f64,
    pub tip_mass: f64,
    #[serde(default = "default_modes")]
    pub n_modes: usize,
}

fn default_modes() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub mass: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub jr: f64,
    pub thrust_factor: f64,
    pub drag_factor: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

fn default_gravity() -> f64 {
    9.81
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub mode: ReferenceKind,
    pub state_weights: Vec<f64>,
    pub input_weights: Vec<f64>,
    pub gain_degradation: f64,
    pub crm_gain: Option<f64>,
    pub q_scale: f64,
    pub gamma_scale: f64,
    pub gamma: Option<Vec<f64>>,
    pub gamma_floor: f64,
    pub theta_max: Vec<f64>,
    pub projection_tolerance: f64,
    pub nonlinear_regressor: bool,
    /// `r̄` in the adaptation-rate heuristic; the largest reference value when absent.
    pub reference_amplitude: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let s = ControllerSettings::default();
        Self {
            mode: s.kind,
            state_weights: s.state_weights,
            input_weights: s.input_weights,
            gain_degradation: s.gain_degradation,
            crm_gain: s.crm_gain,
            q_scale: s.q_scale,
            gamma_scale: s.gamma_scale,
            gamma: s.gamma,
            gamma_floor: s.gamma_floor,
            theta_max: s.theta_max,
            projection_tolerance: s.projection_tolerance,
            nonlinear_regressor: s.nonlinear_regressor,
            reference_amplitude: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorConfig {
    pub enabled: bool,
    pub kp: f64,
    pub tp: f64,
    pub delay: f64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self { enabled: false, kp: 0.59, tp: 0.41, delay: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalyConfig {
    pub time: f64,
    pub effectiveness: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub interpolation: Interpolation,
    /// `[time, value]` breakpoints per channel.
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
    pub z: Vec<[f64; 2]>,
    pub psi: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub initial_perturbation: f64,
    pub anomaly: Option<AnomalyConfig>,
    pub reference: ReferenceConfig,
    /// Rows written to trajectory and control files every this many steps.
    pub log_every: usize,
    pub theta_every: usize,
    pub spectral_band: f64,
    pub spectral_threshold: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration: 10.0,
            dt: 1e-3,
            seed: 0,
            initial_perturbation: 0.0,
            anomaly: None,
            reference: ReferenceConfig::default(),
            log_every: 10,
            theta_every: 100,
            spectral_band: 0.05,
            spectral_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabmapConfig {
    pub kp_range: [f64; 2],
    pub tp_range: [f64; 2],
    pub grid: usize,
    pub order: usize,
    pub r_cut: f64,
}

impl Default for StabmapConfig {
    fn default() -> Self {
        Self { kp_range: [0.05, 1.5], tp_range: [0.01, 1.0], grid: 40, order: 32, r_cut: 50.0 }
    }
}

/// Everything assembled from a configuration, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub vehicle: Vehicle,
    pub controller: Controller,
    pub operator: Option<OperatorModel>,
    pub scenario: Scenario,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_config() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("shipped configuration is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.beam_spec()?;
        if self.beam.n_modes == 0 {
            return Err(invalid("beam.n_modes", "at least one mode is required"));
        }
        self.params()?;
        let c = &self.controller;
        if c.state_weights.len() != 16 || c.state_weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(invalid("controller.state_weights", "16 non-negative entries required"));
        }
        if c.input_weights.len() != 4 || c.input_weights.iter().any(|&w| !(w > 0.0)) {
            return Err(invalid("controller.input_weights", "4 positive entries required"));
        }
        if c.theta_max.len() != 4 || c.theta_max.iter().any(|&w| !(w > 0.0)) {
            return Err(invalid("controller.theta_max", "4 positive entries required"));
        }
        if !(c.projection_tolerance > 0.0) {
            return Err(invalid("controller.projection_tolerance", "must be positive"));
        }
        if !(c.gain_degradation > 0.0) {
            return Err(invalid("controller.gain_degradation", "must be positive"));
        }
        if !(c.q_scale > 0.0 && c.gamma_scale > 0.0 && c.gamma_floor > 0.0) {
            return Err(invalid("controller", "q_scale, gamma_scale and gamma_floor must be positive"));
        }
        if let Some(g) = &c.gamma {
            if g.len() != 4 || g.iter().any(|&v| !(v > 0.0)) {
                return Err(invalid("controller.gamma", "4 positive entries required"));
            }
        }
        if let Some(a) = c.reference_amplitude {
            if !(a > 0.0) {
                return Err(invalid("controller.reference_amplitude", "must be positive"));
            }
        }
        if self.operator.enabled {
            self.operator_model()?;
        }
        let s = &self.scenario;
        if s.log_every == 0 {
            return Err(invalid("scenario.log_every", "must be positive"));
        }
        if !(s.spectral_band > 0.0 && s.spectral_threshold > 0.0) {
            return Err(invalid("scenario", "spectral band and threshold must be positive"));
        }
        self.reference()?;
        let m = &self.stabmap;
        if m.grid == 0 || m.order < 2 || !(m.r_cut > 0.0) {
            return Err(invalid("stabmap", "grid ≥ 1, order ≥ 2 and r_cut > 0 required"));
        }
        Ok(())
    }

    pub fn beam_spec(&self) -> Result<BeamSpec, ConfigError> {
        let b = &self.beam;
        BeamSpec::rectangular(b.length, b.density, b.youngs_modulus, b.width, b.height, b.damping, b.tip_mass)
            .map_err(|e| match e {
                crate::error::ModalError::InvalidBeam { field, reason } => invalid(&format!("beam.{field}"), reason),
                other => invalid("beam", other.to_string()),
            })
    }

    pub fn params(&self) -> Result<QuadrotorParams, ConfigError> {
        let v = &self.vehicle;
        let p = QuadrotorParams {
            mass: v.mass,
            jx: v.jx,
            jy: v.jy,
            jz: v.jz,
            jr: v.jr,
            arm_length: self.beam.length,
            thrust_factor: v.thrust_factor,
            drag_factor: v.drag_factor,
            gravity: v.gravity,
        };
        p.validate().map_err(|e| match e {
            crate::error::DynamicsError::InvalidParams { field, reason } => {
                invalid(&format!("vehicle.{field}"), reason)
            }
            other => invalid("vehicle", other.to_string()),
        })?;
        Ok(p)
    }

    pub fn reference(&self) -> Result<ReferenceSchedule, ConfigError> {
        let r = &self.scenario.reference;
        let build = |name: &str, pts: &[[f64; 2]]| {
            if pts.is_empty() {
                return Ok(Profile::constant(0.0));
            }
            Profile::new(pts.iter().map(|p| (p[0], p[1])).collect(), r.interpolation)
                .map_err(|e| invalid(&format!("scenario.reference.{name}"), e.to_string()))
        };
        Ok(ReferenceSchedule {
            channels: [build("x", &r.x)?, build("y", &r.y)?, build("z", &r.z)?, build("psi", &r.psi)?],
        })
    }

    pub fn operator_model(&self) -> Result<OperatorModel, ConfigError> {
        let o = &self.operator;
        realize_operator(o.kp, o.tp, o.delay).map_err(|e| invalid("operator", e.to_string()))
    }

    pub fn controller_settings(&self) -> ControllerSettings {
        let c = &self.controller;
        ControllerSettings {
            kind: c.mode,
            state_weights: c.state_weights.clone(),
            input_weights: c.input_weights.clone(),
            gain_degradation: c.gain_degradation,
            crm_gain: c.crm_gain,
            q_scale: c.q_scale,
            gamma_scale: c.gamma_scale,
            gamma: c.gamma.clone(),
            gamma_floor: c.gamma_floor,
            theta_max: c.theta_max.clone(),
            projection_tolerance: c.projection_tolerance,
            nonlinear_regressor: c.nonlinear_regressor,
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let s = &self.scenario;
        Ok(Scenario {
            duration: s.duration,
            dt: s.dt,
            mode: if self.operator.enabled { FlightMode::Operator } else { FlightMode::Autonomous },
            reference: self.reference()?,
            anomaly: s.anomaly.as_ref().map(|a| Anomaly {
                time: a.time,
                effectiveness: Vector4::from(a.effectiveness),
            }),
            seed: s.seed,
            initial_perturbation: s.initial_perturbation,
            theta_every: s.theta_every,
        })
    }

    pub fn modal_basis(&self) -> Result<ModalBasis, ScenarioError> {
        let beam = self.beam_spec().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(ModalBasis::new(beam, self.beam.n_modes)?)
    }

    /// `r̄` for the adaptation-rate heuristic.
    pub fn reference_amplitude(&self) -> Result<f64, ConfigError> {
        if let Some(a) = self.controller.reference_amplitude {
            return Ok(a);
        }
        let a = self.reference()?.max_abs();
        if a == 0.0 && self.controller.gamma.is_none() {
            return Err(invalid(
                "controller.reference_amplitude",
                "all references are zero; set reference_amplitude or gamma",
            ));
        }
        Ok(a.max(f64::MIN_POSITIVE))
    }

    pub fn controller(&self, params: &QuadrotorParams) -> Result<Controller, ScenarioError> {
        let plant = augment_with_tracking_integral(&linearize_hover(params), TRACKED_OUTPUTS.len())?;
        let r_bar = self.reference_amplitude().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(Controller::design(&plant, params, &self.controller_settings(), r_bar)?)
    }

    pub fn pipeline(&self) -> Result<Pipeline, ScenarioError> {
        let params = self.params().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let vehicle = Vehicle::new(params, self.modal_basis()?)?;
        let controller = self.controller(&params)?;
        let operator = if self.operator.enabled {
            Some(self.operator_model().map_err(|e| ScenarioError::Invalid(e.to_string()))?)
        } else {
            None
        };
        let scenario = self.scenario().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(Pipeline { vehicle, controller, operator, scenario })
    }

    pub fn stability_problem(&self) -> Result<StabilityProblem, ScenarioError> {
        let params = self.params().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let controller = self.controller(&params)?;
        let n = controller.n_states();
        Ok(StabilityProblem {
            a_m: controller.reference.a_m.clone(),
            b_m: controller.reference.b_m.clone(),
            e_h: altitude_selector(n),
            delay: self.operator.delay,
        })
    }

    pub fn root_options(&self) -> RootOptions {
        RootOptions { order: self.stabmap.order, r_cut: self.stabmap.r_cut, ..RootOptions::default() }
    }

    pub fn sweep_ranges(&self) -> Result<(SweepRange, SweepRange), ConfigError> {
        let m = &self.stabmap;
        let kp = SweepRange::new(m.kp_range[0], m.kp_range[1], m.grid)
            .map_err(|e| invalid("stabmap.kp_range", e.to_string()))?;
        let tp = SweepRange::new(m.tp_range[0], m.tp_range[1], m.grid)
            .map_err(|e| invalid("stabmap.tp_range", e.to_string()))?;
        Ok((kp, tp))
    }
}

impl Pipeline {
    pub fn run(&self) -> Result<crate::scenario::ScenarioResult, ScenarioError> {
        crate::scenario::run_scenario(&self.scenario, &self.vehicle, &self.controller, self.operator.as_ref())
    }
}
