//! Fixed-step closed-loop simulation of the flexible quadrotor with the
//! adaptive controller, an optional loss of control effectiveness and an
//! optional delayed human operator closing the altitude loop.

use nalgebra::{DMatrix, DVector, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::adaptive::{control_law, Controller};
use crate::dynamics::{
    rigid_derivatives, validate_effectiveness, Mixer, QuadrotorParams, RigidState, RIGID_STATES,
    TRACKED_OUTPUTS,
};
use crate::error::{ControlError, ScenarioError};
use crate::integrate::rk4_finish;
use crate::modal::{assemble_elastic_system, ElasticSystem, ModalBasis};
use crate::operator::{DelayLine, OperatorModel};

/// RK4 stability limit on the imaginary axis is `2√2`; keep a margin.
pub const RK4_STABILITY_LIMIT: f64 = 2.78;
pub const MAX_STEP: f64 = 1.5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Step,
    Linear,
}

/// Breakpoint profile `(t_i, v_i)`; held at the first and last values outside
/// the breakpoints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Profile {
    pub points: Vec<(f64, f64)>,
    pub interpolation: Interpolation,
}

impl Profile {
    pub fn constant(v: f64) -> Self {
        Self { points: vec![(0.0, v)], interpolation: Interpolation::Step }
    }

    pub fn new(points: Vec<(f64, f64)>, interpolation: Interpolation) -> Result<Self, ScenarioError> {
        if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(ScenarioError::Invalid("reference breakpoints must be finite".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ScenarioError::Invalid("reference breakpoint times must increase".into()));
        }
        Ok(Self { points, interpolation })
    }

    pub fn value(&self, t: f64) -> f64 {
        let Some(first) = self.points.first() else { return 0.0 };
        if t < first.0 {
            return first.1;
        }
        let idx = self.points.partition_point(|&(ti, _)| ti <= t) - 1;
        let (t0, v0) = self.points[idx];
        match (self.interpolation, self.points.get(idx + 1)) {
            (Interpolation::Linear, Some(&(t1, v1))) => v0 + (v1 - v0) * (t - t0) / (t1 - t0),
            _ => v0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(|p| p.1.abs()).fold(0.0, f64::max)
    }
}

/// Desired `(x_d, y_d, z_d, ψ_d)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceSchedule {
    pub channels: [Profile; 4],
}

impl ReferenceSchedule {
    pub fn hover() -> Self {
        Self { channels: std::array::from_fn(|_| Profile::constant(0.0)) }
    }

    pub fn value(&self, t: f64) -> Vector4<f64> {
        Vector4::from_fn(|i, _| self.channels[i].value(t))
    }

    pub fn max_abs(&self) -> f64 {
        self.channels.iter().map(Profile::max_abs).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anomaly {
    pub time: f64,
    pub effectiveness: Vector4<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlightMode {
    #[default]
    Autonomous,
    Operator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub duration: f64,
    pub dt: f64,
    pub mode: FlightMode,
    pub reference: ReferenceSchedule,
    pub anomaly: Option<Anomaly>,
    pub seed: u64,
    /// Amplitude of the seeded initial offset on position and attitude.
    pub initial_perturbation: f64,
    /// Parameter snapshots are kept every this many steps.
    pub theta_every: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            duration: 10.0,
            dt: 1e-3,
            mode: FlightMode::Autonomous,
            reference: ReferenceSchedule::hover(),
            anomaly: None,
            seed: 0,
            initial_perturbation: 0.0,
            theta_every: 10,
        }
    }
}

impl Scenario {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self, max_frequency: f64) -> Result<(), ScenarioError> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ScenarioError::Invalid(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_STEP) {
            return Err(ScenarioError::Invalid(format!(
                "step dt = {} outside (0, {MAX_STEP}]",
                self.dt
            )));
        }
        if max_frequency * self.dt >= RK4_STABILITY_LIMIT {
            return Err(ScenarioError::Invalid(format!(
                "step dt = {} is unstable for the fastest mode ({max_frequency:.1} rad/s); \
                 use dt < {:.3e}",
                self.dt,
                RK4_STABILITY_LIMIT / max_frequency
            )));
        }
        if let Some(a) = &self.anomaly {
            if !(a.time >= 0.0 && a.time <= self.duration) {
                return Err(ScenarioError::Invalid(format!(
                    "anomaly time {} outside [0, {}]",
                    a.time, self.duration
                )));
            }
            validate_effectiveness(&a.effectiveness)?;
        }
        if self.theta_every == 0 {
            return Err(ScenarioError::Invalid("theta snapshot interval must be positive".into()));
        }
        Ok(())
    }

    /// Everything that defines the mission flown, independent of the
    /// controller and of who closes the altitude loop.
    pub fn mission_key(&self) -> String {
        format!(
            "duration={:?};dt={:?};reference={:?};anomaly={:?};seed={};perturbation={:?}",
            self.duration, self.dt, self.reference, self.anomaly, self.seed, self.initial_perturbation
        )
    }
}

/// Vehicle model: rigid parameters, rotor mixing and arm elasticity.
#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub params: QuadrotorParams,
    pub mixer: Mixer,
    pub basis: ModalBasis,
    pub elastic: ElasticSystem,
}

impl Vehicle {
    pub fn new(params: QuadrotorParams, basis: ModalBasis) -> Result<Self, ScenarioError> {
        let mixer = Mixer::new(&params)?;
        let elastic = assemble_elastic_system(&basis, &mixer.force_map)?;
        Ok(Self { params, mixer, basis, elastic })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    AnomalyInjected { requested: f64, applied: f64 },
    DelayRounded { requested: f64, applied: f64 },
    FirstSaturation { time: f64 },
    FirstProjectionExcursion { time: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub mission: String,
    pub dt: f64,
    pub times: Vec<f64>,
    pub rigid: Vec<[f64; RIGID_STATES]>,
    pub integral: Vec<[f64; 4]>,
    /// Controller output including the hover trim.
    pub commands: Vec<[f64; 4]>,
    /// Input actually produced by the rotors.
    pub applied: Vec<[f64; 4]>,
    pub references: Vec<[f64; 4]>,
    /// `x − x_m` on the tracked outputs `(x, y, z, ψ)`.
    pub tracking_errors: Vec<[f64; 4]>,
    pub tips: Vec<[f64; 4]>,
    pub theta_times: Vec<f64>,
    /// Column-major snapshots of `Θ̂`.
    pub theta: Vec<Vec<f64>>,
    pub theta_shape: (usize, usize),
    pub theta_max: f64,
    pub saturation_count: usize,
    pub projection_excursions: usize,
    pub anomaly_time: Option<f64>,
    pub events: Vec<Event>,
    pub natural_frequencies: Vec<f64>,
    pub final_state: DVector<f64>,
}

impl ScenarioResult {
    /// Start of the metric window: the anomaly time, or zero without one.
    pub fn window_start(&self) -> f64 {
        self.anomaly_time.unwrap_or(0.0)
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Offsets of the state blocks in the integration vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    elastic: usize,
    n_elastic: usize,
    xm: usize,
    theta: usize,
    theta_rows: usize,
    theta_cols: usize,
    eta: usize,
    len: usize,
}

impl Layout {
    fn new(n_elastic: usize, n_aug: usize, theta_rows: usize, theta_cols: usize, operator: bool) -> Self {
        let elastic = n_aug;
        let xm = elastic + n_elastic;
        let theta = xm + n_aug;
        let eta = theta + theta_rows * theta_cols;
        Self {
            elastic,
            n_elastic,
            xm,
            theta,
            theta_rows,
            theta_cols,
            eta,
            len: eta + usize::from(operator),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct StageInfo {
    command: Vector4<f64>,
    applied: Vector4<f64>,
    reference: Vector4<f64>,
    saturated: bool,
    outside: bool,
}

struct ClosedLoop<'a> {
    vehicle: &'a Vehicle,
    controller: &'a Controller,
    operator: Option<&'a OperatorModel>,
    reference: &'a ReferenceSchedule,
    layout: Layout,
    trim: Vector4<f64>,
    n_aug: usize,
}

impl ClosedLoop<'_> {
    fn eval(
        &self,
        t: f64,
        y: &DVector<f64>,
        lambda: &Vector4<f64>,
        zeta_delayed: Option<f64>,
    ) -> Result<(DVector<f64>, StageInfo), ControlError> {
        let ly = &self.layout;
        let n = self.n_aug;
        let x = y.rows(0, n).into_owned();
        let x_m = y.rows(ly.xm, n).into_owned();
        let theta_hat =
            DMatrix::from_column_slice(ly.theta_rows, ly.theta_cols, y.rows(ly.theta, ly.theta_rows * ly.theta_cols).as_slice());

        let mut r = self.reference.value(t);
        let mut eta_dot = 0.0;
        if let Some(op) = self.operator {
            let current = r[2] - x[2];
            let zeta = zeta_delayed.unwrap_or(current);
            let (d, out) = crate::operator::operator_step(op, y[ly.eta], zeta);
            eta_dot = d;
            r[2] = out;
        }
        let r_dyn = DVector::from_column_slice(r.as_slice());

        let e = &x - &x_m;
        // The regressor's gyroscopic speed comes from the baseline command
        // alone so that the control law has no algebraic loop.
        let baseline = -(self.controller.k_baseline.tr_mul(&x));
        let gyro_est = self
            .vehicle
            .mixer
            .allocate(&(self.trim + Vector4::from_column_slice(baseline.as_slice())))
            .gyro_speed;
        let phi = self.controller.regressor.eval(&x, gyro_est);
        let u = control_law(&x, &theta_hat, &self.controller.k_baseline, &phi);
        let command = self.trim + Vector4::from_column_slice(u.as_slice());
        let alloc = self.vehicle.mixer.allocate(&command.component_mul(lambda));

        let mut dy = DVector::zeros(ly.len);
        let rigid = RigidState::from_slice(&y.as_slice()[..RIGID_STATES]);
        let rd = rigid_derivatives(&rigid, &alloc.applied, alloc.gyro_speed, &self.vehicle.params);
        rd.write_into(&mut dy.as_mut_slice()[..RIGID_STATES]);
        for (i, &idx) in TRACKED_OUTPUTS.iter().enumerate() {
            dy[RIGID_STATES + i] = x[idx] - r[i];
        }

        let z_e = y.rows(ly.elastic, ly.n_elastic);
        let forces = DVector::from_column_slice(alloc.forces.as_slice());
        let ze_dot = &self.vehicle.elastic.a_e * z_e + &self.vehicle.elastic.b_ze * forces;
        dy.rows_mut(ly.elastic, ly.n_elastic).copy_from(&ze_dot);

        let xm_dot = self.controller.reference.derivative(&x_m, &r_dyn, &e);
        dy.rows_mut(ly.xm, n).copy_from(&xm_dot);

        let (theta_dot, outside) = self.controller.law.rate(&theta_hat, &phi, &e)?;
        dy.rows_mut(ly.theta, ly.theta_rows * ly.theta_cols)
            .copy_from_slice(theta_dot.as_slice());
        if self.operator.is_some() {
            dy[ly.eta] = eta_dot;
        }
        Ok((
            dy,
            StageInfo { command, applied: alloc.applied, reference: r, saturated: alloc.saturated, outside },
        ))
    }
}

/// Runs one scenario. Deterministic for a given scenario and seed.
pub fn run_scenario(
    scenario: &Scenario,
    vehicle: &Vehicle,
    controller: &Controller,
    operator: Option<&OperatorModel>,
) -> Result<ScenarioResult, ScenarioError> {
    scenario.validate(vehicle.basis.max_frequency())?;
    match (scenario.mode, operator) {
        (FlightMode::Operator, None) => {
            return Err(ScenarioError::Invalid("operator flight mode needs an operator model".into()))
        }
        (FlightMode::Autonomous, Some(_)) => {
            return Err(ScenarioError::Invalid("operator model given in autonomous flight mode".into()))
        }
        _ => {}
    }
    let n_aug = controller.n_states();
    if n_aug != RIGID_STATES + TRACKED_OUTPUTS.len() || controller.n_inputs() != 4 {
        return Err(ScenarioError::Invalid(format!(
            "controller is sized for {n_aug} states and {} inputs",
            controller.n_inputs()
        )));
    }
    let theta_rows = controller.regressor.dim();
    let layout = Layout::new(vehicle.elastic.n_states(), n_aug, theta_rows, 4, operator.is_some());
    let dt = scenario.dt;
    let steps = scenario.steps();
    let trim = vehicle.params.hover_input();
    let sys = ClosedLoop {
        vehicle,
        controller,
        operator,
        reference: &scenario.reference,
        layout,
        trim,
        n_aug,
    };

    let mut events = Vec::new();
    let mut y = DVector::zeros(layout.len);
    if scenario.initial_perturbation > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        for i in 0..6 {
            y[i] = scenario.initial_perturbation * rng.random_range(-1.0..1.0);
        }
    }
    let arm = vehicle.basis.static_arm_state(trim[0] / 4.0);
    for k in 0..4 {
        y.rows_mut(layout.elastic + k * arm.len(), arm.len()).copy_from(&arm);
    }
    let x0 = y.rows(0, n_aug).into_owned();
    y.rows_mut(layout.xm, n_aug).copy_from(&x0);

    let mut delay_line = None;
    if let Some(op) = operator {
        let line = DelayLine::new(op.delay, dt)?;
        if line.is_rounded() {
            events.push(Event::DelayRounded { requested: op.delay, applied: line.applied_delay() });
        }
        let c0 = scenario.reference.value(0.0)[2];
        y[layout.eta] = c0 / op.kp;
        delay_line = Some(line);
        if let Some(line) = delay_line.as_mut() {
            line.push(c0 - y[2]);
        }
    }

    let anomaly_step = scenario.anomaly.map(|a| {
        let step = (a.time / dt).round() as usize;
        events.push(Event::AnomalyInjected { requested: a.time, applied: step as f64 * dt });
        step
    });

    let mut out = ScenarioResult {
        mission: scenario.mission_key(),
        dt,
        times: Vec::with_capacity(steps + 1),
        rigid: Vec::with_capacity(steps + 1),
        integral: Vec::with_capacity(steps + 1),
        commands: Vec::with_capacity(steps + 1),
        applied: Vec::with_capacity(steps + 1),
        references: Vec::with_capacity(steps + 1),
        tracking_errors: Vec::with_capacity(steps + 1),
        tips: Vec::with_capacity(steps + 1),
        theta_times: Vec::new(),
        theta: Vec::new(),
        theta_shape: (theta_rows, 4),
        theta_max: 0.0,
        saturation_count: 0,
        projection_excursions: 0,
        anomaly_time: anomaly_step.map(|s| s as f64 * dt),
        events,
        natural_frequencies: vehicle.basis.modes.iter().map(|m| m.omega).collect(),
        final_state: DVector::zeros(0),
    };

    let ones = Vector4::repeat(1.0);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let lambda = match (anomaly_step, scenario.anomaly) {
            (Some(s), Some(a)) if k >= s => a.effectiveness,
            _ => ones,
        };
        let zeta = |frac: f64| delay_line.as_ref().filter(|l| l.steps() > 0).map(|l| l.delayed(frac, f64::NAN));
        let (k1, info) = sys.eval(t, &y, &lambda, zeta(0.0))?;
        record(&mut out, t, &y, &layout, &vehicle.elastic, &info, k % scenario.theta_every == 0);
        if k == steps {
            break;
        }

        let mut failure = None;
        let next = rk4_finish(&y, dt, k1, |frac, ys| match sys.eval(t + frac * dt, ys, &lambda, zeta(frac)) {
            Ok((d, _)) => d,
            Err(e) => {
                failure.get_or_insert(e);
                DVector::from_element(ys.len(), f64::NAN)
            }
        });
        if let Some(e) = failure {
            return Err(e.into());
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(ScenarioError::NonFinite { time: t + dt, last_good: t });
        }
        y = next;
        if let Some(line) = delay_line.as_mut() {
            line.push(scenario.reference.value(t + dt)[2] - y[2]);
        }
    }
    out.final_state = y;
    Ok(out)
}

fn record(
    out: &mut ScenarioResult,
    t: f64,
    y: &DVector<f64>,
    layout: &Layout,
    elastic: &ElasticSystem,
    info: &StageInfo,
    snapshot: bool,
) {
    let s = y.as_slice();
    out.times.push(t);
    out.rigid.push(std::array::from_fn(|i| s[i]));
    out.integral.push(std::array::from_fn(|i| s[RIGID_STATES + i]));
    out.commands.push(info.command.into());
    out.applied.push(info.applied.into());
    out.references.push(info.reference.into());
    out.tracking_errors.push(std::array::from_fn(|i| {
        let idx = TRACKED_OUTPUTS[i];
        s[idx] - s[layout.xm + idx]
    }));
    let z_e = y.rows(layout.elastic, layout.n_elastic).into_owned();
    out.tips.push(elastic.tip_displacements(&z_e));

    let theta = &s[layout.theta..layout.theta + layout.theta_rows * layout.theta_cols];
    let col_max = theta
        .chunks(layout.theta_rows)
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    out.theta_max = out.theta_max.max(col_max);
    if snapshot {
        out.theta_times.push(t);
        out.theta.push(theta.to_vec());
    }
    if info.saturated {
        if out.saturation_count == 0 {
            out.events.push(Event::FirstSaturation { time: t });
        }
        out.saturation_count += 1;
    }
    if info.outside {
        if out.projection_excursions == 0 {
            out.events.push(Event::FirstProjectionExcursion { time: t });
        }
        out.projection_excursions += 1;
    }
}

/// RMS over `[start, end]` by the trapezoidal rule on the sample grid.
pub fn windowed_rms(times: &[f64], values: &[f64], start: f64, end: f64) -> Result<f64, ScenarioError> {
    let slack = 1e-9 * (end - start).abs().max(1.0);
    let idx: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= start - slack && times[i] <= end + slack)
        .collect();
    if !(start < end) || idx.len() < 2 {
        return Err(ScenarioError::EmptyWindow { start, end });
    }
    let mut acc = 0.0;
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        acc += 0.5 * (values[a] * values[a] + values[b] * values[b]) * (times[b] - times[a]);
    }
    let span = times[*idx.last().unwrap()] - times[idx[0]];
    Ok((acc / span).sqrt())
}

/// `ℳ_e` per tracked axis `(x, y, z, ψ)`.
pub fn tracking_metric(result: &ScenarioResult, start: f64, end: f64) -> Result<[f64; 4], ScenarioError> {
    let mut m = [0.0; 4];
    for (axis, slot) in m.iter_mut().enumerate() {
        let series: Vec<f64> = result.tracking_errors.iter().map(|e| e[axis]).collect();
        *slot = windowed_rms(&result.times, &series, start, end)?;
    }
    Ok(m)
}

/// RMS tip deflection of each arm over the window.
pub fn tip_rms_per_arm(result: &ScenarioResult, start: f64, end: f64) -> Result<[f64; 4], ScenarioError> {
    let mut m = [0.0; 4];
    for (arm, slot) in m.iter_mut().enumerate() {
        let series: Vec<f64> = result.tips.iter().map(|w| w[arm]).collect();
        *slot = windowed_rms(&result.times, &series, start, end)?;
    }
    Ok(m)
}

/// RMS tip deflection pooled over the four arms.
pub fn tip_rms(result: &ScenarioResult, start: f64, end: f64) -> Result<f64, ScenarioError> {
    let per_arm = tip_rms_per_arm(result, start, end)?;
    Ok((per_arm.iter().map(|v| v * v).sum::<f64>() / 4.0).sqrt())
}

/// Fraction of each command channel's power inside `±band` of a modal frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBand {
    pub channel: usize,
    pub mode: usize,
    pub omega: f64,
    pub fraction: f64,
    pub exceeds: bool,
}

pub fn control_spectrum(result: &ScenarioResult, band: f64, threshold: f64) -> Vec<SpectralBand> {
    let n = result.commands.len();
    let mut bands = Vec::new();
    if n < 4 {
        return bands;
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let resolution = std::f64::consts::TAU / (n as f64 * result.dt);
    for channel in 0..4 {
        let mean = result.commands.iter().map(|u| u[channel]).sum::<f64>() / n as f64;
        let mut buf: Vec<Complex<f64>> =
            result.commands.iter().map(|u| Complex::new(u[channel] - mean, 0.0)).collect();
        fft.process(&mut buf);
        let power: Vec<f64> = buf[1..n / 2].iter().map(|c| c.norm_sqr()).collect();
        let total: f64 = power.iter().sum();
        for (mode, &omega) in result.natural_frequencies.iter().enumerate() {
            let inside: f64 = power
                .iter()
                .enumerate()
                .filter(|(k, _)| {
                    let w = (k + 1) as f64 * resolution;
                    w >= omega * (1.0 - band) && w <= omega * (1.0 + band)
                })
                .map(|(_, p)| p)
                .sum();
            let fraction = if total > 0.0 { inside / total } else { 0.0 };
            bands.push(SpectralBand { channel, mode: mode + 1, omega, fraction, exceeds: fraction > threshold });
        }
    }
    bands
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub mission: String,
    pub metric: [f64; 4],
    pub tip_rms: f64,
    pub theta_max: f64,
    pub saturation_count: usize,
}

impl RunSummary {
    pub fn from_result(label: &str, result: &ScenarioResult) -> Result<Self, ScenarioError> {
        let (start, end) = (result.window_start(), result.end_time());
        Ok(Self {
            label: label.to_string(),
            mission: result.mission.clone(),
            metric: tracking_metric(result, start, end)?,
            tip_rms: tip_rms(result, start, end)?,
            theta_max: result.theta_max,
            saturation_count: result.saturation_count,
        })
    }

    fn values(&self) -> [f64; 7] {
        [
            self.metric[0],
            self.metric[1],
            self.metric[2],
            self.metric[3],
            self.tip_rms,
            self.theta_max,
            self.saturation_count as f64,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<RunSummary>,
}

pub const COMPARISON_COLUMNS: [&str; 7] =
    ["me_x", "me_y", "me_z", "me_psi", "tip_rms", "theta_max", "saturation_count"];

impl ComparisonTable {
    /// Row-wise differences against row `base`.
    pub fn differences(&self, base: usize) -> Vec<[f64; 7]> {
        let b = self.rows[base].values();
        self.rows
            .iter()
            .map(|r| {
                let v = r.values();
                std::array::from_fn(|i| v[i] - b[i])
            })
            .collect()
    }
}

pub fn compare_runs(rows: Vec<RunSummary>) -> Result<ComparisonTable, ScenarioError> {
    if rows.len() < 2 {
        return Err(ScenarioError::Mismatch(format!("need at least two runs, got {}", rows.len())));
    }
    if let Some(bad) = rows.iter().find(|r| r.mission != rows[0].mission) {
        return Err(ScenarioError::Mismatch(format!(
            "run `{}` flew a different scenario than `{}`",
            bad.label, rows[0].label
        )));
    }
    Ok(ComparisonTable { rows })
}

/// Trace of the adaptive loop on the linear augmented plant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTrace {
    pub times: Vec<f64>,
    /// `V = eᵀPe + Σ_j Λ_j/Γ_j ‖θ̃_j‖²` with the ideal parameters of the
    /// effectiveness in force.
    pub lyapunov: Vec<f64>,
    /// Index of the first sample after the effectiveness change.
    pub anomaly_index: Option<usize>,
    pub theta_norms: Vec<[f64; 4]>,
}

/// Adaptive loop on `ẋ = A x + B Λ u + B_m r` (no elasticity, no couplings).
pub fn run_linear_bench(
    controller: &Controller,
    a: &DMatrix<f64>,
    anomaly: Option<Anomaly>,
    reference: &ReferenceSchedule,
    duration: f64,
    dt: f64,
) -> Result<LinearTrace, ScenarioError> {
    let n = controller.n_states();
    let m = controller.n_inputs();
    let rows = controller.regressor.dim();
    let len = 2 * n + rows * m;
    let b = &controller.b;
    let steps = (duration / dt).round() as usize;
    let anomaly_step = anomaly.map(|a| (a.time / dt).round() as usize);

    let eval = |t: f64, y: &DVector<f64>, lambda: &Vector4<f64>| -> Result<DVector<f64>, ControlError> {
        let x = y.rows(0, n).into_owned();
        let x_m = y.rows(n, n).into_owned();
        let theta = DMatrix::from_column_slice(rows, m, y.rows(2 * n, rows * m).as_slice());
        let r = DVector::from_column_slice(reference.value(t).as_slice());
        let e = &x - &x_m;
        let phi = controller.regressor.eval(&x, 0.0);
        let u = control_law(&x, &theta, &controller.k_baseline, &phi);
        let lu = DVector::from_iterator(m, u.iter().zip(lambda.iter()).map(|(a, b)| a * b));
        let mut dy = DVector::zeros(len);
        dy.rows_mut(0, n).copy_from(&(a * &x + b * lu + &controller.reference.b_m * &r));
        dy.rows_mut(n, n).copy_from(&controller.reference.derivative(&x_m, &r, &e));
        let (rate, _) = controller.law.rate(&theta, &phi, &e)?;
        dy.rows_mut(2 * n, rows * m).copy_from_slice(rate.as_slice());
        Ok(dy)
    };
    let lyap = |y: &DVector<f64>, lambda: &Vector4<f64>| {
        let e = y.rows(0, n) - y.rows(n, n);
        let ideal = controller.ideal_parameters(lambda.as_slice(), None);
        let theta = DMatrix::from_column_slice(rows, m, y.rows(2 * n, rows * m).as_slice());
        let mut v = (e.transpose() * &controller.p * &e)[(0, 0)];
        for j in 0..m {
            let d = theta.column(j) - ideal.column(j);
            v += lambda[j] / controller.law.gamma[j] * d.norm_squared();
        }
        v
    };

    let mut y = DVector::zeros(len);
    let mut trace = LinearTrace {
        times: Vec::with_capacity(steps + 1),
        lyapunov: Vec::with_capacity(steps + 1),
        anomaly_index: anomaly_step,
        theta_norms: Vec::with_capacity(steps + 1),
    };
    for k in 0..=steps {
        let t = k as f64 * dt;
        let lambda = match (anomaly_step, anomaly) {
            (Some(s), Some(a)) if k >= s => a.effectiveness,
            _ => Vector4::repeat(1.0),
        };
        trace.times.push(t);
        trace.lyapunov.push(lyap(&y, &lambda));
        let theta = y.rows(2 * n, rows * m);
        trace.theta_norms.push(std::array::from_fn(|j| theta.rows(j * rows, rows).norm()));
        if k == steps {
            break;
        }
        let k1 = eval(t, &y, &lambda)?;
        let mut failure = None;
        let next = rk4_finish(&y, dt, k1, |frac, ys| match eval(t + frac * dt, ys, &lambda) {
            Ok(d) => d,
            Err(e) => {
                failure.get_or_insert(e);
                DVector::from_element(ys.len(), f64::NAN)
            }
        });
        if let Some(e) = failure {
            return Err(e.into());
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(ScenarioError::NonFinite { time: t + dt, last_good: t });
        }
        y = next;
    }
    Ok(trace)
}
