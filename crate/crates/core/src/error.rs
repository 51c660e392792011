use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },
    #[error("singular matrix in {context}")]
    Singular { context: &'static str },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("iteration did not converge in {context} after {iterations} iterations")]
    NoConvergence { context: &'static str, iterations: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModalError {
    #[error("invalid beam parameter `{field}`: {reason}")]
    InvalidBeam { field: &'static str, reason: String },
    #[error("mass ratio must be non-negative, got {0}")]
    NegativeMassRatio(f64),
    #[error("at least one mode is required")]
    NoModes,
    #[error("frequency root for mode {mode} did not converge (residual {residual:.3e})")]
    RootNotConverged { mode: usize, residual: f64 },
    #[error("normalization integral for mode {mode} is not positive ({gamma_c:.3e}); wrong root?")]
    Conditioning { mode: usize, gamma_c: f64 },
    #[error("position {x} outside the arm [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },
    #[error("force map is singular")]
    SingularForceMap,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid vehicle parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("negative rotor speed {speed} on rotor {rotor}")]
    NegativeRotorSpeed { rotor: usize, speed: f64 },
    #[error("Euler-rate map is singular at pitch {pitch} rad")]
    GimbalSingularity { pitch: f64 },
    #[error("control effectiveness entry {index} must lie in (0, 1], got {value}")]
    InvalidEffectiveness { index: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("baseline gain design failed: {0}")]
    Design(String),
    #[error("Lyapunov solve failed: {0}")]
    Lyapunov(#[from] LinalgError),
    #[error("projection gradient vanished in the active branch")]
    ZeroGradient,
    #[error("invalid controller configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("operator gain K_p must be positive, got {0}")]
    NonPositiveGain(f64),
    #[error("operator lead time constant T_p must be positive, got {0}")]
    NonPositiveLead(f64),
    #[error("operator delay must be non-negative, got {0}")]
    NegativeDelay(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DelayError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("delay must be non-negative, got {0}")]
    NegativeDelay(f64),
    #[error("no characteristic root found right of -{0}")]
    NoRoots(f64),
    #[error("invalid sweep range: {0}")]
    Range(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("non-finite state at t = {time:.6} s (last good time {last_good:.6} s)")]
    NonFinite { time: f64, last_good: f64 },
    #[error("metric window [{start}, {end}] contains no samples")]
    EmptyWindow { start: f64, end: f64 },
    #[error("runs are not comparable: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Modal(#[from] ModalError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
