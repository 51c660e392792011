//! Subcommand implementations behind the `flexquad` binary.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error,
//! 3 numerical abort, 4 comparison mismatch.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::adaptive::ReferenceKind;
use crate::config::{Config, DEFAULT_CONFIG};
use crate::delay::{stability_map, StabilityMap, SweepRange};
use crate::error::{ControlError, DynamicsError, ModalError, ScenarioError};
use crate::output;
use crate::scenario::{compare_runs, control_spectrum, RunSummary, ScenarioResult};

/// Directory searched for `flexquad.toml` when no `--config` is given.
pub const CONFIG_DIR_ENV: &str = "FLEXQUAD_CONFIG_DIR";
pub const CONFIG_FILE_NAME: &str = "flexquad.toml";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("comparison mismatch: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Mismatch(_) => 4,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let msg = e.to_string();
        match e {
            ScenarioError::NonFinite { .. } => Self::Numerical(msg),
            ScenarioError::Mismatch(_) => Self::Mismatch(msg),
            ScenarioError::Modal(ModalError::RootNotConverged { .. } | ModalError::Conditioning { .. }) => {
                Self::Numerical(msg)
            }
            ScenarioError::Control(ControlError::Config(_)) => Self::Config(msg),
            ScenarioError::Control(_) => Self::Numerical(msg),
            ScenarioError::Dynamics(DynamicsError::Dimension(_)) => Self::Numerical(msg),
            _ => Self::Config(msg),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Loads `path`, else `$FLEXQUAD_CONFIG_DIR/flexquad.toml`, else the shipped
/// default. Returns the configuration and where it came from.
pub fn load_config(path: Option<&Path>) -> Result<(Config, String), CliError> {
    let chosen = match path {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(CONFIG_DIR_ENV).map(|d| PathBuf::from(d).join(CONFIG_FILE_NAME)),
    };
    let (text, source) = match chosen {
        Some(p) => (fs::read_to_string(&p).map_err(|e| io_err(&p, e))?, p.display().to_string()),
        None => (DEFAULT_CONFIG.to_string(), "<built-in default>".to_string()),
    };
    let cfg = Config::from_toml(&text).map_err(|e| CliError::Config(format!("{source}: {e}")))?;
    Ok((cfg, source))
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| io_err(&p, e))
}

/// Mode table as CSV; also written to `out/modes.csv` when given.
pub fn cmd_modal(cfg: &Config, source: &str, modes: Option<usize>, out: Option<&Path>) -> Result<String, CliError> {
    let mut cfg = cfg.clone();
    if let Some(n) = modes {
        if n == 0 {
            return Err(CliError::Config("--modes must be at least 1".into()));
        }
        cfg.beam.n_modes = n;
    }
    let basis = cfg.modal_basis()?;
    let text = output::modes_csv(&basis);
    if let Some(dir) = out {
        prepare_dir(dir)?;
        write(dir, "modes.csv", &text)?;
        output::RunManifest::new("modal", source, dir, &cfg, None)
            .write(dir)
            .map_err(|e| io_err(dir, e))?;
    }
    Ok(text)
}

/// Run label: controller mode, with `-h` when the operator flies altitude.
pub fn run_label(cfg: &Config) -> String {
    let base = match cfg.controller.mode {
        ReferenceKind::Mrac => "mrac",
        ReferenceKind::Crm => "crm",
    };
    if cfg.operator.enabled {
        format!("{base}-h")
    } else {
        base.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub summary: RunSummary,
    pub result: ScenarioResult,
}

/// Runs the configured scenario and writes its files into `out`.
pub fn cmd_simulate(cfg: &Config, source: &str, out: &Path) -> Result<SimulateReport, CliError> {
    let pipeline = cfg.pipeline()?;
    let result = pipeline.run()?;
    let summary = RunSummary::from_result(&run_label(cfg), &result)?;
    let every = cfg.scenario.log_every;
    prepare_dir(out)?;
    write(out, "trajectory.csv", &output::trajectory_csv(&result, every))?;
    write(out, "control.csv", &output::control_csv(&result, every))?;
    write(out, "tips.csv", &output::tips_csv(&result, every))?;
    write(out, "theta.csv", &output::theta_csv(&result))?;
    write(out, "metrics.csv", &output::metrics_csv(&summary))?;
    write(out, "events.csv", &output::events_csv(&result.events))?;
    let bands = control_spectrum(&result, cfg.scenario.spectral_band, cfg.scenario.spectral_threshold);
    write(out, "spectrum.csv", &output::spectrum_csv(&bands))?;
    output::RunManifest::new("simulate", source, out, cfg, Some(&result.mission))
        .write(out)
        .map_err(|e| io_err(out, e))?;
    Ok(SimulateReport { summary, result })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StabmapOverrides {
    pub kp_range: Option<[f64; 2]>,
    pub tp_range: Option<[f64; 2]>,
    pub grid: Option<usize>,
    pub order: Option<usize>,
}

pub fn cmd_stabmap(
    cfg: &Config,
    source: &str,
    overrides: &StabmapOverrides,
    out: &Path,
) -> Result<StabilityMap, CliError> {
    let mut cfg = cfg.clone();
    if let Some(r) = overrides.kp_range {
        cfg.stabmap.kp_range = r;
    }
    if let Some(r) = overrides.tp_range {
        cfg.stabmap.tp_range = r;
    }
    if let Some(g) = overrides.grid {
        cfg.stabmap.grid = g;
    }
    if let Some(o) = overrides.order {
        cfg.stabmap.order = o;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let (kp, tp): (SweepRange, SweepRange) = cfg.sweep_ranges().map_err(|e| CliError::Config(e.to_string()))?;
    if !(kp.lo > 0.0 && tp.lo > 0.0) {
        return Err(CliError::Config("operator gain ranges must be positive".into()));
    }
    let problem = cfg.stability_problem()?;
    let map = stability_map(&problem, &kp, &tp, &cfg.root_options()).map_err(|e| CliError::Numerical(e.to_string()))?;
    prepare_dir(out)?;
    write(out, "stability.csv", &output::stability_csv(&map))?;
    output::RunManifest::new("stabmap", source, out, &cfg, None)
        .write(out)
        .map_err(|e| io_err(out, e))?;
    Ok(map)
}

/// Comparison table over simulation output directories.
pub fn cmd_compare(dirs: &[PathBuf], out: Option<&Path>) -> Result<String, CliError> {
    let mut rows = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let path = dir.join("metrics.csv");
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let row = output::parse_metrics_csv(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        rows.push(row);
    }
    let table = compare_runs(rows)?;
    let text = output::comparison_csv(&table);
    if let Some(dir) = out {
        prepare_dir(dir)?;
        write(dir, "comparison.csv", &text)?;
    }
    Ok(text)
}

/// Parses `lo,hi`.
pub fn parse_range(text: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [lo, hi] = parts.as_slice() else {
        return Err(format!("expected `lo,hi`, got `{text}`"));
    };
    let lo: f64 = lo.parse().map_err(|e| format!("`{lo}`: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("`{hi}`: {e}"))?;
    Ok([lo, hi])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("0.05, 1.5").unwrap(), [0.05, 1.5]);
        assert!(parse_range("1").is_err());
        assert!(parse_range("a,b").is_err());
    }

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::Numerical(String::new()).exit_code(), 3);
        assert_eq!(CliError::Mismatch(String::new()).exit_code(), 4);
        let e: CliError = ScenarioError::NonFinite { time: 1.0, last_good: 0.9 }.into();
        assert_eq!(e.exit_code(), 3);
    }
}
