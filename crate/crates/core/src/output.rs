//! CSV tables and run manifests. Numbers are written with 17 significant
//! digits in exponent form so that files round-trip exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::delay::StabilityMap;
use crate::modal::ModalBasis;
use crate::scenario::{ComparisonTable, Event, RunSummary, ScenarioResult, SpectralBand, COMPARISON_COLUMNS};

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Header plus rows, rendered as CSV text.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn modes_csv(basis: &ModalBasis) -> String {
    csv_text(
        &["j", "beta_bar", "omega", "gamma_bar", "tip_value"],
        basis.modes.iter().map(|m| {
            vec![m.index.to_string(), fmt(m.beta_bar), fmt(m.omega), fmt(m.gamma_bar), fmt(m.tip_value)]
        }),
    )
}

const RIGID_NAMES: [&str; 12] = ["x", "y", "z", "phi", "theta", "psi", "vx", "vy", "vz", "p", "q", "r"];

fn decimated(n: usize, every: usize) -> impl Iterator<Item = usize> {
    // The last sample is always kept.
    (0..n).filter(move |&k| k % every == 0 || k + 1 == n)
}

pub fn trajectory_csv(res: &ScenarioResult, every: usize) -> String {
    let mut header = vec!["t"];
    header.extend(RIGID_NAMES);
    header.extend(["int_x", "int_y", "int_z", "int_psi"]);
    csv_text(
        &header,
        decimated(res.times.len(), every).map(|k| {
            let mut row = vec![fmt(res.times[k])];
            row.extend(res.rigid[k].iter().map(|&v| fmt(v)));
            row.extend(res.integral[k].iter().map(|&v| fmt(v)));
            row
        }),
    )
}

pub fn control_csv(res: &ScenarioResult, every: usize) -> String {
    let header = [
        "t", "u1", "u2", "u3", "u4", "applied_u1", "applied_u2", "applied_u3", "applied_u4", "r_x", "r_y",
        "r_z", "r_psi", "e_x", "e_y", "e_z", "e_psi",
    ];
    csv_text(
        &header,
        decimated(res.times.len(), every).map(|k| {
            let mut row = vec![fmt(res.times[k])];
            for block in [&res.commands[k], &res.applied[k], &res.references[k], &res.tracking_errors[k]] {
                row.extend(block.iter().map(|&v| fmt(v)));
            }
            row
        }),
    )
}

pub fn tips_csv(res: &ScenarioResult, every: usize) -> String {
    csv_text(
        &["t", "w1", "w2", "w3", "w4"],
        decimated(res.times.len(), every).map(|k| {
            let mut row = vec![fmt(res.times[k])];
            row.extend(res.tips[k].iter().map(|&v| fmt(v)));
            row
        }),
    )
}

/// One column per parameter, named `theta_<row>_<input>`.
pub fn theta_csv(res: &ScenarioResult) -> String {
    let (rows, cols) = res.theta_shape;
    let names: Vec<String> = (0..cols)
        .flat_map(|j| (0..rows).map(move |i| format!("theta_{}_{}", i + 1, j + 1)))
        .collect();
    let mut header = vec!["t"];
    header.extend(names.iter().map(String::as_str));
    csv_text(
        &header,
        res.theta_times.iter().zip(&res.theta).map(|(&t, th)| {
            let mut row = vec![fmt(t)];
            row.extend(th.iter().map(|&v| fmt(v)));
            row
        }),
    )
}

const METRIC_HEADER: [&str; 9] =
    ["label", "mission", "me_x", "me_y", "me_z", "me_psi", "tip_rms", "theta_max", "saturation_count"];

fn summary_row(s: &RunSummary) -> Vec<String> {
    let mut row = vec![s.label.clone(), s.mission.clone()];
    row.extend(s.metric.iter().map(|&v| fmt(v)));
    row.extend([fmt(s.tip_rms), fmt(s.theta_max), s.saturation_count.to_string()]);
    row
}

/// Metrics of one run; the mission column holds the mission hash.
pub fn metrics_csv(summary: &RunSummary) -> String {
    let mut s = summary.clone();
    s.mission = sha256_hex(&summary.mission);
    csv_text(&METRIC_HEADER, [summary_row(&s)])
}

pub fn parse_metrics_csv(text: &str) -> Result<RunSummary, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().collect::<Vec<_>>() != METRIC_HEADER {
        return Err(format!("unexpected metrics header {headers:?}"));
    }
    let rec = r
        .records()
        .next()
        .ok_or("metrics file has no data row")?
        .map_err(|e| e.to_string())?;
    let num = |i: usize| rec[i].parse::<f64>().map_err(|e| format!("column {}: {e}", METRIC_HEADER[i]));
    Ok(RunSummary {
        label: rec[0].to_string(),
        mission: rec[1].to_string(),
        metric: [num(2)?, num(3)?, num(4)?, num(5)?],
        tip_rms: num(6)?,
        theta_max: num(7)?,
        saturation_count: rec[8].parse().map_err(|e| format!("column saturation_count: {e}"))?,
    })
}

pub fn comparison_csv(table: &ComparisonTable) -> String {
    let mut header = vec!["label"];
    header.extend(COMPARISON_COLUMNS);
    let diffs = table.differences(0);
    let diff_names: Vec<String> = COMPARISON_COLUMNS.iter().map(|c| format!("d_{c}")).collect();
    header.extend(diff_names.iter().map(String::as_str));
    csv_text(
        &header,
        table.rows.iter().zip(diffs).map(|(s, d)| {
            let mut row = vec![s.label.clone()];
            row.extend(s.metric.iter().map(|&v| fmt(v)));
            row.extend([fmt(s.tip_rms), fmt(s.theta_max), s.saturation_count.to_string()]);
            row.extend(d.iter().map(|&v| fmt(v)));
            row
        }),
    )
}

pub fn spectrum_csv(bands: &[SpectralBand]) -> String {
    csv_text(
        &["channel", "mode", "omega", "fraction", "exceeds"],
        bands.iter().map(|b| {
            vec![
                (b.channel + 1).to_string(),
                b.mode.to_string(),
                fmt(b.omega),
                fmt(b.fraction),
                b.exceeds.to_string(),
            ]
        }),
    )
}

pub fn events_csv(events: &[Event]) -> String {
    csv_text(
        &["event", "time", "detail"],
        events.iter().map(|e| match e {
            Event::AnomalyInjected { requested, applied } => {
                vec!["anomaly".into(), fmt(*applied), format!("requested {requested}")]
            }
            Event::DelayRounded { requested, applied } => {
                vec!["delay_rounded".into(), fmt(0.0), format!("requested {requested}, applied {applied}")]
            }
            Event::FirstSaturation { time } => vec!["first_saturation".into(), fmt(*time), String::new()],
            Event::FirstProjectionExcursion { time } => {
                vec!["first_projection_excursion".into(), fmt(*time), String::new()]
            }
        }),
    )
}

pub fn stability_csv(map: &StabilityMap) -> String {
    csv_text(
        &["kp", "tp", "re_rightmost", "im_rightmost", "refined"],
        map.cells.iter().map(|c| {
            vec![fmt(c.kp), fmt(c.tp), fmt(c.re), fmt(c.im), u8::from(c.refined).to_string()]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub output_dir: String,
    pub tool_version: String,
    pub config_hash: String,
    pub mission_hash: Option<String>,
    pub config: Config,
}

impl RunManifest {
    pub fn new(command: &str, config_path: &str, output_dir: &Path, config: &Config, mission: Option<&str>) -> Self {
        Self {
            command: command.to_string(),
            config_path: config_path.to_string(),
            output_dir: output_dir.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: sha256_hex(&config.to_toml()),
            mission_hash: mission.map(sha256_hex),
            config: config.clone(),
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = toml::to_string(self).expect("manifest serializes");
        fs::write(dir.join("manifest.toml"), text)
    }
}
