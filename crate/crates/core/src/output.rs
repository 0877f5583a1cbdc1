//! Trajectory, metrics and comparison files.
//!
//! The CSV layout is fixed: one row per control step with the columns of
//! [`CSV_COLUMNS`]. Floats are written in shortest round-trip form. The
//! `wrap_events` cell lists `channel:branch` pairs separated by `;` and is
//! empty on steps without a reset.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scenario::scenario_to_toml;
use crate::sim::{metrics, CompareReport, Metrics, StepRecord, TrajectoryLog};

#[rustfmt::skip]
pub const CSV_COLUMNS: [&str; 47] = [
    "t",
    "rho", "eps", "beta", "rho_dot", "rho_eps_dot", "rho_beta_dot",
    "phi", "theta", "psi", "w1", "w2", "w3",
    "rho_d", "eps_d", "beta_d", "rho_dot_d", "rho_eps_dot_d", "rho_beta_dot_d",
    "phi_d", "theta_d", "psi_d", "w1_d", "w2_d", "w3_d",
    "u_rho", "u_eps", "u_beta",
    "u_phi", "u_theta", "u_psi",
    "margin_input_p", "margin_input_a", "margin_collision", "margin_cone_eps",
    "margin_cone_beta", "margin_fov_roll", "margin_fov_pitch", "margin_fov_yaw",
    "qp_status_p", "qp_iterations_p", "qp_status_a", "qp_iterations_a",
    "wrap_events",
    "target_phi", "target_theta", "target_psi",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Validation(format!("unknown output format `{other}` (expected csv or json)"))),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn row(r: &StepRecord) -> Vec<String> {
    let mut out = Vec::with_capacity(CSV_COLUMNS.len());
    out.push(r.t.to_string());
    for v in r.x_p.iter().chain(&r.x_a).chain(&r.x_dp).chain(&r.x_da).chain(&r.u_p).chain(&r.u_a) {
        out.push(v.to_string());
    }
    out.extend(r.margins.values().iter().map(f64::to_string));
    out.push(r.qp_p.as_str().to_string());
    out.push(r.iters_p.to_string());
    out.push(r.qp_a.as_str().to_string());
    out.push(r.iters_a.to_string());
    let events: Vec<String> =
        r.wrap_events.iter().map(|e| format!("{}:{}", e.channel.as_str(), e.branch.as_str())).collect();
    out.push(events.join(";"));
    out.extend(r.target.iter().map(f64::to_string));
    out
}

pub fn write_csv<W: Write>(log: &TrajectoryLog, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in &log.records {
        wr.write_record(row(r)).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(log: &TrajectoryLog, w: W) -> Result<()> {
    serde_json::to_writer(w, log).map_err(|e| Error::Io(e.to_string()))
}

pub fn read_json<R: Read>(r: R) -> Result<TrajectoryLog> {
    serde_json::from_reader(r).map_err(|e| Error::Parse(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_pretty<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes `trajectory.{csv,json}` for the requested formats plus
/// `metrics.json` and `scenario.toml`. Returns the paths written.
pub fn emit(log: &TrajectoryLog, out_dir: impl AsRef<Path>, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for f in formats {
        let path = match f {
            Format::Csv => dir.join("trajectory.csv"),
            Format::Json => dir.join("trajectory.json"),
        };
        let mut w = create(&path)?;
        match f {
            Format::Csv => write_csv(log, &mut w)?,
            Format::Json => write_json(log, &mut w)?,
        }
        w.flush()?;
        written.push(path);
    }
    if !log.records.is_empty() {
        let path = dir.join("metrics.json");
        write_metrics(&metrics(log, &log.scenario.thresholds), &path)?;
        written.push(path);
    }
    let path = dir.join("scenario.toml");
    std::fs::write(&path, scenario_to_toml(&log.scenario)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    written.push(path);
    Ok(written)
}

pub fn write_metrics(m: &Metrics, path: &Path) -> Result<()> {
    write_pretty(m, path)
}

/// Writes `compare.json` (full report) and `compare.csv` (one row per seed
/// and channel) into `out_dir`.
pub fn emit_compare(report: &CompareReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let json = dir.join("compare.json");
    write_pretty(report, &json)?;
    let table = dir.join("compare.csv");
    let mut wr = csv::Writer::from_writer(create(&table)?);
    wr.write_record([
        "seed",
        "channel",
        "overshoot_sampling",
        "overshoot_standard",
        "convergence_time_sampling",
        "convergence_time_standard",
        "mean_abs_error_sampling",
        "mean_abs_error_standard",
    ])
    .map_err(csv_err)?;
    for s in &report.per_seed {
        for (c, name) in report.channels.iter().enumerate() {
            wr.write_record([
                s.seed.to_string(),
                name.clone(),
                s.sampling.overshoot[c].to_string(),
                s.standard.overshoot[c].to_string(),
                s.sampling.convergence_time[c].to_string(),
                s.standard.convergence_time[c].to_string(),
                s.sampling.mean_abs_error[c].to_string(),
                s.standard.mean_abs_error[c].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    wr.flush()?;
    Ok(vec![json, table])
}
