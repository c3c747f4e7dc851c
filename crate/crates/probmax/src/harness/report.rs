//! Report emission: summary/trajectory CSVs plus a JSON report.
//!
//! All files are UTF-8 with LF line endings and a mandatory header row.
//! Floats are written in Rust's shortest round-trip form. Wall-clock columns
//! are the only nondeterministic bytes and always sit last, so comparisons
//! can strip them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::experiment::RunReport;

fn fmt_opt(a: Option<f64>) -> String {
    a.map(|v| v.to_string()).unwrap_or_default()
}

/// Shortest decimal that round-trips (switches to exponent form only when
/// shorter), which is what `{:?}` produces for floats.
fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

/// Aggregate table, one row per (problem, schedule).
pub fn summary_csv(report: &RunReport) -> String {
    let mut out =
        String::from("scheme,a,n,K_projections,samples,median_error,mean_error,se_error,wall_ms\n");
    for (agg, wall) in report
        .aggregates
        .iter()
        .zip(&report.timing.aggregate_wall_ms)
    {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            agg.scheme.as_str(),
            fmt_opt(agg.a),
            agg.n,
            agg.projections,
            agg.samples,
            fmt_f(agg.median_error),
            fmt_f(agg.mean_error),
            fmt_f(agg.se_error),
            wall
        );
    }
    out
}

/// Per-iteration error data for trajectory plots.
pub fn trajectories_csv(report: &RunReport) -> String {
    let mut out = String::from("scheme,a,n,replication,iteration,samples_so_far,error\n");
    for t in &report.trajectories {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.scheme.as_str(),
            fmt_opt(t.a),
            t.n,
            t.replication,
            t.iteration,
            t.samples_so_far,
            fmt_f(t.error)
        );
    }
    out
}

/// Writes `summary.csv`, `trajectories.csv`, and `report.json` under
/// `out_dir`; returns the paths written.
pub fn emit_report(report: &RunReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let summary = out_dir.join("summary.csv");
    std::fs::write(&summary, summary_csv(report))?;
    let traj = out_dir.join("trajectories.csv");
    std::fs::write(&traj, trajectories_csv(report))?;
    let json = out_dir.join("report.json");
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Json(e.to_string()))?;
    std::fs::write(&json, text + "\n")?;
    Ok(vec![summary, traj, json])
}
