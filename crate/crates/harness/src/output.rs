//! Output files for one scenario run.
//!
//! Three artifacts land in the output directory:
//!   trust_scores.csv  - per-interval trust components and flags
//!   trajectories.csv  - expected vs actual track of the exemplar run
//!   report.json       - aggregate rates plus an echo of the scenario
//!
//! Headers and column order are fixed; reruns with the same seed produce
//! byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use uav_trust_core::UavId;

use crate::montecarlo::{MonteCarloReport, MonteCarloRun};
use crate::scenario::ScenarioSpec;

pub const TRUST_SCORES_FILE: &str = "trust_scores.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const REPORT_FILE: &str = "report.json";

const TRUST_HEADER: [&str; 7] = [
    "interval_index",
    "uav_id",
    "T_task",
    "T_ene",
    "T_dev",
    "T_total",
    "flagged",
];

const TRAJECTORY_HEADER: [&str; 8] = [
    "time",
    "uav_id",
    "expected_x",
    "expected_y",
    "expected_z",
    "actual_x",
    "actual_y",
    "actual_z",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot encode report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot parse {file}: {message}")]
    Malformed { file: String, message: String },
}

/// Writes the three output files into `dir`, creating it if needed.
pub fn emit_outputs(spec: &ScenarioSpec, run: &MonteCarloRun, dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir)?;
    write_trust_scores(run, &dir.join(TRUST_SCORES_FILE))?;
    write_trajectories(run, &dir.join(TRAJECTORIES_FILE))?;
    write_report(spec, &run.report, &dir.join(REPORT_FILE))?;
    Ok(())
}

fn write_trust_scores(run: &MonteCarloRun, path: &Path) -> Result<(), OutputError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(TRUST_HEADER)?;
    for verdict in &run.exemplar.verdicts {
        for (uav, tc) in &verdict.trust {
            writer.write_record([
                verdict.interval_index.to_string(),
                uav.to_string(),
                tc.task_trust.to_string(),
                tc.energy_trust.to_string(),
                tc.deviation_trust.to_string(),
                tc.total_trust.to_string(),
                (verdict.flagged == Some(*uav)).to_string(),
            ])?;
        }
    }
    writer.flush().map_err(OutputError::Io)?;
    Ok(())
}

fn write_trajectories(run: &MonteCarloRun, path: &Path) -> Result<(), OutputError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(TRAJECTORY_HEADER)?;
    for r in &run.exemplar.telemetry {
        writer.write_record([
            r.time.to_string(),
            r.uav.to_string(),
            r.expected_position.x.to_string(),
            r.expected_position.y.to_string(),
            r.expected_position.z.to_string(),
            r.reported_position.x.to_string(),
            r.reported_position.y.to_string(),
            r.reported_position.z.to_string(),
        ])?;
    }
    writer.flush().map_err(OutputError::Io)?;
    Ok(())
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    scenario: &'a ScenarioSpec,
    report: &'a MonteCarloReport,
}

fn write_report(
    spec: &ScenarioSpec,
    report: &MonteCarloReport,
    path: &Path,
) -> Result<(), OutputError> {
    let doc = ReportDocument {
        scenario: spec,
        report,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// One parsed row of `trust_scores.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustScoreRow {
    pub interval_index: usize,
    pub uav: UavId,
    pub task_trust: f64,
    pub energy_trust: f64,
    pub deviation_trust: f64,
    pub total_trust: f64,
    pub flagged: bool,
}

/// Reads `trust_scores.csv` back; the verdict stream can be reconstructed
/// from the returned rows.
pub fn read_trust_scores(path: &Path) -> Result<Vec<TrustScoreRow>, OutputError> {
    let file = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)?;
    {
        let headers = reader.headers()?;
        if headers != &csv::StringRecord::from(TRUST_HEADER.to_vec()) {
            return Err(OutputError::Malformed {
                file,
                message: format!("unexpected header {headers:?}"),
            });
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| -> Result<&str, OutputError> {
            record.get(i).ok_or_else(|| OutputError::Malformed {
                file: file.clone(),
                message: format!("row {:?} too short", record),
            })
        };
        let parse_f64 = |i: usize| -> Result<f64, OutputError> {
            field(i)?.parse().map_err(|e| OutputError::Malformed {
                file: file.clone(),
                message: format!("column {i}: {e}"),
            })
        };
        rows.push(TrustScoreRow {
            interval_index: field(0)?.parse().map_err(|e| OutputError::Malformed {
                file: file.clone(),
                message: format!("column 0: {e}"),
            })?,
            uav: UavId(field(1)?.parse().map_err(|e| OutputError::Malformed {
                file: file.clone(),
                message: format!("column 1: {e}"),
            })?),
            task_trust: parse_f64(2)?,
            energy_trust: parse_f64(3)?,
            deviation_trust: parse_f64(4)?,
            total_trust: parse_f64(5)?,
            flagged: field(6)?.parse().map_err(|e| OutputError::Malformed {
                file: file.clone(),
                message: format!("column 6: {e}"),
            })?,
        });
    }
    Ok(rows)
}
