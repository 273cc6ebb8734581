//! JSON and CSV output. JSON carries the whole record including the config
//! echo; CSV has one row per trial (or per swept matrix) with a fixed header.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::run::{ExperimentRecord, TrialRecord, TrialStatus};
use crate::sweep::{SweepFamily, SweepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Column order of the per-trial CSV.
pub const TRIAL_COLUMNS: [&str; 17] = [
    "trial",
    "seed",
    "status",
    "message",
    "reads",
    "read_fraction",
    "flops",
    "fro_error",
    "spectral_error",
    "relative_error",
    "tau",
    "error_ratio",
    "pre_recompression_error",
    "recompression_bound",
    "refinement_passes",
    "final_error_estimate",
    "wall_time_ms",
];

/// One CSV row, as read back by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub status: TrialStatus,
    pub message: Option<String>,
    pub reads: u64,
    pub read_fraction: f64,
    pub flops: u64,
    pub fro_error: Option<f64>,
    pub spectral_error: Option<f64>,
    pub relative_error: Option<f64>,
    pub tau: Option<f64>,
    pub error_ratio: Option<f64>,
    pub pre_recompression_error: Option<f64>,
    pub recompression_bound: Option<f64>,
    pub refinement_passes: usize,
    pub final_error_estimate: Option<f64>,
    pub wall_time_ms: f64,
}

impl From<&TrialRecord> for TrialRow {
    fn from(t: &TrialRecord) -> Self {
        TrialRow {
            trial: t.trial,
            seed: t.seed,
            status: t.status,
            message: t.message.clone(),
            reads: t.reads,
            read_fraction: t.read_fraction,
            flops: t.flops,
            fro_error: t.fro_error,
            spectral_error: t.spectral_error,
            relative_error: t.relative_error,
            tau: t.tau,
            error_ratio: t.error_ratio,
            pre_recompression_error: t.pre_recompression_error,
            recompression_bound: t.recompression_bound,
            refinement_passes: t.refinement.len(),
            final_error_estimate: t.refinement.last().map(|e| e.error_estimate),
            wall_time_ms: t.wall_time_ms,
        }
    }
}

pub fn record_json(record: &ExperimentRecord) -> Result<String> {
    Ok(serde_json::to_string_pretty(record)? + "\n")
}

pub fn write_record_csv(record: &ExperimentRecord, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for t in &record.trials {
        out.serialize(TrialRow::from(t))?;
    }
    if record.trials.is_empty() {
        out.write_record(TRIAL_COLUMNS)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `record` to `path`, or to stdout when `path` is `None`.
pub fn emit(record: &ExperimentRecord, format: Format, path: Option<&Path>) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        Format::Json => buf.extend_from_slice(record_json(record)?.as_bytes()),
        Format::Csv => write_record_csv(record, &mut buf)?,
    }
    write_out(&buf, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepRow {
    family: SweepFamily,
    i: usize,
    j: usize,
    read: bool,
    max_error: f64,
    failed: bool,
    pipeline_error: Option<String>,
}

pub fn emit_sweep(outcomes: &[SweepOutcome], format: Format, path: Option<&Path>) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        Format::Json => {
            buf.extend_from_slice(serde_json::to_string_pretty(outcomes)?.as_bytes());
            buf.push(b'\n');
        }
        Format::Csv => {
            let mut out = csv::Writer::from_writer(&mut buf);
            for o in outcomes {
                for e in &o.per_matrix {
                    out.serialize(SweepRow {
                        family: o.family,
                        i: e.i,
                        j: e.j,
                        read: e.read,
                        max_error: e.max_error,
                        failed: e.failed,
                        pipeline_error: e.pipeline_error.clone(),
                    })?;
                }
            }
            out.flush().map_err(csv::Error::from)?;
        }
    }
    write_out(&buf, path)
}

fn write_out(buf: &[u8], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, buf).map_err(|e| HarnessError::io(p, e)),
        None => std::io::stdout().write_all(buf).map_err(|e| HarnessError::io("<stdout>", e)),
    }
}
