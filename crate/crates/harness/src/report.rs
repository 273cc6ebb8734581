//! Aggregates per-trial CSV files into one summary row per file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::emit::TrialRow;
use crate::error::{HarnessError, Result};
use crate::run::TrialStatus;
use crate::stats::Quantiles;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub file: String,
    pub trials: usize,
    pub ok: usize,
    pub failed: usize,
    pub budget_violations: usize,
    pub max_read_fraction: Option<f64>,
    pub median_flops: Option<f64>,
    pub median_relative_error: Option<f64>,
    pub median_error_ratio: Option<f64>,
    pub p95_error_ratio: Option<f64>,
}

pub fn summarize_csv(path: &Path) -> Result<ReportRow> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        k => HarnessError::config(format!("{}: {k:?}", path.display())),
    })?;
    let rows: Vec<TrialRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    let done: Vec<&TrialRow> = rows.iter().filter(|r| r.status != TrialStatus::Failed).collect();
    let q = |f: &dyn Fn(&TrialRow) -> Option<f64>| Quantiles::of(done.iter().filter_map(|r| f(r)).collect());
    let ratio = q(&|r| r.error_ratio);
    Ok(ReportRow {
        file: path.display().to_string(),
        trials: rows.len(),
        ok: rows.iter().filter(|r| r.status == TrialStatus::Ok).count(),
        failed: rows.len() - done.len(),
        budget_violations: rows.iter().filter(|r| r.status == TrialStatus::BudgetExceeded).count(),
        max_read_fraction: q(&|r| Some(r.read_fraction)).map(|s| s.max),
        median_flops: q(&|r| Some(r.flops as f64)).map(|s| s.median),
        median_relative_error: q(&|r| r.relative_error).map(|s| s.median),
        median_error_ratio: ratio.map(|s| s.median),
        p95_error_ratio: ratio.map(|s| s.p95),
    })
}

pub fn report(paths: &[PathBuf]) -> Result<Vec<ReportRow>> {
    paths.iter().map(|p| summarize_csv(p)).collect()
}

pub fn write_report(rows: &[ReportRow], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
