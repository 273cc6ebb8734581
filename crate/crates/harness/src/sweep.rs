//! Adversarial sweep over the δ-matrices (one unit entry, zeros elsewhere)
//! and their shifted variants `δ_ij − ½·𝟙`.
//!
//! A pipeline run with a fixed seed reads the same entries on every input
//! that agrees with the all-zero (or all-`−½`) base matrix on what it has read
//! so far. So if position `(i, j)` is never read on the base matrix, the
//! pipeline cannot tell `δ_ij` from the base, and one of the two is missed by
//! at least ½ at `(i, j)`. The unread positions of the base run therefore
//! give a lower bound on the failing fraction, reported as `counting_bound`.

use lowrank_core::inputs::{delta_matrix, shifted_delta};
use lowrank_core::{Mat, MatrixOracle};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{HarnessError, Result};
use crate::pipeline::execute;
use crate::SCHEMA_VERSION;

/// Largest enumerable sweep.
pub const MAX_SWEEP_ENTRIES: usize = 64 * 64;

/// Max-entry error at or above which an input counts as failed.
pub const FAIL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFamily {
    Delta,
    Shifted,
}

impl SweepFamily {
    fn matrix(self, m: usize, n: usize, i: usize, j: usize) -> lowrank_core::Result<Mat> {
        match self {
            SweepFamily::Delta => delta_matrix(m, n, i, j),
            SweepFamily::Shifted => shifted_delta(m, n, i, j),
        }
    }

    fn base(self, m: usize, n: usize) -> Mat {
        match self {
            SweepFamily::Delta => Mat::zeros(m, n),
            SweepFamily::Shifted => Mat::from_fn(m, n, |_, _| -0.5),
        }
    }
}

fn both() -> Vec<SweepFamily> {
    vec![SweepFamily::Delta, SweepFamily::Shifted]
}

/// Config for `lowrank sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub pipeline: PipelineConfig,
    #[serde(default = "both")]
    pub families: Vec<SweepFamily>,
    /// The one pipeline seed shared by every input of the sweep.
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub budget: Option<f64>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: SweepConfig = serde_json::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                c.schema_version
            )));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub i: usize,
    pub j: usize,
    /// Whether the base run read `(i, j)`.
    pub read: bool,
    pub max_error: f64,
    pub failed: bool,
    /// Set when the pipeline returned an error; the output is then taken as zero.
    pub pipeline_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub family: SweepFamily,
    pub m: usize,
    pub n: usize,
    /// Read fraction of the base run.
    pub read_fraction: f64,
    pub within_budget: bool,
    pub unread: usize,
    /// `unread / (m·n)`.
    pub counting_bound: f64,
    pub failures: usize,
    pub fail_fraction: f64,
    pub pipeline_errors: usize,
    pub per_matrix: Vec<SweepEntry>,
}

/// Runs `pipeline` (seed `seed`) on all `m·n` matrices of `family`.
pub fn adversarial_sweep(
    m: usize,
    n: usize,
    pipeline: &PipelineConfig,
    family: SweepFamily,
    seed: u64,
    budget: Option<f64>,
) -> Result<SweepOutcome> {
    if m == 0 || n == 0 || m * n > MAX_SWEEP_ENTRIES {
        return Err(HarnessError::config(format!(
            "sweep needs 1 <= m·n <= {MAX_SWEEP_ENTRIES}, got {m}x{n}"
        )));
    }
    pipeline.validate(m, n)?;

    let mut base = MatrixOracle::new(family.base(m, n));
    // The base matrix may itself defeat the pipeline; only its reads matter.
    let _ = execute(&mut base, pipeline, seed);
    let report = base.access_report();

    let per_matrix = (0..m * n)
        .into_par_iter()
        .map(|t| {
            let (i, j) = (t / n, t % n);
            let a = family.matrix(m, n, i, j)?;
            let mut o = MatrixOracle::new(a.clone());
            let (approx, pipeline_error) = match execute(&mut o, pipeline, seed) {
                Ok(out) => (out.approx.dense(), None),
                Err(e) => (Mat::zeros(m, n), Some(e.to_string())),
            };
            let max_error = (&approx - &a).max_abs();
            Ok(SweepEntry {
                i,
                j,
                read: base.is_touched(i, j),
                max_error,
                failed: max_error.is_nan() || max_error >= FAIL_THRESHOLD,
                pipeline_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let total = (m * n) as f64;
    let unread = per_matrix.iter().filter(|e| !e.read).count();
    let failures = per_matrix.iter().filter(|e| e.failed).count();
    Ok(SweepOutcome {
        family,
        m,
        n,
        read_fraction: report.fraction,
        within_budget: budget.is_none_or(|b| report.fraction <= b),
        unread,
        counting_bound: unread as f64 / total,
        failures,
        fail_fraction: failures as f64 / total,
        pipeline_errors: per_matrix.iter().filter(|e| e.pipeline_error.is_some()).count(),
        per_matrix,
    })
}

/// Runs every family of `cfg`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepOutcome>> {
    cfg.families
        .iter()
        .map(|&f| adversarial_sweep(cfg.m, cfg.n, &cfg.pipeline, f, cfg.master_seed, cfg.budget))
        .collect()
}
