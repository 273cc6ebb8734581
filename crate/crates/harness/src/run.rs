//! Multi-trial experiment runner.

use std::sync::Arc;
use std::time::Instant;

use lowrank_core::inputs::InputSpec;
use lowrank_core::linalg::{spectral_norm, svd, tail_norm};
use lowrank_core::refine::TraceEntry;
use lowrank_core::rng::split_seed;
use lowrank_core::{Mat, MatrixOracle};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{reseed, ExperimentConfig, InputSource};
use crate::error::{HarnessError, Result};
use crate::mm::load_matrix;
use crate::pipeline::execute;
use crate::stats::Quantiles;
use crate::SCHEMA_VERSION;

/// Seed streams derived from a trial seed.
const INPUT_STREAM: u64 = 0;
const PIPELINE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    /// Read fraction above the configured budget. Metrics are still filled in.
    BudgetExceeded,
    /// The pipeline returned an error; see `message`.
    Failed,
}

/// One trial. Field order here is the JSON and CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub status: TrialStatus,
    pub message: Option<String>,
    /// Distinct entries read, the oracle's final counter.
    pub reads: u64,
    pub read_fraction: f64,
    pub flops: u64,
    /// `‖M − M̃‖_F` (audit).
    pub fro_error: Option<f64>,
    /// `‖M − M̃‖₂` by power iteration (audit).
    pub spectral_error: Option<f64>,
    /// `fro_error / ‖M‖_F`.
    pub relative_error: Option<f64>,
    /// `τ_{ρ+1}(M)`, the optimal rank-ρ Frobenius error.
    pub tau: Option<f64>,
    /// `fro_error / tau`; absent when `tau` is zero.
    pub error_ratio: Option<f64>,
    /// `‖XY − M‖_F` of the approximation before recompression.
    pub pre_recompression_error: Option<f64>,
    /// `tau + 2·pre_recompression_error + 1e-8·‖M‖_F`, the ceiling the
    /// recompressed error must respect.
    pub recompression_bound: Option<f64>,
    pub refinement: Vec<TraceEntry>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub ok: usize,
    pub failed: usize,
    pub budget_violations: usize,
    /// Trials whose recompressed error exceeded `recompression_bound`.
    pub recompression_violations: usize,
    pub read_fraction: Option<Quantiles>,
    pub flops: Option<Quantiles>,
    pub relative_error: Option<Quantiles>,
    pub error_ratio: Option<Quantiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub rows: usize,
    pub cols: usize,
    pub summary: Summary,
    pub trials: Vec<TrialRecord>,
}

impl ExperimentRecord {
    pub fn budget_violated(&self) -> bool {
        self.summary.budget_violations > 0
    }

    /// A copy with every wall-time field zeroed, for reproducibility checks.
    pub fn without_wall_time(&self) -> Self {
        let mut r = self.clone();
        for t in &mut r.trials {
            t.wall_time_ms = 0.0;
        }
        r
    }
}

enum Source {
    Fixed(Arc<Mat>),
    Spec(InputSpec),
}

/// Runs every trial of `cfg`, on up to `jobs` threads (all cores when `None`).
pub fn run(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentRecord> {
    cfg.check_static()?;
    let source = match &cfg.input {
        InputSource::File { path } => Source::Fixed(Arc::new(load_matrix(path)?)),
        InputSource::Generated(spec) => Source::Spec(spec.clone()),
    };
    let (rows, cols) = match &source {
        Source::Fixed(m) => m.shape(),
        Source::Spec(s) => s.shape(),
    };
    cfg.pipeline.validate(rows, cols)?;

    let work = || -> Result<Vec<TrialRecord>> {
        (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, &source, t)).collect()
    };
    let mut trials = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    trials.sort_by_key(|t| t.trial);
    let summary = summarize(&trials);
    Ok(ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        rows,
        cols,
        summary,
        trials,
    })
}

fn run_trial(cfg: &ExperimentConfig, source: &Source, t: usize) -> Result<TrialRecord> {
    let seed = split_seed(cfg.master_seed, t as u64);
    let matrix = match source {
        Source::Fixed(m) => Arc::clone(m),
        Source::Spec(spec) => {
            let spec = if cfg.randomize.input {
                reseed(spec, split_seed(seed, INPUT_STREAM))
            } else {
                spec.clone()
            };
            Arc::new(spec.generate()?.matrix)
        }
    };
    let pipeline_seed = if cfg.randomize.multipliers {
        split_seed(seed, PIPELINE_STREAM)
    } else {
        split_seed(cfg.master_seed, u64::MAX)
    };

    let mut o = MatrixOracle::new((*matrix).clone());
    let start = Instant::now();
    let out = execute(&mut o, &cfg.pipeline, pipeline_seed);
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = o.access_report();
    let over_budget = cfg.budget.is_some_and(|b| report.fraction > b);

    let mut rec = TrialRecord {
        trial: t,
        seed,
        status: TrialStatus::Ok,
        message: None,
        reads: report.reads,
        read_fraction: report.fraction,
        flops: 0,
        fro_error: None,
        spectral_error: None,
        relative_error: None,
        tau: None,
        error_ratio: None,
        pre_recompression_error: None,
        recompression_bound: None,
        refinement: Vec::new(),
        wall_time_ms,
    };
    let out = match out {
        Ok(out) => out,
        Err(e) => {
            rec.status = TrialStatus::Failed;
            rec.message = Some(e.to_string());
            return Ok(rec);
        }
    };
    if over_budget {
        rec.status = TrialStatus::BudgetExceeded;
        rec.message = Some(format!(
            "read fraction {:.6} exceeds budget {}",
            report.fraction,
            cfg.budget.unwrap_or(1.0)
        ));
    }
    rec.flops = out.flops;
    rec.refinement = out.trace;

    if cfg.audit {
        // Everything below reads the matrix directly, outside the oracle's count.
        let m = o.audit();
        let norm = m.fro_norm();
        let resid = &out.approx.dense() - &m;
        let fro = resid.fro_norm();
        let tau = tail_norm(&svd(&m)?.sigma, cfg.pipeline.rho());
        rec.fro_error = Some(fro);
        rec.spectral_error = Some(spectral_norm(&resid).value);
        rec.relative_error = Some(if norm > 0.0 { fro / norm } else { fro });
        rec.tau = Some(tau);
        rec.error_ratio = (tau > 0.0).then(|| fro / tau);
        if let Some(pre) = &out.pre_recompression {
            let e = (&pre.dense() - &m).fro_norm();
            rec.pre_recompression_error = Some(e);
            rec.recompression_bound = Some(tau + 2.0 * e + 1e-8 * norm);
        }
    }
    Ok(rec)
}

fn summarize(trials: &[TrialRecord]) -> Summary {
    let done: Vec<&TrialRecord> = trials.iter().filter(|t| t.status != TrialStatus::Failed).collect();
    let collect = |f: &dyn Fn(&TrialRecord) -> Option<f64>| Quantiles::of(done.iter().filter_map(|t| f(t)).collect());
    Summary {
        trials: trials.len(),
        ok: trials.iter().filter(|t| t.status == TrialStatus::Ok).count(),
        failed: trials.len() - done.len(),
        budget_violations: trials.iter().filter(|t| t.status == TrialStatus::BudgetExceeded).count(),
        recompression_violations: done
            .iter()
            .filter(|t| matches!((t.fro_error, t.recompression_bound), (Some(e), Some(b)) if e > b))
            .count(),
        read_fraction: collect(&|t| Some(t.read_fraction)),
        flops: collect(&|t| Some(t.flops as f64)),
        relative_error: collect(&|t| t.relative_error),
        error_ratio: collect(&|t| t.error_ratio),
    }
}
