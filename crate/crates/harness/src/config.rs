//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "srht-dual",
//!   "input": {"family": "dual_random", "m": 64, "n": 64, "rho": 4,
//!             "spectrum": {"rule": "flat"}, "noise": 0.001, "seed": 0},
//!   "pipeline": {"kind": "sketch", "rho": 4, "k": 18, "l": 9,
//!                "left": {"family": "hadamard", "d": 3},
//!                "right": {"family": "hadamard", "d": 3},
//!                "recompress": true,
//!                "refinement": {"recipe": "residual", "steps": 1, "homotopy": false}},
//!   "trials": 100,
//!   "master_seed": 7,
//!   "budget": 0.5
//! }
//! ```
//!
//! `input` is either a generator spec (tagged by `family`) or `{"path": ...}`
//! naming a Matrix Market or dense JSON file. Trial `t` runs with seed
//! `split_seed(master_seed, t)`; from it the input seed (when `randomize.input`)
//! and the multiplier seeds (when `randomize.multipliers`) are derived.

use std::fs;
use std::path::{Path, PathBuf};

use lowrank_core::inputs::InputSpec;
use lowrank_core::multipliers::{Family, Flags};
use lowrank_core::refine::Recipe;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub input: InputSource,
    pub pipeline: PipelineConfig,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Largest admissible read fraction; trials above it are recorded as
    /// budget failures.
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub randomize: Randomize,
    /// Compute dense ground-truth metrics through the audit channel. Turn off
    /// for inputs too large for a dense SVD.
    #[serde(default = "yes")]
    pub audit: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSource {
    File { path: PathBuf },
    Generated(InputSpec),
}

/// What changes between trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Randomize {
    #[serde(default = "yes")]
    pub input: bool,
    #[serde(default = "yes")]
    pub multipliers: bool,
}

impl Default for Randomize {
    fn default() -> Self {
        Randomize {
            input: true,
            multipliers: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PipelineConfig {
    /// Two-sided sketch, generalized Nystrom reconstruction, optional
    /// recompression and refinement.
    Sketch(SketchPipeline),
    /// Canonical CUR on uniformly sampled rows and columns.
    Cur(CurPipeline),
    /// Truncated SVD of the zero-filled matrix of a fixed random entry subset.
    EntrySubset(EntrySubsetPipeline),
}

/// Multiplier family and parameters for one side; the dimension, sample size
/// and seed are filled in per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideSpec {
    pub family: Family,
    #[serde(default)]
    pub d: usize,
    #[serde(default)]
    pub flags: Flags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchPipeline {
    pub rho: usize,
    /// Rows of `F`.
    pub k: usize,
    /// Columns of `H`.
    pub l: usize,
    pub left: SideSpec,
    pub right: SideSpec,
    #[serde(default = "yes")]
    pub recompress: bool,
    #[serde(default)]
    pub refinement: Option<RefinementConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementConfig {
    pub recipe: Recipe,
    /// Passes for direct refinement, step cap for homotopy.
    #[serde(default = "one")]
    pub steps: usize,
    #[serde(default)]
    pub homotopy: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurPipeline {
    pub rho: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySubsetPipeline {
    pub rho: usize,
    /// Fraction of entries read, in `(0, 1]`.
    pub fraction: f64,
}

impl PipelineConfig {
    pub fn rho(&self) -> usize {
        match self {
            PipelineConfig::Sketch(p) => p.rho,
            PipelineConfig::Cur(p) => p.rho,
            PipelineConfig::EntrySubset(p) => p.rho,
        }
    }

    /// Checks the pipeline against an `m × n` input.
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::config(msg));
        let rho = self.rho();
        if rho == 0 {
            return bad("pipeline.rho must be positive".into());
        }
        match self {
            PipelineConfig::Sketch(p) => {
                if p.k < rho || p.l < rho {
                    return bad(format!("need k, l >= rho (k = {}, l = {}, rho = {rho})", p.k, p.l));
                }
                if p.k > m || p.l > n {
                    return bad(format!("k = {} and l = {} must not exceed the {m}x{n} input", p.k, p.l));
                }
                for (side, dim) in [(&p.left, m), (&p.right, n)] {
                    if matches!(side.family, Family::Hadamard | Family::Fourier) && !dim.is_power_of_two() {
                        return bad(format!("{:?} multipliers need a power-of-two dimension, got {dim}", side.family));
                    }
                }
                if let Some(r) = p.refinement {
                    if p.left.family.is_complex() || p.right.family.is_complex() {
                        return bad("refinement needs real multipliers".into());
                    }
                    if r.steps == 0 {
                        return bad("refinement.steps must be positive".into());
                    }
                    if r.recipe == Recipe::Residual && (p.k < 2 * rho || p.l < 2 * rho) {
                        return bad(format!("residual refinement needs k, l >= 2 rho = {}", 2 * rho));
                    }
                }
            }
            PipelineConfig::Cur(p) => {
                if p.rows < rho || p.cols < rho || p.rows > m || p.cols > n {
                    return bad(format!(
                        "cur needs rho <= rows <= m and rho <= cols <= n (rows = {}, cols = {})",
                        p.rows, p.cols
                    ));
                }
            }
            PipelineConfig::EntrySubset(p) => {
                if !(p.fraction > 0.0 && p.fraction <= 1.0) {
                    return bad(format!("entry_subset.fraction must lie in (0, 1], got {}", p.fraction));
                }
            }
        }
        if rho > m.min(n) {
            return bad(format!("rho = {rho} exceeds min(m, n) = {}", m.min(n)));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.check_static()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    /// Checks that do not need the input matrix.
    pub fn check_static(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.trials == 0 {
            return Err(HarnessError::config("trials must be positive"));
        }
        if let Some(b) = self.budget {
            if !(0.0..=1.0).contains(&b) {
                return Err(HarnessError::config(format!("budget must lie in [0, 1], got {b}")));
            }
        }
        Ok(())
    }
}

/// `spec` with its seed replaced, for families that have one.
pub fn reseed(spec: &InputSpec, seed: u64) -> InputSpec {
    let mut s = spec.clone();
    match &mut s {
        InputSpec::DualRandom { seed: sd, .. } | InputSpec::Decay { seed: sd, .. } => *sd = seed,
        InputSpec::Delta { .. } | InputSpec::ShiftedDelta { .. } => {}
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
      "schema_version": 1,
      "input": {"family": "dual_random", "m": 64, "n": 64, "rho": 4,
                "spectrum": {"rule": "flat"}, "noise": 0.001, "seed": 0},
      "pipeline": {"kind": "sketch", "rho": 4, "k": 18, "l": 9,
                   "left": {"family": "gaussian"}, "right": {"family": "gaussian"}},
      "trials": 3
    }"#;

    #[test]
    fn parses_example_with_defaults() {
        let c = ExperimentConfig::from_json(EXAMPLE).unwrap();
        assert_eq!(c.trials, 3);
        assert!(c.audit && c.randomize.input && c.randomize.multipliers);
        assert!(matches!(c.input, InputSource::Generated(InputSpec::DualRandom { .. })));
        let PipelineConfig::Sketch(p) = &c.pipeline else { panic!() };
        assert!(p.recompress && p.refinement.is_none());
        c.pipeline.validate(64, 64).unwrap();
    }

    #[test]
    fn file_input() {
        let text = EXAMPLE.replace(
            r#"{"family": "dual_random", "m": 64, "n": 64, "rho": 4,
                "spectrum": {"rule": "flat"}, "noise": 0.001, "seed": 0}"#,
            r#"{"path": "a.mtx"}"#,
        );
        let c = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(c.input, InputSource::File { path: "a.mtx".into() });
    }

    #[test]
    fn json_round_trip() {
        let c = ExperimentConfig::from_json(EXAMPLE).unwrap();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            EXAMPLE.replace("\"schema_version\": 1", "\"schema_version\": 2"),
            EXAMPLE.replace("\"trials\": 3", "\"trials\": 0"),
            EXAMPLE.replace("\"trials\": 3", "\"trials\": 3, \"budget\": 1.5"),
            EXAMPLE.replace("\"trials\": 3", "\"trials\": 3, \"bogus\": 1"),
            EXAMPLE.replace("gaussian\"}, \"right", "nope\"}, \"right"),
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::from_json(&text), Err(HarnessError::Config(_))), "{text}");
        }
    }

    #[test]
    fn validation_against_shape() {
        let c = ExperimentConfig::from_json(EXAMPLE).unwrap();
        assert!(c.pipeline.validate(16, 64).is_err());
        let had = EXAMPLE.replace("gaussian", "hadamard");
        let c = ExperimentConfig::from_json(&had).unwrap();
        assert!(c.pipeline.validate(60, 64).is_err());
        assert!(c.pipeline.validate(64, 64).is_ok());
        let res = EXAMPLE.replace("\"right\": {\"family\": \"gaussian\"}", "\"right\": {\"family\": \"gaussian\"}, \"refinement\": {\"recipe\": \"residual\"}");
        let c = ExperimentConfig::from_json(&res).unwrap();
        assert!(c.pipeline.validate(64, 64).is_ok());
        let c = ExperimentConfig::from_json(&res.replace("\"l\": 9", "\"l\": 7")).unwrap();
        assert!(c.pipeline.validate(64, 64).is_err(), "l = 7 < 2 rho");
    }

    #[test]
    fn reseed_replaces_seed() {
        let s = InputSpec::Decay {
            m: 4,
            n: 4,
            kind: lowrank_core::inputs::DecayKind::Exp,
            rate: 0.5,
            seed: 1,
        };
        assert!(matches!(reseed(&s, 9), InputSpec::Decay { seed: 9, .. }));
    }
}
