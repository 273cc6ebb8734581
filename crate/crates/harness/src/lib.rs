//! Experiment harness for `lowrank-core`: JSON-configured multi-trial runs
//! with access budgets, the adversarial δ-matrix sweep, Matrix Market IO and
//! JSON/CSV output. The `lowrank` binary is a thin CLI over this library.

pub mod config;
pub mod emit;
mod error;
pub mod mm;
pub mod pipeline;
pub mod report;
pub mod run;
pub mod stats;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use run::{run, ExperimentRecord, TrialRecord};
pub use sweep::{adversarial_sweep, SweepFamily, SweepOutcome};

/// Version of the config and record formats.
pub const SCHEMA_VERSION: u32 = 1;
