use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lowrank_harness::emit::{emit, emit_sweep, Format};
use lowrank_harness::mm::{load_matrix, save_matrix};
use lowrank_harness::report::{report, write_report};
use lowrank_harness::sweep::{run_sweep, SweepConfig};
use lowrank_harness::{run, ExperimentConfig, HarnessError, Result};

/// Sublinear low-rank approximation experiments.
///
/// Exit codes: 0 success, 2 budget violation, 3 config error, 1 anything else.
#[derive(Parser)]
#[command(name = "lowrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-trial experiment from a JSON config.
    Run(RunArgs),
    /// Adversarial sweep over the δ-matrix families.
    Sweep(RunArgs),
    /// Convert between Matrix Market (.mtx) and dense JSON (.json).
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize per-trial CSV files, one row per file.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Override the config's read-fraction budget.
    #[arg(long)]
    budget: Option<f64>,
    /// Override the trial count (ignored by `sweep`).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    jobs: Option<usize>,
}

fn read_config(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
}

fn cmd_run(a: &RunArgs) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_json(&read_config(&a.config)?)?;
    if let Some(b) = a.budget {
        cfg.budget = Some(b);
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.master_seed {
        cfg.master_seed = s;
    }
    let record = run(&cfg, a.jobs)?;
    emit(&record, a.format, a.out.as_deref())?;
    let s = &record.summary;
    log::info!(
        "{} trials: {} ok, {} failed, {} over budget",
        s.trials,
        s.ok,
        s.failed,
        s.budget_violations
    );
    Ok(!record.budget_violated())
}

fn cmd_sweep(a: &RunArgs) -> Result<bool> {
    let mut cfg = SweepConfig::from_json(&read_config(&a.config)?)?;
    if let Some(b) = a.budget {
        cfg.budget = Some(b);
    }
    if let Some(s) = a.master_seed {
        cfg.master_seed = s;
    }
    let outcomes = match a.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?
            .install(|| run_sweep(&cfg))?,
        None => run_sweep(&cfg)?,
    };
    emit_sweep(&outcomes, a.format, a.out.as_deref())?;
    for o in &outcomes {
        log::info!(
            "{:?}: read fraction {:.4}, fail fraction {:.4}, counting bound {:.4}",
            o.family,
            o.read_fraction,
            o.fail_fraction,
            o.counting_bound
        );
    }
    Ok(outcomes.iter().all(|o| o.within_budget))
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Convert { input, out } => {
            save_matrix(&load_matrix(&input)?, &out)?;
            Ok(true)
        }
        Command::Report { files, out } => {
            let rows = report(&files)?;
            match out {
                Some(p) => {
                    let f = fs::File::create(&p).map_err(|e| HarnessError::Io { path: p.clone(), source: e })?;
                    write_report(&rows, f)?;
                }
                None => write_report(&rows, std::io::stdout())?,
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: read budget exceeded");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
