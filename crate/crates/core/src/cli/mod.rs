//! Batch experiment driver behind the `factorlab` binary.
//!
//! Every subcommand except `verify` reads a TOML file of `[[case]]` tables,
//! appends one [`ExperimentRecord`] per case to `<out>/results.jsonl` and
//! rewrites `<out>/table_<experiment>.csv`.
//!
//! Lattice cases embed a model descriptor with exactly these fields:
//!
//! ```toml
//! [[case]]
//! model = { dimension = 2, extent = [2, 2], boundary = "open", m = 2, rho = [0.64, 0.36] }
//! amplitudes = ["4/5", "3/5"]   # optional, needed by --exact
//! region = { axis = 1, cut = 1 } # optional half-space {x : x[axis] < cut}
//! stack = { m = 2, rho = [0.5, 0.5] } # optional second model to stack
//! ```
//!
//! Exit codes: 0 on success, 1 when an acceptance check inside a run fails,
//! 2 on config or input errors.

pub mod config;
pub mod record;
pub mod runs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use record::{ExperimentRecord, OutputDir, Table, SCHEMA_VERSION};
pub use runs::{RunContext, RunOutput};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "factorlab", version, about = "Factor types, embezzlement, LOCC and lattice diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML file of `[[case]]` tables (all subcommands but `verify`)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory for results.jsonl and table_<experiment>.csv
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: number of cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Rational arithmetic where supported (lattice checks)
    #[arg(long, global = true)]
    pub exact: bool,

    /// Record wall times; records are then no longer reproducible
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Factor type of constant infinite tensor products
    Classify,
    /// Worst-case embezzlement κ along tensor powers
    Kappa,
    /// Commuting-projector lattice models: checks, ED, cut spectra
    Lattice,
    /// Entanglement growth of XX and colored Motzkin chains
    Chain,
    /// Pure-state conversion and distillation
    Locc,
    /// The acceptance suite
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Kappa => "kappa",
            Command::Lattice => "lattice",
            Command::Chain => "chain",
            Command::Locc => "locc",
            Command::Verify => "verify",
        }
    }
}

/// Runs one parsed invocation and writes its outputs.
pub fn execute(cli: &Cli) -> Result<RunOutput> {
    let ctx = RunContext {
        seed: cli.seed,
        exact: cli.exact,
        timings: cli.timings,
    };
    let config = || {
        cli.config
            .as_deref()
            .ok_or_else(|| Error::Config(format!("`{}` needs --config <path>", cli.command.name())))
    };
    let output = match cli.command {
        Command::Classify => runs::run_classify(&config::load(config()?)?, &ctx)?,
        Command::Kappa => runs::run_kappa(&config::load(config()?)?, &ctx)?,
        Command::Lattice => runs::run_lattice(&config::load(config()?)?, &ctx)?,
        Command::Chain => runs::run_chain(&config::load(config()?)?, &ctx)?,
        Command::Locc => runs::run_locc(&config::load(config()?)?, &ctx)?,
        Command::Verify => runs::run_verify(&ctx)?,
    };
    let out = OutputDir::create(&cli.out)?;
    out.append(&output.records)?;
    out.write_table(&output.experiment, &output.table)?;
    Ok(output)
}

fn install_pool(workers: Option<usize>) -> Result<()> {
    let Some(n) = workers else {
        return Ok(());
    };
    if n == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = install_pool(cli.workers).and_then(|_| execute(&cli));
    match result {
        Ok(output) => {
            for line in &output.summary {
                println!("{line}");
            }
            if output.failed {
                eprintln!("acceptance checks failed");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
