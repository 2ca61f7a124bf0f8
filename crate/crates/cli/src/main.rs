//! `greenstack` — embodied-carbon and delay modeling for 2D/3D DNN
//! accelerators with approximate-multiplier design space exploration.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible design or
//! unsatisfiable constraint, 4 internal guard.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, CONFIG_ENV};
use greenstack::error::Error;

#[derive(Parser)]
#[command(name = "greenstack", version, about)]
struct Cli {
    #[command(flatten)]
    overrides: GlobalOverrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOverrides {
    /// Config file (JSON); defaults to $GREENSTACK_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Technology node name, e.g. 14nm.
    #[arg(long, global = true)]
    node: Option<String>,
    /// Organization: 2d or 3d.
    #[arg(long, global = true)]
    dims: Option<String>,
    /// Accuracy-drop threshold (absolute fraction, e.g. 0.03).
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Minimum frames/s a design must sustain.
    #[arg(long, global = true)]
    fps: Option<f64>,
    /// RNG seed for the design space exploration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Workload: builtin:<name> or a path to a workload JSON.
    #[arg(long, global = true)]
    workload: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustively characterize the multiplier library and write its CSV.
    Characterize {
        /// Operand width in bits.
        #[arg(long)]
        width: Option<u32>,
        /// Comma-separated families to include (exact,trunc,perf,loa).
        #[arg(long)]
        families: Option<String>,
    },
    /// Measure per-multiplier inference accuracy drops on the bundled proxy.
    Accuracy,
    /// Evaluate one explicit configuration end to end.
    Report {
        #[arg(long)]
        px: u32,
        #[arg(long)]
        py: u32,
        /// Local (per-PE) buffer bytes.
        #[arg(long)]
        b_local: u64,
        /// Global SRAM bytes.
        #[arg(long)]
        b_global: u64,
    },
    /// Run the genetic algorithm and write the best design + convergence CSV.
    Optimize,
    /// Compare 2D/3D exact/approximate designs across the PE ladder.
    Sweep,
}

fn effective_config(overrides: &GlobalOverrides) -> Result<RunConfig, Error> {
    let path = overrides
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut cfg = match path {
        Some(p) => RunConfig::load(&p)?,
        None => RunConfig::default(),
    };
    if let Some(node) = &overrides.node {
        cfg.node = node.clone();
    }
    if let Some(dims) = &overrides.dims {
        cfg.dims = dims.parse()?;
    }
    if let Some(delta) = overrides.delta {
        cfg.accuracy_delta = delta;
    }
    if let Some(fps) = overrides.fps {
        cfg.fps_target = Some(fps);
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
        cfg.ga.rng_seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.out_dir = out.clone();
    }
    if let Some(workload) = &overrides.workload {
        cfg.workload = workload.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Failures annotated with the process exit code they map to.
pub enum CliError {
    /// Configuration problems and invalid inputs (exit 2).
    Model(Error),
    /// The requested or discovered design is infeasible (exit 3).
    Infeasible(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(Error::NoFeasibleDie { .. }) => 3,
            CliError::Model(Error::Guard(_)) => 4,
            CliError::Model(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Model(e) => e.to_string(),
            CliError::Infeasible(msg) => msg.clone(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<(), CliError> {
        let cfg = effective_config(&cli.overrides)?;
        match &cli.command {
            Command::Characterize { width, families } => {
                commands::characterize(&cfg, *width, families.as_deref())
            }
            Command::Accuracy => commands::accuracy(&cfg),
            Command::Report {
                px,
                py,
                b_local,
                b_global,
            } => commands::report(&cfg, *px, *py, *b_local, *b_global),
            Command::Optimize => commands::optimize(&cfg),
            Command::Sweep => commands::sweep(&cfg),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
