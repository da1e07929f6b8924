//! Command-line runner for phase-gate scenarios.
//!
//! `phasegate run <config.toml>` executes one scenario file; `phasegate
//! preset <name>` executes the checked-in scenario set of that name. Every
//! scenario writes CSV tables (17 significant digits) plus a JSON summary
//! carrying all derived scalars at full double precision, and optionally a
//! binary density-matrix dump.
//!
//! Exit codes: 0 on success, 2 for rejected input (config, arguments, I/O),
//! 3 for numerical failures inside the solvers.

mod config;
mod emit;
mod presets;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Scenario;
use crate::runner::Overrides;

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, config, or file system access; exit code 2.
    Validation(String),
    /// A solver failed numerically on valid input; exit code 3.
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<phasegate_core::Error> for CliError {
    fn from(err: phasegate_core::Error) -> Self {
        if err.is_numerical() {
            CliError::Numerical(err.to_string())
        } else {
            CliError::Validation(err.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "phasegate",
    version,
    about = "Simulates dissipative geometric phase gates on trapped-ion modes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory; defaults to $PHASEGATE_OUT_DIR, then the current
    /// directory. Created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the Monte Carlo seed of thermal scenarios.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the Monte Carlo realization count of thermal scenarios.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Worker thread count for parallel builds.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario config file.
    Run { config: PathBuf },
    /// Run every scenario of a checked-in preset.
    Preset {
        #[arg(value_enum)]
        name: presets::PresetName,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    let out_dir = resolve_out_dir(cli.out)?;
    let overrides = Overrides {
        seed: cli.seed,
        samples: cli.samples,
    };

    let scenarios: Vec<(String, Scenario)> = match cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                CliError::Validation(format!("cannot read {}: {e}", config.display()))
            })?;
            vec![(config.display().to_string(), config::parse(&text)?)]
        }
        Command::Preset { name } => presets::files(name)
            .iter()
            .map(|(file, text)| Ok(((*file).to_string(), config::parse(text)?)))
            .collect::<Result<_, CliError>>()?,
    };

    for (source, scenario) in scenarios {
        let written = runner::run_scenario(&scenario, &overrides, &out_dir)?;
        for path in written {
            println!("{source} [{}]: wrote {}", scenario.label(), path.display());
        }
    }
    Ok(())
}

fn resolve_out_dir(flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = flag
        .or_else(|| std::env::var_os("PHASEGATE_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if threads.is_some() {
        eprintln!("note: built without the parallel feature; --threads is ignored");
    }
    Ok(())
}
