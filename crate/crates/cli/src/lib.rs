//! `sbridge` command line: solve bridges between sample sets, simulate the
//! reference process, score samples and run the entropic OT baseline.
//!
//! Exit codes: 0 on success, 1 for usage, configuration and input errors,
//! 2 when the numerics fail (divergence, non-finite values, factorisation).

pub mod config;
mod output;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use output::Outputs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] sbridge_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sbridge", version, about = "Schrödinger bridges between sample sets via drift regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Synthetic marginals by name.
    #[arg(long)]
    pub preset: Option<String>,
    /// Samples per marginal for presets.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a bridge between two marginals and score it.
    Solve(CommonArgs),
    /// Simulate the reference process from the initial marginal.
    PriorSim(CommonArgs),
    /// EMD and KS between two sample CSVs.
    Eval {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Entropic OT coupling with the Brownian cost, and McCann interpolants.
    Sinkhorn {
        a: Option<PathBuf>,
        b: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a named preset end to end and write a summary table.
    Experiment {
        #[arg(value_name = "PRESET")]
        name: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Solve(common) => run::solve(&common, None),
        Command::PriorSim(common) => run::prior_sim(&common),
        Command::Eval { a, b, common } => run::eval(&a, &b, &common),
        Command::Sinkhorn { a, b, common } => run::sinkhorn(a.as_deref(), b.as_deref(), &common),
        Command::Experiment { name, common } => run::solve(&common, Some(&name)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
