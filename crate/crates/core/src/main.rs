use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slpd::cli::{self, exit, CliError, LoadedConfig, RunOptions};

#[derive(Parser)]
#[command(name = "slpd", version, about = "Spectra and dynamics of polynomial sl(2) Hamiltonians")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    verbose: bool,
    /// Add wall-clock timings to the spectrum summary
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Exact, variational and su(2)-reference spectra per block
    Spectrum,
    /// Time evolution, collapse/revival and incommensurability report
    Dynamics,
    /// Mean-field trajectory on the coherent-state sphere
    Meanfield,
    /// Invariant checks; exit status 1 if any fails
    Verify,
}

fn run(args: &Args) -> Result<i32, CliError> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let opts = RunOptions {
        verbose: args.verbose,
        timings: args.timings,
    };
    let load = || match &args.config {
        Some(path) => LoadedConfig::load(path),
        None => Err(CliError::Config("--config is required".into())),
    };
    match args.command {
        Command::Spectrum => cli::cmd_spectrum(&load()?, &args.out, opts).map(|_| exit::OK),
        Command::Dynamics => cli::cmd_dynamics(&load()?, &args.out, opts).map(|_| exit::OK),
        Command::Meanfield => cli::cmd_meanfield(&load()?, &args.out, opts).map(|_| exit::OK),
        Command::Verify => {
            let loaded = match &args.config {
                Some(path) => LoadedConfig::load(path)?,
                None => LoadedConfig::default_verify(),
            };
            let outcome = cli::cmd_verify(&loaded, opts)?;
            print!("{}", outcome.table(args.verbose));
            Ok(outcome.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("slpd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
