use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nqs_cli::commands;
use nqs_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "nqs", version, about = "Neural quantum state batch runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state optimization.
    Vmc(RunArgs),
    /// Real- or imaginary-time evolution.
    Tdvp(RunArgs),
    /// Exact diagonalization of the system Hamiltonian.
    Ed(RunArgs),
    /// Dump one batch of samples as CSV.
    Sample(RunArgs),
    /// Print little-group character tables.
    Chartable(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    config: PathBuf,
    /// Replace a config value, e.g. `integrator.dt=0.001`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Start from a saved parameter snapshot.
    #[arg(long)]
    params: Option<PathBuf>,
}

fn env_var<T: std::str::FromStr>(name: &str) -> Result<Option<T>, CliError> {
    match std::env::var(name) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Config(format!("{name}='{v}' is not valid"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = env_var::<usize>("THREADS")? {
        if n == 0 {
            return Err(CliError::Config("THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let (Command::Vmc(args) | Command::Tdvp(args) | Command::Ed(args) | Command::Sample(args) | Command::Chartable(args)) =
        &cli.command;
    let mut cfg = RunConfig::load(&args.config, &args.overrides)?;
    if let Some(seed) = env_var::<u64>("SEED")? {
        cfg.seed = seed;
    }
    let base = commands::output_base(&cfg, &args.config);
    let params = args.params.as_deref();
    match &cli.command {
        Command::Vmc(_) => commands::vmc(&cfg, &base, params),
        Command::Tdvp(_) => commands::tdvp(&cfg, &base, params),
        Command::Ed(_) => commands::ed(&cfg, &base),
        Command::Sample(_) => commands::sample(&cfg, &base, params),
        Command::Chartable(_) => {
            print!("{}", commands::chartable(&cfg)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
