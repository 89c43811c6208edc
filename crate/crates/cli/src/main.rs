mod bounds;
mod error;
mod meta;
mod oracle;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use finblock::channel_bounds::{min_uses_to_exceed_ci, Method};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "finblock",
    version,
    about = "Finite-blocklength bounds for quantum channel coding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rate bounds over a range of blocklengths, written as CSV.
    Bounds(bounds::BoundsArgs),
    /// Metaconverse value f(N, ε) of a channel given by its Choi matrix.
    Metaconverse(meta::MetaArgs),
    /// Cross-checks against brute-force and Monte-Carlo oracles.
    Oracle(oracle::OracleArgs),
    /// Smallest n at which the depolarizing outer bound exceeds its coherent information.
    N0(N0Args),
}

#[derive(clap::Args, Debug)]
struct N0Args {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long, value_enum, default_value = "order2")]
    mode: Mode,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Exact,
    Order2,
    Order3,
}

fn n0(args: &N0Args) -> Result<(), CliError> {
    let method = match args.mode {
        Mode::Exact => Method::Exact,
        Mode::Order2 => Method::Order2,
        Mode::Order3 => Method::Order3,
    };
    println!("{}", min_uses_to_exceed_ci(args.alpha, args.eps, method)?);
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("FINBLOCK_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|&t| t >= 1).ok_or_else(|| {
        CliError::BadArgs(format!(
            "FINBLOCK_THREADS must be a positive integer, got {value:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::BadArgs(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let argv: Vec<String> = std::env::args().collect();
    match &cli.command {
        Command::Bounds(a) => bounds::run(a, &argv),
        Command::Metaconverse(a) => meta::run(a, &argv),
        Command::Oracle(a) => oracle::run(a),
        Command::N0(a) => n0(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub(crate) fn manifest_path(out: &std::path::Path) -> PathBuf {
    out.with_extension("manifest.json")
}
