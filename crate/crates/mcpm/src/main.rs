//! Command line front end: reads a TOML run configuration and writes CSV
//! tables — channel coefficients, design reports, simulated BER rows, axis
//! sweeps, and analytic-vs-simulated comparisons. Exit code 0 on success,
//! 2 for configuration problems, 3 for runtime failures.

use clap::{Args, Parser, Subcommand};
use mcpm::config::RunConfig;
use mcpm::runner::csv_for_command;
use mcpm::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mcpm",
    version,
    about = "Molecular-communication link simulator and design tool"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the channel coefficient table (n, h_n).
    Coeffs(CommonArgs),
    /// Report designed (alpha, gamma) pairs with predicted error rates.
    Design(CommonArgs),
    /// Run the configured experiment and write one BER row per scheme.
    Simulate(CommonArgs),
    /// Sweep the configured axis and write BER rows per (value, scheme).
    Sweep(CommonArgs),
    /// Write simulated BER rows with the analytic prediction appended.
    Analytic(CommonArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &CommonArgs) {
        match self {
            Command::Coeffs(a) => ("coeffs", a),
            Command::Design(a) => ("design", a),
            Command::Simulate(a) => ("simulate", a),
            Command::Sweep(a) => ("sweep", a),
            Command::Analytic(a) => ("analytic", a),
        }
    }
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; overrides the config's [output] section.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides [experiment].seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides the MCPM_THREADS environment variable.
    #[arg(long)]
    threads: Option<usize>,
    /// Design policy override: theoretical | exhaustive | fixed.
    #[arg(long)]
    policy: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (token, args) = cli.command.parts();
    match execute(token, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn execute(token: &str, args: &CommonArgs) -> Result<()> {
    configure_threads(args.threads)?;
    let mut cfg = RunConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(policy) = &args.policy {
        cfg.design.policy = Some(policy.clone());
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| PathBuf::from(&o.path)))
        .ok_or_else(|| Error::config("no output path: pass --out or set [output].path"))?;
    let text = csv_for_command(&cfg, token)?;
    let rows = text.lines().count().saturating_sub(1);
    std::fs::write(&out, &text)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", out.display()))))?;
    eprintln!("wrote {rows} rows to {}", out.display());
    Ok(())
}

/// Pin the global worker pool: explicit flag first, then MCPM_THREADS,
/// otherwise leave the library default.
fn configure_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("MCPM_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                Error::config(format!("MCPM_THREADS must be a thread count, got '{v}'"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::config("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?;
    }
    Ok(())
}
