//! `rsdp`: experiments on regime-switching diffusions driven by TOML configs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Loaded;
use error::{exit, CliError, Verdict};

#[derive(Debug, Parser)]
#[command(name = "rsdp", version, about = "Simulate and verify regime-switching diffusions")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Check the declared assumptions and print the derived constants.
    Check,
    /// Strong error of the Euler–Maruyama scheme against a fine reference.
    Converge,
    /// Pathwise domination by the birth–death chain and the exponential functional.
    Dominate,
    /// Reflection coupling: meeting times and the fixed-environment bound.
    Couple,
    /// Wasserstein distances between time-t laws from several initial conditions.
    Invariant,
    /// Dump one simulated path and its Poisson drive.
    Simulate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Converge => "converge",
            Command::Dominate => "dominate",
            Command::Couple => "couple",
            Command::Invariant => "invariant",
            Command::Simulate => "simulate",
        }
    }
}

fn run(cli: &Cli) -> Result<Verdict, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let loaded = Loaded::load(path)?;
    let workers = cli.workers.or(loaded.config.workers);
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::Config("workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| loaded.config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cli.command.name()));
    let ctx = commands::Context {
        seed: cli.seed.unwrap_or(loaded.config.seed),
        out,
        loaded,
    };
    match cli.command {
        Command::Check => commands::check::run(&ctx),
        Command::Converge => commands::converge::run(&ctx),
        Command::Dominate => commands::dominate::run(&ctx),
        Command::Couple => commands::couple::run(&ctx),
        Command::Invariant => commands::invariant::run(&ctx),
        Command::Simulate => commands::simulate::run(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(v) => {
            match &v {
                Verdict::Success => {}
                Verdict::Assumption(m) => eprintln!("assumption failure: {m}"),
                Verdict::Threshold(m) => eprintln!("threshold failure: {m}"),
                Verdict::Inconclusive(m) => eprintln!("inconclusive: {m}"),
            }
            v.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    };
    debug_assert!(code <= exit::INCONCLUSIVE);
    ExitCode::from(code as u8)
}
