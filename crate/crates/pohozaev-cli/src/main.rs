#![allow(clippy::neg_cmp_op_on_partial_ord)] // !(x > 0) deliberately rejects NaN

//! Config-driven CLI for the Pohozaev-set ground-state solver.
//!
//! Subcommands: `solve`, `fiber`, `check-hypotheses`, `sweep`, each
//! taking one TOML config and optional dotted-path overrides. See the
//! repository README for the config format and exit codes.

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{apply_override, parse_config, ConfigError, RunConfig};
use runner::{exit_code, RunError};

#[derive(Parser)]
#[command(
    name = "pohozaev",
    about = "Ground states of Berestycki-Lions type problems on the Pohozaev set",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the energy over the Pohozaev set and write the report.
    Solve(CommonArgs),
    /// Sample the fiber t -> I(u_t) of a stored or plateau state.
    Fiber(CommonArgs),
    /// Run the sampled hypothesis checklist for the configured family.
    #[command(name = "check-hypotheses")]
    CheckHypotheses(CommonArgs),
    /// Solve once per value of a swept parameter and combine the results.
    Sweep(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path of the TOML run configuration.
    config: PathBuf,
    /// Dotted-path overrides, e.g. --set solver.tol_el=1e-8 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load(args: &CommonArgs, subcommand: &str) -> Result<(RunConfig, toml::Table), RunError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| RunError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        ConfigError::Parse {
            line: 0,
            column: 0,
            message: e.message().to_string(),
        }
    })?;
    for assignment in &args.set {
        apply_override(&mut doc, assignment)?;
    }
    let rendered = toml::to_string(&doc).expect("document serializes");
    let cfg = parse_config(&rendered)?;
    if let Some(declared) = &cfg.command {
        if declared != subcommand {
            return Err(ConfigError::Validation(vec![format!(
                "config declares command `{declared}` but `{subcommand}` was invoked"
            )])
            .into());
        }
    }
    Ok((cfg, doc))
}

fn dispatch(cli: Cli) -> Result<PathBuf, RunError> {
    match &cli.command {
        Command::Solve(args) => {
            let (cfg, _) = load(args, "solve")?;
            runner::run_solve(&cfg)
        }
        Command::Fiber(args) => {
            let (cfg, _) = load(args, "fiber")?;
            runner::run_fiber(&cfg)
        }
        Command::CheckHypotheses(args) => {
            let (cfg, _) = load(args, "check-hypotheses")?;
            runner::run_check(&cfg)
        }
        Command::Sweep(args) => {
            let (cfg, doc) = load(args, "sweep")?;
            runner::run_sweep(&cfg, &doc)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(dir) => {
            println!("artifacts written to {}", dir.display());
            ExitCode::from(exit_code::OK as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
