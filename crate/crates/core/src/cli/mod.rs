//! Command-line front end.
//!
//! Every command reads a TOML [`ScenarioConfig`], runs library operations
//! and writes one comma-separated table preceded by a `#` comment block
//! holding the library version, the command and the effective
//! configuration. Exit status: 0 when every checked bound holds, 1 when a
//! bound is violated, 2 on configuration or precondition errors.

mod commands;
mod config;
mod selftest;

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

pub use commands::{run_command, Command, Report, Violation};
pub use config::{
    ComponentConfig, GridConfig, MixtureConfig, ModelConfig, RunConfig, ScenarioConfig, SpatialWindow, StateConfig,
    MIN_MOMENTUM_NODES, MIN_SPATIAL_POINTS,
};
pub use selftest::{run_selftest, Check, SelftestOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "locdens", version, about = "Localization densities for free scalar one-particle states")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, clap::Args)]
struct IoArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output table; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies the momentum nodes and the spatial intervals.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=64))]
    resolution_scale: u32,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Density table on the spatial grid for every time.
    Density(IoArgs),
    /// Mixture gaps and region probabilities.
    Convexity(IoArgs),
    /// Exponential tail fits against the mass bound.
    Tails(IoArgs),
    /// Quantile-front radii and speeds.
    Spread(IoArgs),
    /// Narrow-energy agreement and the width-energy scan.
    Compare(IoArgs),
    /// Built-in invariant checks.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `std::env::args` and runs; returns the exit status.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    let (command, args) = match cli.command {
        CliCommand::Density(a) => (Command::Density, a),
        CliCommand::Convexity(a) => (Command::Convexity, a),
        CliCommand::Tails(a) => (Command::Tails, a),
        CliCommand::Spread(a) => (Command::Spread, a),
        CliCommand::Compare(a) => (Command::Compare, a),
        CliCommand::Selftest { out } => {
            let checks = run_selftest(&SelftestOptions::default());
            let mut text = String::new();
            for c in &checks {
                text.push_str(&c.to_string());
                text.push('\n');
            }
            let passed = checks.iter().filter(|c| c.passed).count();
            text.push_str(&format!("{passed}/{} checks passed\n", checks.len()));
            emit(out.as_ref(), &text)?;
            return Ok(if passed == checks.len() { EXIT_OK } else { EXIT_VIOLATION });
        }
    };
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = ScenarioConfig::parse(&text)?.scaled(args.resolution_scale as usize);
    let report = run_command(command, &cfg)?;
    emit(args.out.as_ref(), &report.render(command, &cfg, args.resolution_scale as usize)?)?;
    for v in &report.violations {
        eprintln!("bound violated: {v}");
    }
    Ok(if report.violations.is_empty() { EXIT_OK } else { EXIT_VIOLATION })
}

fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}
