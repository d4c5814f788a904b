//! `monolab` command-line runner.
//!
//! Exit codes: 0 when every check came out as expected, 1 when a check did
//! not, 2 for configuration, guard and library errors.

mod analyze;
mod config;
mod export;
mod mixing;
mod output;
mod sample;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, Flags};

#[derive(Parser)]
#[command(name = "monolab", version, about = "Monotone spin-system laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sampler and write its trajectory and occupancy counts.
    Sample(Flags),
    /// Run exact checks on an enumerable instance.
    Verify(Flags),
    /// Independence constants, schedule bounds and uniqueness.
    Analyze(Flags),
    /// Exact mixing times and the field-dynamics product bound.
    Mixing(Flags),
    /// Write a transition matrix and its stationary law as CSV.
    KernelExport(Flags),
}

pub enum Outcome {
    Ok,
    CheckFailed,
}

type Runner = fn(&Config) -> anyhow::Result<Outcome>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags, run): (&'static str, &Flags, Runner) = match &cli.command {
        Command::Sample(f) => ("sample", f, sample::run),
        Command::Verify(f) => ("verify", f, verify::run),
        Command::Analyze(f) => ("analyze", f, analyze::run),
        Command::Mixing(f) => ("mixing", f, mixing::run),
        Command::KernelExport(f) => ("kernel-export", f, export::run),
    };
    match Config::load(name, flags).and_then(|cfg| run(&cfg)) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("monolab {name}: {e:#}");
            ExitCode::from(2)
        }
    }
}
