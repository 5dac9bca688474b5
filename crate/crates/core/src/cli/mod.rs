//! The `logerg` command-line experiment runner.
//!
//! Every subcommand prints one summary line, optionally writes a CSV table
//! (`--out`) and a JSON report (`--json`) that embeds the resolved
//! configuration. Exit status: 0 on success, 2 on invalid configuration or
//! unwritable output, 1 on internal errors.

mod commands;
mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;

use clap::{Parser, Subcommand};

use crate::error::Error;

pub use config::{parse_alpha, parse_point, parse_system, Overrides, Settings, SEED_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "logerg",
    version,
    about = "Arithmetic and logarithmic orbit-averaging experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cesàro / logarithmic / Weyl averages of d(T^k x, T^k y) along the schedule
    Average(Overrides),
    /// Limit-set estimates of empirical measures under ρ
    Vset(Overrides),
    /// Invariance defect of empirical measures along the schedule
    Defect(Overrides),
    /// Modulus of mean equicontinuity δ(ε)
    Modulus(Overrides),
    /// Mean-sensitivity constant estimate
    Sensitivity(Overrides),
    /// Mean equicontinuity vs mean sensitivity verdict
    Dichotomy(Overrides),
    /// Compare empirical measures of several start points
    UniqueErgodicity(Overrides),
    /// Averages of a discontinuous indicator along the orbit of 0
    Oxtoby(Overrides),
    /// Möbius-weighted orbit averages
    Sarnak(Overrides),
    /// Light run of the main diagnostics for one system
    Report(Overrides),
}

impl Command {
    fn split(self) -> (&'static str, Overrides) {
        match self {
            Command::Average(o) => ("average", o),
            Command::Vset(o) => ("vset", o),
            Command::Defect(o) => ("defect", o),
            Command::Modulus(o) => ("modulus", o),
            Command::Sensitivity(o) => ("sensitivity", o),
            Command::Dichotomy(o) => ("dichotomy", o),
            Command::UniqueErgodicity(o) => ("unique-ergodicity", o),
            Command::Oxtoby(o) => ("oxtoby", o),
            Command::Sarnak(o) => ("sarnak", o),
            Command::Report(o) => ("report", o),
        }
    }
}

/// What went wrong, and which exit status it maps to.
#[derive(Debug)]
pub(crate) enum Failure {
    Config(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DegenerateSampler(_) => Failure::Internal(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

/// Result of a subcommand before it is written out.
pub(crate) struct Outcome {
    pub summary: String,
    pub report: serde_json::Value,
    pub csv: Option<String>,
}

fn load_config(path: &Path) -> Result<Overrides, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("malformed config file {}: {e}", path.display())))
}

fn claim_output(path: &Path) -> Result<(), Failure> {
    File::create(path)
        .map(drop)
        .map_err(|e| Failure::Config(format!("cannot write output path {}: {e}", path.display())))
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .map_err(|e| Failure::Config(format!("cannot write output path {}: {e}", path.display())))
}

fn execute(command: Command) -> Result<String, Failure> {
    let (name, flags) = command.split();
    let file = match &flags.config {
        Some(path) => load_config(path)?,
        None => Overrides::default(),
    };
    let settings = Settings::resolve(name, flags.or(file), std::env::var(SEED_ENV).ok())?;
    for path in [&settings.out, &settings.json].into_iter().flatten() {
        claim_output(path)?;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = settings.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::Internal(format!("cannot start worker pool: {e}")))?;
    let outcome = pool.install(|| commands::dispatch(&settings))?;

    if let Some(path) = &settings.out {
        let csv = outcome.csv.as_deref().unwrap_or("");
        write_output(path, csv.as_bytes())?;
    }
    if let Some(path) = &settings.json {
        let report = serde_json::json!({ "config": settings, "result": outcome.report });
        let mut text =
            serde_json::to_string_pretty(&report).map_err(|e| Failure::Internal(e.to_string()))?;
        text.push('\n');
        write_output(path, text.as_bytes())?;
    }
    Ok(outcome.summary)
}

/// Parses `argv` (including the program name), runs the experiment and
/// returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match panic::catch_unwind(AssertUnwindSafe(|| execute(cli.command))) {
        Ok(Ok(summary)) => {
            println!("{summary}");
            0
        }
        Ok(Err(Failure::Config(msg))) => {
            eprintln!("error: {msg}");
            2
        }
        Ok(Err(Failure::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            1
        }
        Err(_) => {
            eprintln!("internal error: experiment panicked");
            1
        }
    }
}
