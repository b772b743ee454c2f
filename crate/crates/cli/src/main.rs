//! `heatsheet <subcommand> --config <path> [--seed N] [--workers N] [--out DIR] [key=value ...]`

mod config;
mod error;
mod run;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunFile;
use crate::error::CliError;
use crate::run::{dispatch, Subcommand};

/// Version tag of the envelope, CSV and dump layouts documented in SCHEMA.md.
const SCHEMA: &str = "heatsheet/1";

#[derive(Parser, Debug)]
#[command(name = "heatsheet", version, about = "Stochastic heat equation laboratory")]
struct Args {
    #[arg(value_enum)]
    command: Subcommand,
    /// TOML run file, or an earlier envelope.json to rerun.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides experiment.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides workers).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Dotted overrides, e.g. experiment.n_trials=500.
    overrides: Vec<String>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: &'a str,
    version: &'a str,
    subcommand: Subcommand,
    config: &'a RunFile,
    wall_clock_seconds: f64,
    payload: Value,
    files: Vec<String>,
}

fn execute(args: &Args) -> Result<(), CliError> {
    let mut overrides = args.overrides.clone();
    if let Some(s) = args.seed {
        overrides.push(format!("experiment.seed={s}"));
    }
    if let Some(w) = args.workers {
        overrides.push(format!("workers={w}"));
    }
    let run = config::load(args.config.as_deref(), &overrides)?;
    std::fs::create_dir_all(&args.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.workers)
        .build()
        .map_err(|e| CliError::Output(format!("worker pool: {e}")))?;
    let started = Instant::now();
    let outcome = pool.install(|| dispatch(args.command, &run, &args.out))?;
    let failed_checks = failed_checks(args.command, &outcome.payload);
    let env = Envelope {
        schema: SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        subcommand: args.command,
        config: &run,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        payload: outcome.payload,
        files: outcome.files,
    };
    write_envelope(&args.out, &env)?;
    if !failed_checks.is_empty() {
        return Err(CliError::Verification(failed_checks.join(", ")));
    }
    Ok(())
}

fn failed_checks(cmd: Subcommand, payload: &Value) -> Vec<String> {
    if cmd != Subcommand::Verify {
        return Vec::new();
    }
    payload["checks"]
        .as_array()
        .map(|cs| {
            cs.iter()
                .filter(|c| c["passed"] == Value::Bool(false))
                .filter_map(|c| c["name"].as_str().map(str::to_string))
                .collect()
        })
        .unwrap_or_default()
}

fn write_envelope(out: &Path, env: &Envelope) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(env)?;
    std::fs::write(out.join("envelope.json"), text + "\n")?;
    Ok(())
}

fn main() {
    let args = Args::parse();
    if let Err(e) = execute(&args) {
        eprintln!("error [{}]: {e}", e.category().as_str());
        std::process::exit(e.exit_code());
    }
}
