//! `uot`: command-line front end of uot-core.
//!
//! Every command writes a JSON report with the schema tag `uot-report/1`,
//! the configuration that produced it and a `result` object. Exit codes:
//! 0 on success, 2 on admissibility or feasibility errors, 1 on I/O, schema
//! and other errors. `UOT_THREADS` caps the worker threads used by sweeps.

mod commands;
mod error;
mod input;
mod report;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use commands::Command;
use error::CliError;
use report::Envelope;

#[derive(Debug, Parser)]
#[command(name = "uot", version, about = "Unbalanced optimal transport on model manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Leave the creation time out of the report.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Seed of randomized diagnostics.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

fn init_threads() {
    if let Some(n) = std::env::var("UOT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // fails only if a pool already exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn config_of(command: &Command, seed: u64) -> Value {
    let mut v = serde_json::to_value(command).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.insert("seed".into(), seed.into());
    }
    v
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let (command, seed) = match &cli.command {
        Command::Rerun(a) => match commands::embedded_config(&a.report) {
            Ok(x) => x,
            Err(e) => return fail(&e, "rerun", Value::Null, &cli),
        },
        other => (other.clone(), cli.seed),
    };
    let envelope =
        Envelope { command: command.name(), config: config_of(&command, seed), timestamp: !cli.no_timestamp };
    match commands::run(&command, seed) {
        Ok(outcome) => match report::emit(&envelope.success(outcome.result), cli.out.as_deref()) {
            Ok(()) => ExitCode::from(outcome.exit),
            Err(e) => {
                eprintln!("uot: {e}");
                ExitCode::from(e.exit_code())
            }
        },
        Err(e) => fail(&e, command.name(), envelope.config, &cli),
    }
}

fn fail(e: &CliError, command: &str, config: Value, cli: &Cli) -> ExitCode {
    eprintln!("uot: {e}");
    let envelope = Envelope { command, config, timestamp: !cli.no_timestamp };
    if let Err(w) = report::emit(&envelope.failure(e), cli.out.as_deref()) {
        eprintln!("uot: {w}");
    }
    ExitCode::from(e.exit_code())
}
