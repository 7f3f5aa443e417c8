//! `engage`: command-line front end wiring ingestion, the rule pipeline,
//! clustering, and comparisons into reproducible on-disk reports.
//!
//! Exit codes: 0 success, 1 input or parse error, 2 internal-consistency
//! error (including failed simulation self-checks), 3 degenerate-analytics
//! error. The log level comes from the `ENGAGE_LOG` environment variable.

mod commands;
mod config;
mod errors;
mod output;
mod tables;

use clap::{Parser, Subcommand};
use config::{CommonFlags, RunConfig};
use engage_core::analytics::ClusterError;
use engage_core::pipeline::PipelineError;
use errors::{NoComparableRows, SelfCheckFailed};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "engage",
    version,
    about = "Rule-based engagement analytics for collaborative learning sessions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: CommonFlags,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw documents and write validated session bundles.
    Ingest,
    /// Classify and code ingested sessions; write coded tables and profiles.
    Analyze,
    /// Cluster profiles into drivers and passengers.
    Cluster,
    /// Compare clusters on external measures.
    Compare,
    /// Generate a synthetic session bundle with ground truth.
    Simulate {
        /// Run the pipeline over the generated session and require exact
        /// agreement with the ground truth on comparable seconds.
        #[arg(long)]
        self_check: bool,
    },
    /// Run every configured stage and bundle the outputs with a manifest.
    Report,
}

/// Die quietly when a consumer like `head` closes our stdout, as other
/// line-oriented unix tools do.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ENGAGE_LOG", "warn")).init();
    let cli = Cli::parse();

    let run = RunConfig::resolve(&cli.flags).and_then(|cfg| match cli.command {
        Command::Ingest => commands::ingest::run(&cfg),
        Command::Analyze => commands::analyze::run(&cfg),
        Command::Cluster => commands::cluster::run(&cfg),
        Command::Compare => commands::compare::run(&cfg),
        Command::Simulate { self_check } => commands::simulate::run(&cfg, self_check),
        Command::Report => commands::report::run(&cfg),
    });

    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(exit_code(&error))
        }
    }
}

fn exit_code(error: &anyhow::Error) -> u8 {
    if error.downcast_ref::<SelfCheckFailed>().is_some() {
        return 2;
    }
    if let Some(pipeline) = error.downcast_ref::<PipelineError>() {
        if matches!(pipeline, PipelineError::Inconsistent { .. }) {
            return 2;
        }
    }
    if error.downcast_ref::<NoComparableRows>().is_some() {
        return 3;
    }
    if let Some(cluster) = error.downcast_ref::<ClusterError>() {
        match cluster {
            ClusterError::Degenerate(_) | ClusterError::TooFewDistinctPoints { .. } => return 3,
            ClusterError::InvalidArg(_) => return 1,
        }
    }
    1
}
