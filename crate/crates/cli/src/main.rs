//! `qkdlc`: key-rate sweeps, natural-loss curves, line tomography and Monte
//! Carlo validation for loss-controlled QKD.
//!
//! Exit codes: 0 success, 2 usage or invalid parameters, 3 numerical
//! degeneracy, 4 statistical validation failure.

mod cmd;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::output::Failure;

#[derive(Parser, Debug)]
#[command(name = "qkdlc", version, about = "Key-rate analysis for loss-controlled QKD")]
#[command(args_override_self = true)]
struct Cli {
    /// JSON object of flag values (keys are long flag names); overrides the command line
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Key rate against distance: enhanced, enhanced at the original intensity, original bound, PLOB
    Rates(cmd::rates::Args),
    /// Optimal signal intensity against distance
    Intensity(cmd::intensity::Args),
    /// Optimized BB84 rates against error probability at one distance
    Errors(cmd::errors::Args),
    /// Information an eavesdropper gains from naturally scattered light
    NaturalLoss(cmd::natural_loss::Args),
    /// Synthesize and fit a reflectogram, optionally estimating detection accuracy
    Tomography(cmd::tomography::Args),
    /// Pulse-level simulation checked against the analytic click probabilities
    Montecarlo(cmd::montecarlo::Args),
}

fn run() -> Result<(), Failure> {
    let argv = config::merged_args(std::env::args_os().collect()).map_err(Failure::Usage)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Err(if e.use_stderr() {
                Failure::Reported(2)
            } else {
                Failure::Reported(0)
            });
        }
    };
    configure_threads().map_err(Failure::Usage)?;
    match cli.command {
        Command::Rates(a) => cmd::rates::run(a),
        Command::Intensity(a) => cmd::intensity::run(a),
        Command::Errors(a) => cmd::errors::run(a),
        Command::NaturalLoss(a) => cmd::natural_loss::run(a),
        Command::Tomography(a) => cmd::tomography::run(a),
        Command::Montecarlo(a) => cmd::montecarlo::run(a),
    }
}

/// Honors `QKDLC_THREADS` as the worker-pool size.
fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("QKDLC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow::anyhow!("QKDLC_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(msg) = f.message() {
                eprintln!("error: {msg:#}");
            }
            ExitCode::from(f.code())
        }
    }
}
