use std::path::PathBuf;

use qkdlc_core::montecarlo::{
    compare_to_analytic, simulate, tap_chi_square, ChiSquareTest, Comparison, SimConfig,
    SimOutcome,
};
use qkdlc_core::optimize::Protocol;
use qkdlc_core::Probability;
use serde::Serialize;

use super::{parse_probability, parse_protocol};
use crate::output::{emit, to_json, Failure};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// bb84 or cow
    #[arg(long, value_parser = parse_protocol)]
    protocol: Protocol,
    /// Signal intensity (mean photon number)
    #[arg(long)]
    mu: f64,
    /// Distance in km
    #[arg(long)]
    d: f64,
    /// Leak fraction r_E
    #[arg(long, value_parser = parse_probability, default_value = "0")]
    re: Probability,
    /// Number of pulses
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSON (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    config: SimConfig,
    outcome: SimOutcome,
    comparisons: Vec<Comparison>,
    tap_chi_square: Option<ChiSquareTest>,
    passed: bool,
}

pub fn run(a: Args) -> Result<(), Failure> {
    let config = SimConfig {
        protocol: a.protocol,
        intensity_mu: a.mu,
        distance_km: a.d,
        r_e: a.re,
        n_pulses: a.n,
        seed: a.seed,
    };
    let outcome = simulate(&config)?;
    let comparisons = compare_to_analytic(&outcome, &config)?;
    let chi = tap_chi_square(&outcome, &config)?;
    let passed = comparisons.iter().all(Comparison::passed);
    let report = Report {
        config,
        outcome,
        comparisons,
        tap_chi_square: chi,
        passed,
    };
    emit(a.out.as_deref(), &to_json(&report)?)?;
    if passed {
        Ok(())
    } else {
        eprintln!("error: an empirical frequency is more than 4 standard errors from its analytic value");
        Err(Failure::Statistical)
    }
}
