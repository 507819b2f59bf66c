use std::path::PathBuf;

use qkdlc_core::optimize::{intensity_curve_csv, Analyzer, OptimizerConfig, Protocol};
use qkdlc_core::Probability;

use super::{error_params, fiber, parse_probability, parse_protocol, range};
use crate::output::{emit, Failure};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// bb84 or cow
    #[arg(long, value_parser = parse_protocol)]
    protocol: Protocol,
    /// Leak fraction r_E
    #[arg(long, value_parser = parse_probability, default_value = "0.005")]
    re: Probability,
    /// Distance range lo:hi:step in km
    #[arg(long, default_value = "50:250:1")]
    d: String,
    /// Error probability in both bases
    #[arg(long, value_parser = parse_probability, default_value = "0")]
    perr: Probability,
    /// Optimize the original protocol's bound instead of the enhanced rate
    #[arg(long)]
    original: bool,
    /// Fiber attenuation exponent ξ in T = 10^(-ξD)
    #[arg(long, default_value_t = 0.02)]
    xi: f64,
    /// Output CSV (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(a: Args) -> Result<(), Failure> {
    let distances = range(&a.d, "d")?;
    let formula = if a.original {
        a.protocol.original()
    } else {
        a.protocol.enhanced()
    };
    let curve = Analyzer::new(fiber(a.xi)?, OptimizerConfig::default()).optimal_intensity_curve(
        formula,
        &distances,
        a.re,
        error_params(a.perr, None, None),
    )?;
    emit(a.out.as_deref(), &intensity_curve_csv(&curve))
}
