pub mod errors;
pub mod intensity;
pub mod montecarlo;
pub mod natural_loss;
pub mod rates;
pub mod tomography;

use qkdlc_core::channel::FiberSpec;
use qkdlc_core::format::parse_range;
use qkdlc_core::keyrate::ErrorParams;
use qkdlc_core::Probability;

use crate::output::{usage, Failure};

pub fn parse_probability(s: &str) -> Result<Probability, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    Probability::new(v).map_err(|e| e.to_string())
}

pub fn parse_protocol(s: &str) -> Result<qkdlc_core::optimize::Protocol, String> {
    s.parse().map_err(|e: qkdlc_core::Error| e.to_string())
}

pub fn range(spec: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let v = parse_range(spec).map_err(|e| usage(format!("--{what}: {e}")))?;
    if v.iter().any(|x| *x < 0.0) {
        return Err(usage(format!("--{what}: values must be non-negative")));
    }
    Ok(v)
}

pub fn fiber(xi: f64) -> Result<FiberSpec, Failure> {
    Ok(FiberSpec::new(xi, 0.0)?)
}

/// `--perr` applies to both bases unless a basis-specific flag overrides it.
pub fn error_params(
    perr: Probability,
    perr_x: Option<Probability>,
    perr_z: Option<Probability>,
) -> ErrorParams {
    ErrorParams {
        p_err_x: perr_x.unwrap_or(perr),
        p_err_z: perr_z.unwrap_or(perr),
    }
}
