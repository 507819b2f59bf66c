use std::path::PathBuf;

use clap::ValueEnum;
use qkdlc_core::keyrate::RateCurve;
use qkdlc_core::optimize::{Analyzer, IntensityChoice, OptimizerConfig, Protocol};
use qkdlc_core::Probability;

use super::{error_params, fiber, parse_probability, parse_protocol, range};
use crate::output::{to_json, usage, write_atomic, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// bb84 or cow
    #[arg(long, value_parser = parse_protocol)]
    protocol: Protocol,
    /// Comma-separated leak fractions r_E; one set of files per value
    #[arg(long, value_delimiter = ',', value_parser = parse_probability, default_value = "0.005")]
    re: Vec<Probability>,
    /// Distance range lo:hi:step in km
    #[arg(long, default_value = "50:250:1")]
    d: String,
    /// Error probability in both bases
    #[arg(long, value_parser = parse_probability, default_value = "0")]
    perr: Probability,
    /// BB84 X-basis error probability (overrides --perr)
    #[arg(long, value_parser = parse_probability)]
    perr_x: Option<Probability>,
    /// BB84 Z-basis error probability (overrides --perr)
    #[arg(long, value_parser = parse_probability)]
    perr_z: Option<Probability>,
    /// Optimize the enhanced rate over intensity at every distance (the default)
    #[arg(long)]
    optimize_intensity: bool,
    /// Evaluate the enhanced rate at this fixed intensity instead
    #[arg(long)]
    mu: Option<f64>,
    /// Fiber attenuation exponent ξ in T = 10^(-ξD)
    #[arg(long, default_value_t = 0.02)]
    xi: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

pub fn run(a: Args) -> Result<(), Failure> {
    let intensity = match (a.mu, a.optimize_intensity) {
        (Some(_), true) => {
            return Err(usage("--mu and --optimize-intensity are mutually exclusive"))
        }
        (Some(mu), false) if mu.is_finite() && mu >= 0.0 => IntensityChoice::Fixed(mu),
        (Some(mu), false) => return Err(usage(format!("--mu must be >= 0, got {mu}"))),
        (None, _) => IntensityChoice::Optimize,
    };
    if a.re.is_empty() {
        return Err(usage("--re needs at least one value"));
    }
    let distances = range(&a.d, "d")?;
    let errors = error_params(a.perr, a.perr_x, a.perr_z);
    let analyzer = Analyzer::new(fiber(a.xi)?, OptimizerConfig::default());
    if !a.out.is_dir() {
        return Err(usage(format!("--out {} is not a directory", a.out.display())));
    }
    let name = match a.protocol {
        Protocol::Bb84 => "bb84",
        Protocol::Cow => "cow",
    };

    for r_e in &a.re {
        let s = analyzer.rate_series(a.protocol, &distances, *r_e, errors, intensity)?;
        let series: [(&str, &RateCurve); 4] = [
            ("enhanced", &s.enhanced),
            ("enhanced_orig_mu", &s.enhanced_original_mu),
            ("original", &s.original),
            ("plob", &s.plob),
        ];
        for (label, curve) in series {
            let (ext, body) = match a.format {
                Format::Csv => ("csv", curve.to_csv()),
                Format::Json => ("json", to_json(curve)?),
            };
            let path = a.out.join(format!("{name}_{label}_rE_{r_e}.{ext}"));
            write_atomic(&path, &body)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
