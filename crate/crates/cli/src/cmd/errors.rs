use std::path::PathBuf;

use clap::ValueEnum;
use qkdlc_core::optimize::{Analyzer, EnhancedForm, OptimizerConfig};
use qkdlc_core::Probability;

use super::{fiber, parse_probability, range};
use crate::output::{emit, usage, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Form {
    /// Printed closed form
    Closed,
    /// Sifted probability times (I(A,B) - I(A,E))
    Product,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Distance in km
    #[arg(long, default_value_t = 200.0)]
    d: f64,
    /// Comma-separated leak fractions r_E
    #[arg(long, value_delimiter = ',', value_parser = parse_probability, default_value = "0.005,0.01,0.1")]
    re: Vec<Probability>,
    /// Error-probability grid lo:hi:step
    #[arg(long, default_value = "0:0.11:0.01")]
    perr: String,
    #[arg(long, value_enum, default_value = "closed")]
    form: Form,
    /// Fiber attenuation exponent ξ in T = 10^(-ξD)
    #[arg(long, default_value_t = 0.02)]
    xi: f64,
    /// Output CSV (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(a: Args) -> Result<(), Failure> {
    let grid = range(&a.perr, "perr")?
        .into_iter()
        .map(|p| Probability::new(p).map_err(|e| usage(format!("--perr: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let form = match a.form {
        Form::Closed => EnhancedForm::Closed,
        Form::Product => EnhancedForm::Product,
    };
    let sweep = Analyzer::new(fiber(a.xi)?, OptimizerConfig::default())
        .error_sweep(a.d, &a.re, &grid, form)?;
    emit(a.out.as_deref(), &sweep.to_csv())
}
