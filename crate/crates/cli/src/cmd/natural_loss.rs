use std::path::PathBuf;

use qkdlc_core::format::fmt_f64;
use qkdlc_core::natural_loss::{
    length_exceeding, natural_loss_curve, EncodingKind, DEFAULT_INTENSITY,
};

use super::{fiber, range};
use crate::output::{emit, usage, Failure};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Signal intensity (mean photon number)
    #[arg(long, default_value_t = DEFAULT_INTENSITY)]
    mu: f64,
    /// Segment-length grid lo:hi:step in km
    #[arg(long, default_value = "0:1:0.01")]
    l: String,
    /// Also report the shortest segment whose bound exceeds this many bits
    #[arg(long)]
    threshold: Option<f64>,
    /// Fiber attenuation exponent ξ
    #[arg(long, default_value_t = 0.02)]
    xi: f64,
    /// Output CSV (stdout if omitted; the threshold report then goes to stderr)
    #[arg(long)]
    out: Option<PathBuf>,
}

const KINDS: [EncodingKind; 3] = [
    EncodingKind::DpsLike,
    EncodingKind::CowLike,
    EncodingKind::PhaseRandomized,
];

pub fn run(a: Args) -> Result<(), Failure> {
    let grid = range(&a.l, "l")?;
    let f = fiber(a.xi)?;
    let curves = KINDS
        .iter()
        .map(|&k| natural_loss_curve(k, &f, &grid, a.mu))
        .collect::<Result<Vec<_>, _>>()?;

    let mut csv = String::from("l_km,dps_bound,cow_bound,pr_bound\n");
    for (i, l) in grid.iter().enumerate() {
        csv.push_str(&fmt_f64(*l));
        for c in &curves {
            csv.push(',');
            csv.push_str(&fmt_f64(c[i].1));
        }
        csv.push('\n');
    }
    emit(a.out.as_deref(), &csv)?;

    if let Some(th) = a.threshold {
        if !th.is_finite() {
            return Err(usage("--threshold must be finite"));
        }
        let mut report = String::new();
        for k in KINDS {
            let l = length_exceeding(k, &f, a.mu, th)?;
            report.push_str(&match l {
                Some(l) => format!("{k}: bound exceeds {th} bit beyond l = {} km\n", fmt_f64(l)),
                None => format!("{k}: bound never exceeds {th} bit\n"),
            });
        }
        if a.out.is_some() {
            print!("{report}");
        } else {
            eprint!("{report}");
        }
    }
    Ok(())
}
