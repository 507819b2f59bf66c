use std::path::PathBuf;

use qkdlc_core::channel::{total_artificial_leak, ChannelState, LocalLeak};
use qkdlc_core::tomography::{
    detection_accuracy_with, fit_tomogram, synth_reflectogram, AccuracyConfig, AccuracyReport,
    Reflectogram, Tomogram,
};
use qkdlc_core::Probability;
use serde::Serialize;

use super::parse_probability;
use crate::output::{read_input, to_json, usage, write_atomic, Failure};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Channel JSON: {"xi_per_km", "length_km", "leaks": [{"position_km", "magnitude"}]}
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Fit this reflectogram CSV instead of synthesizing one
    #[arg(long)]
    reflectogram: Option<PathBuf>,
    /// Sampling step of the synthesized trace in km
    #[arg(long, default_value_t = 0.1)]
    resolution: f64,
    /// Per-trace Gaussian noise in dB
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Number of traces averaged
    #[arg(long, default_value_t = 1)]
    averages: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Recovered leaks below this magnitude are discarded
    #[arg(long, value_parser = parse_probability, default_value = "0.001")]
    min_leak: Probability,
    /// Also estimate the smallest reliably detected leak magnitude
    #[arg(long)]
    accuracy: bool,
    /// Required recovery rate for --accuracy
    #[arg(long, value_parser = parse_probability, default_value = "0.95")]
    confidence: Probability,
    /// Trials per probed magnitude for --accuracy
    #[arg(long, default_value_t = 200)]
    trials: u32,
    /// Write the tomogram JSON here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the synthesized reflectogram CSV here
    #[arg(long)]
    reflectogram_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Match {
    injected: LocalLeak,
    recovered: Option<LocalLeak>,
    position_error_km: Option<f64>,
    magnitude_rel_error: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    tomogram: Tomogram,
    recovered_r_e: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    injected_r_e: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    matches: Vec<Match>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<AccuracyReport>,
}

pub fn run(a: Args) -> Result<(), Failure> {
    let channel = match &a.channel {
        Some(p) => Some(
            serde_json::from_str::<ChannelState>(&read_input(p)?)
                .map_err(|e| usage(format!("--channel {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let trace = match (&a.reflectogram, &channel) {
        (Some(p), _) => Reflectogram::from_csv(&read_input(p)?)?,
        (None, Some(ch)) => synth_reflectogram(ch, a.resolution, a.noise, a.averages, a.seed)?,
        (None, None) => return Err(usage("give --channel or --reflectogram")),
    };
    if let Some(p) = &a.reflectogram_out {
        write_atomic(p, &trace.to_csv())?;
    }

    let tomogram = fit_tomogram(&trace, a.min_leak)?;
    if let Some(p) = &a.out {
        write_atomic(p, &to_json(&tomogram)?)?;
    }

    let recovered_r_e = 1.0 - tomogram.leaks.iter().map(LocalLeak::survival).product::<f64>();
    let matches = channel
        .as_ref()
        .map(|ch| match_leaks(ch.leaks(), &tomogram.leaks))
        .unwrap_or_default();
    let accuracy = if a.accuracy {
        let cfg = AccuracyConfig {
            trials: a.trials,
            min_leak_magnitude: a.min_leak,
            seed: a.seed,
            ..AccuracyConfig::default()
        };
        Some(detection_accuracy_with(
            a.noise,
            a.averages,
            trace.resolution_km(),
            a.confidence,
            &cfg,
        )?)
    } else {
        None
    };
    let report = Report {
        tomogram,
        recovered_r_e,
        injected_r_e: channel.as_ref().map(|c| *total_artificial_leak(c)),
        matches,
        accuracy,
    };
    print!("{}", to_json(&report)?);
    Ok(())
}

/// Pairs each injected leak with the nearest recovered one.
fn match_leaks(injected: &[LocalLeak], recovered: &[LocalLeak]) -> Vec<Match> {
    injected
        .iter()
        .map(|inj| {
            let near = recovered.iter().min_by(|a, b| {
                (a.position_km - inj.position_km)
                    .abs()
                    .total_cmp(&(b.position_km - inj.position_km).abs())
            });
            Match {
                injected: *inj,
                recovered: near.copied(),
                position_error_km: near.map(|r| r.position_km - inj.position_km),
                magnitude_rel_error: near
                    .filter(|_| *inj.magnitude > 0.0)
                    .map(|r| *r.magnitude / *inj.magnitude - 1.0),
            }
        })
        .collect()
}
