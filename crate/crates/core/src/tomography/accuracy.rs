use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::fit::fit_tomogram;
use super::reflectogram::synth_with_rng;
use crate::channel::{ChannelState, FiberSpec, LocalLeak};
use crate::error::{non_negative, Error, Result};
use crate::info::Probability;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyConfig {
    /// Length of the test fiber in resolution bins; the leak sits near the middle.
    pub bins: usize,
    /// Seeded synth/fit trials per probed magnitude.
    pub trials: u32,
    pub min_leak_magnitude: Probability,
    /// A trial succeeds if some recovered leak lies within this many bins...
    pub position_tol_bins: f64,
    /// ...and its magnitude within this relative error.
    pub magnitude_rel_tol: f64,
    /// Bisection stops once `hi / lo - 1` drops below this.
    pub rel_precision: f64,
    pub max_magnitude: f64,
    pub seed: u64,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        AccuracyConfig {
            bins: 400,
            trials: 200,
            min_leak_magnitude: Probability::new(1e-4).expect("constant"),
            position_tol_bins: 2.0,
            magnitude_rel_tol: 0.2,
            rel_precision: 0.01,
            max_magnitude: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyReport {
    /// Smallest probed magnitude recovered at the requested confidence.
    pub magnitude: f64,
    /// Final bisection bracket; the lower end failed the confidence target.
    pub magnitude_bracket: (f64, f64),
    pub success_rate: f64,
    /// 95% Wilson interval of `success_rate`.
    pub success_rate_ci: (f64, f64),
    pub trials: u32,
    pub probes: u32,
}

pub fn detection_accuracy(
    noise_sigma_db: f64,
    n_averages: u32,
    resolution_km: f64,
    confidence: Probability,
) -> Result<Probability> {
    let report = detection_accuracy_with(
        noise_sigma_db,
        n_averages,
        resolution_km,
        confidence,
        &AccuracyConfig::default(),
    )?;
    Probability::new(report.magnitude)
}

/// Bisects over leak magnitude for the smallest one whose recovery rate
/// reaches `confidence`. Every probe reuses the same trial seeds.
pub fn detection_accuracy_with(
    noise_sigma_db: f64,
    n_averages: u32,
    resolution_km: f64,
    confidence: Probability,
    cfg: &AccuracyConfig,
) -> Result<AccuracyReport> {
    non_negative("noise sigma", noise_sigma_db)?;
    if !(resolution_km.is_finite() && resolution_km > 0.0) {
        return Err(Error::InvalidInput(format!(
            "resolution must be positive, got {resolution_km}"
        )));
    }
    if n_averages == 0 || cfg.trials == 0 || cfg.bins < 20 {
        return Err(Error::InvalidInput(
            "need n_averages >= 1, trials >= 1 and at least 20 bins".into(),
        ));
    }
    let probe = Probe {
        noise_sigma_db,
        n_averages,
        resolution_km,
        cfg,
    };
    let target = *confidence;
    let mut probes = 1;

    let lo0 = (*cfg.min_leak_magnitude).max(1e-12);
    let rate = probe.success_rate(lo0)?;
    if rate >= target {
        return Ok(probe.report(lo0, (lo0, lo0), rate, probes));
    }

    let (mut lo, mut hi) = (lo0, lo0.max(1e-3));
    let mut hi_rate;
    loop {
        hi_rate = probe.success_rate(hi)?;
        probes += 1;
        if hi_rate >= target {
            break;
        }
        if hi >= cfg.max_magnitude {
            return Err(Error::Degenerate(format!(
                "no leak up to {} reaches {target} recovery",
                cfg.max_magnitude
            )));
        }
        lo = hi;
        hi = (2.0 * hi).min(cfg.max_magnitude);
    }
    while hi / lo - 1.0 > cfg.rel_precision {
        let mid = (lo * hi).sqrt();
        let r = probe.success_rate(mid)?;
        probes += 1;
        if r >= target {
            hi = mid;
            hi_rate = r;
        } else {
            lo = mid;
        }
    }
    Ok(probe.report(hi, (lo, hi), hi_rate, probes))
}

struct Probe<'a> {
    noise_sigma_db: f64,
    n_averages: u32,
    resolution_km: f64,
    cfg: &'a AccuracyConfig,
}

impl Probe<'_> {
    fn success_rate(&self, magnitude: f64) -> Result<f64> {
        let res = self.resolution_km;
        let length = res * self.cfg.bins as f64;
        // off-grid so that the position error is not trivially zero
        let position = res * (self.cfg.bins as f64 / 2.0 + 0.37);
        let channel = ChannelState::new(
            FiberSpec::standard(length)?,
            [LocalLeak::new(position, magnitude)?],
        )?;
        let tol_km = self.cfg.position_tol_bins * res + 1e-9 * length;
        let hits = (0..u64::from(self.cfg.trials))
            .into_par_iter()
            .map(|trial| -> Result<u32> {
                let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
                rng.set_stream(trial);
                let r = synth_with_rng(
                    &channel,
                    res,
                    self.noise_sigma_db,
                    self.n_averages,
                    &mut rng,
                )?;
                let t = fit_tomogram(&r, self.cfg.min_leak_magnitude)?;
                Ok(t.leaks.iter().any(|l| {
                    (l.position_km - position).abs() <= tol_km
                        && (*l.magnitude / magnitude - 1.0).abs() <= self.cfg.magnitude_rel_tol
                }) as u32)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        Ok(f64::from(hits) / f64::from(self.cfg.trials))
    }

    fn report(&self, magnitude: f64, bracket: (f64, f64), rate: f64, probes: u32) -> AccuracyReport {
        AccuracyReport {
            magnitude,
            magnitude_bracket: bracket,
            success_rate: rate,
            success_rate_ci: wilson(rate, self.cfg.trials),
            trials: self.cfg.trials,
            probes,
        }
    }
}

/// 95% Wilson score interval.
fn wilson(rate: f64, n: u32) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = f64::from(n);
    let z2n = z * z / n;
    let centre = (rate + 0.5 * z2n) / (1.0 + z2n);
    let half = z * (rate * (1.0 - rate) / n + 0.25 * z2n / n).sqrt() / (1.0 + z2n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
