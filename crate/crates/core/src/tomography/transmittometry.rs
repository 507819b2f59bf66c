use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{non_negative, Error, Result};
use crate::info::Probability;

/// Octaves of 1/f noise synthesized below the modulation frequency.
const OCTAVES: i32 = 10;

/// Test-pulse parameters carried along for reporting; they do not enter the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestPulse {
    pub photons: f64,
    pub duration_s: f64,
    pub wavelength_nm: f64,
}

impl Default for TestPulse {
    fn default() -> Self {
        TestPulse {
            photons: 1e11,
            duration_s: 1e-6,
            wavelength_nm: 1530.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmittometryConfig {
    pub mod_freq_hz: f64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Amplitude of the lowest 1/f octave, relative to a unit tone.
    pub one_over_f_amp: f64,
    /// Standard deviation of the white noise per sample.
    pub white_noise_amp: f64,
    pub seed: u64,
    #[serde(default)]
    pub test_pulse: TestPulse,
}

impl Default for TransmittometryConfig {
    fn default() -> Self {
        TransmittometryConfig {
            mod_freq_hz: 1e6,
            sample_rate_hz: 8e6,
            duration_s: 1e-3,
            one_over_f_amp: 0.0,
            white_noise_amp: 0.0,
            seed: 0,
            test_pulse: TestPulse::default(),
        }
    }
}

impl TransmittometryConfig {
    /// Returns `(samples, tone_bin)` or explains why the window is unusable.
    pub fn validate(&self) -> Result<(usize, usize)> {
        let fs = self.sample_rate_hz;
        let f = self.mod_freq_hz;
        if !(fs.is_finite() && fs > 0.0 && f.is_finite() && f > 0.0 && self.duration_s > 0.0) {
            return Err(Error::InvalidInput(
                "frequencies and duration must be positive".into(),
            ));
        }
        non_negative("1/f amplitude", self.one_over_f_amp)?;
        non_negative("white noise amplitude", self.white_noise_amp)?;
        if f >= 0.5 * fs {
            return Err(Error::InvalidInput(format!(
                "modulation {f} Hz is not below the Nyquist frequency {} Hz",
                0.5 * fs
            )));
        }
        let n_real = self.duration_s * fs;
        let n = n_real.round();
        if (n_real - n).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "window of {n_real} samples is not a whole number"
            )));
        }
        let cycles = f * n / fs;
        if (cycles - cycles.round()).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "{cycles} modulation cycles in the window; the tone must sit on a DFT bin"
            )));
        }
        if cycles.round() < 100.0 {
            return Err(Error::InvalidInput(format!(
                "only {cycles} modulation cycles in the window, need at least 100"
            )));
        }
        Ok((n as usize, cycles.round() as usize))
    }
}

fn check_transmittances(effective: Probability, natural: Probability) -> Result<()> {
    if *effective > 0.0 && effective <= natural && *natural > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "need 0 < effective T ({effective}) <= natural T ({natural}) <= 1"
        )))
    }
}

/// Launched and received waveforms; each channel gets its own noise.
fn synthesize(cfg: &TransmittometryConfig, effective: f64) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let (n, bin) = cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let white = Normal::new(0.0, cfg.white_noise_amp).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let fs = cfg.sample_rate_hz;
    let tone: Vec<f64> = (0..n)
        .map(|i| (TAU * (bin * i % n) as f64 / n as f64).sin())
        .collect();

    let mut channel = |gain: f64| -> Vec<f64> {
        // amplitude ∝ 1/√f, largest in the lowest octave
        let octaves: Vec<(f64, f64, f64)> = (1..=OCTAVES)
            .map(|k| {
                let freq = cfg.mod_freq_hz / 2f64.powi(k);
                let amp = cfg.one_over_f_amp * 2f64.powf(-0.5 * f64::from(OCTAVES - k));
                (freq, amp, rng.random::<f64>() * TAU)
            })
            .collect();
        (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let drift: f64 = octaves
                    .iter()
                    .map(|(f, a, ph)| a * (TAU * f * t + ph).sin())
                    .sum();
                gain * tone[i] + drift + white.sample(&mut rng)
            })
            .collect()
    };
    let input = channel(1.0);
    let output = channel(effective);
    Ok((input, output, bin))
}

/// Magnitude of the Hann-windowed DFT at `bin`.
fn bin_magnitude(x: &[f64], bin: usize) -> f64 {
    let n = x.len();
    let (mut re, mut im) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let w = 0.5 * (1.0 - (TAU * i as f64 / n as f64).cos());
        let phase = TAU * (bin * i % n) as f64 / n as f64;
        re += w * v * phase.cos();
        im -= w * v * phase.sin();
    }
    re.hypot(im)
}

fn leak_from_ratio(ratio: f64, natural: Probability) -> Probability {
    Probability::saturating(1.0 - ratio / *natural)
}

/// Total leak `r̂_E = 1 - T̂/T_nat`, with `T̂` the ratio of output to input
/// spectral magnitude at the modulation frequency.
pub fn transmittometry_estimate(
    cfg: &TransmittometryConfig,
    true_effective_t: Probability,
    natural_t: Probability,
) -> Result<Probability> {
    check_transmittances(true_effective_t, natural_t)?;
    let (input, output, bin) = synthesize(cfg, *true_effective_t)?;
    let ratio = bin_magnitude(&output, bin) / bin_magnitude(&input, bin);
    Ok(leak_from_ratio(ratio, natural_t))
}

/// Same waveforms as [`transmittometry_estimate`], but `T̂` is the ratio of
/// time-domain RMS values after removing the mean.
pub fn naive_rms_estimate(
    cfg: &TransmittometryConfig,
    true_effective_t: Probability,
    natural_t: Probability,
) -> Result<Probability> {
    check_transmittances(true_effective_t, natural_t)?;
    let (input, output, _) = synthesize(cfg, *true_effective_t)?;
    let rms = |x: &[f64]| {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
    };
    Ok(leak_from_ratio(rms(&output) / rms(&input), natural_t))
}
