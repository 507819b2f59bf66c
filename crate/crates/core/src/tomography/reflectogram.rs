use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::ChannelState;
use crate::error::{non_negative, Error, Result};
use crate::format::fmt_f64;

pub const REFLECTOGRAM_CSV_HEADER: &str = "position_km,power_dB";

/// Backscatter power (dB relative to launch) sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflectogram {
    positions_km: Vec<f64>,
    power_db: Vec<f64>,
    resolution_km: f64,
    n_averages: u32,
}

impl Reflectogram {
    /// Checks that the grid is uniform with spacing `resolution_km` and the powers are finite.
    pub fn new(
        positions_km: Vec<f64>,
        power_db: Vec<f64>,
        resolution_km: f64,
        n_averages: u32,
    ) -> Result<Self> {
        if positions_km.len() != power_db.len() || positions_km.is_empty() {
            return Err(Error::InvalidInput(
                "reflectogram needs matching, non-empty position and power columns".into(),
            ));
        }
        if !(resolution_km.is_finite() && resolution_km > 0.0) {
            return Err(Error::InvalidInput(format!(
                "resolution must be positive, got {resolution_km}"
            )));
        }
        if n_averages == 0 {
            return Err(Error::InvalidInput("n_averages must be at least 1".into()));
        }
        let tol = 1e-6 * resolution_km;
        for w in positions_km.windows(2) {
            if !((w[1] - w[0]) - resolution_km).abs().le(&tol) {
                return Err(Error::InvalidInput(format!(
                    "grid is not uniform with spacing {resolution_km} km near {} km",
                    w[0]
                )));
            }
        }
        if let Some(bad) = power_db.iter().chain(&positions_km).find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample {bad}")));
        }
        Ok(Reflectogram {
            positions_km,
            power_db,
            resolution_km,
            n_averages,
        })
    }

    pub fn positions_km(&self) -> &[f64] {
        &self.positions_km
    }

    pub fn power_db(&self) -> &[f64] {
        &self.power_db
    }

    pub fn resolution_km(&self) -> f64 {
        self.resolution_km
    }

    pub fn n_averages(&self) -> u32 {
        self.n_averages
    }

    pub fn len(&self) -> usize {
        self.positions_km.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_km.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * (self.len() + 1));
        out.push_str(REFLECTOGRAM_CSV_HEADER);
        out.push('\n');
        for (z, p) in self.positions_km.iter().zip(&self.power_db) {
            out.push_str(&fmt_f64(*z));
            out.push(',');
            out.push_str(&fmt_f64(*p));
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form. The resolution is taken from the first spacing;
    /// the averaging count is not stored in the file and is set to 1.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == REFLECTOGRAM_CSV_HEADER => {}
            other => {
                return Err(Error::InvalidInput(format!(
                    "expected header `{REFLECTOGRAM_CSV_HEADER}`, found {other:?}"
                )))
            }
        }
        let mut positions = Vec::new();
        let mut power = Vec::new();
        for (i, line) in lines.enumerate() {
            let bad = || Error::InvalidInput(format!("malformed reflectogram row {}: `{line}`", i + 2));
            let (z, p) = line.split_once(',').ok_or_else(bad)?;
            positions.push(z.trim().parse::<f64>().map_err(|_| bad())?);
            power.push(p.trim().parse::<f64>().map_err(|_| bad())?);
        }
        if positions.len() < 2 {
            return Err(Error::InvalidInput(
                "reflectogram needs at least two samples".into(),
            ));
        }
        let resolution = positions[1] - positions[0];
        Reflectogram::new(positions, power, resolution, 1)
    }
}

/// One-way loss in dB of a leak of magnitude `m`, `-10 log10(1 - m)`.
pub fn step_db(magnitude: f64) -> f64 {
    -10.0 * (-magnitude).ln_1p() / std::f64::consts::LN_10
}

/// Synthesizes the trace `-2·10ξ·z - Σ_{z_i <= z} 2Δ_i + η(z)` on the grid
/// `0, res, 2·res, ...` up to the fiber length, with Gaussian `η` of standard
/// deviation `noise_sigma_db / √n_averages`.
pub fn synth_reflectogram(
    channel: &ChannelState,
    resolution_km: f64,
    noise_sigma_db: f64,
    n_averages: u32,
    seed: u64,
) -> Result<Reflectogram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    synth_with_rng(channel, resolution_km, noise_sigma_db, n_averages, &mut rng)
}

pub(crate) fn synth_with_rng(
    channel: &ChannelState,
    resolution_km: f64,
    noise_sigma_db: f64,
    n_averages: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Reflectogram> {
    let length = channel.fiber().length_km();
    if !(resolution_km.is_finite() && resolution_km > 0.0) {
        return Err(Error::InvalidInput(format!(
            "resolution must be positive, got {resolution_km}"
        )));
    }
    if resolution_km > length {
        return Err(Error::InvalidInput(format!(
            "resolution {resolution_km} km exceeds the {length} km fiber"
        )));
    }
    non_negative("noise sigma", noise_sigma_db)?;
    if n_averages == 0 {
        return Err(Error::InvalidInput("n_averages must be at least 1".into()));
    }

    let sigma = noise_sigma_db / f64::from(n_averages).sqrt();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let slope = -2.0 * channel.fiber().attenuation_db_per_km();
    let steps: Vec<(f64, f64)> = channel
        .leaks()
        .iter()
        .map(|l| (l.position_km, 2.0 * step_db(*l.magnitude)))
        .collect();

    let n = (length / resolution_km + 1e-9).floor() as usize + 1;
    let positions: Vec<f64> = (0..n).map(|k| resolution_km * k as f64).collect();
    let power = positions
        .iter()
        .map(|&z| {
            let drop: f64 = steps.iter().filter(|(zi, _)| *zi <= z).map(|(_, d)| d).sum();
            let eta = if sigma > 0.0 { noise.sample(rng) } else { 0.0 };
            slope * z - drop + eta
        })
        .collect();
    Reflectogram::new(positions, power, resolution_km, n_averages)
}
