use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::median_in_place;
use super::reflectogram::Reflectogram;
use crate::channel::LocalLeak;
use crate::error::{Error, Result};
use crate::info::Probability;

/// Recovered loss profile: global slope plus lumped leaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tomogram {
    #[serde(rename = "slope_dB_per_km")]
    pub fitted_slope_db_per_km: f64,
    pub leaks: Vec<LocalLeak>,
    #[serde(rename = "residual_rms_dB")]
    pub residual_rms_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Leaks below this magnitude are dropped from the result.
    pub min_leak_magnitude: Probability,
    /// Bins on each side of the windowed derivative.
    pub window: usize,
    /// Detection threshold in units of the derivative's median absolute deviation.
    pub mad_factor: f64,
    /// Absolute threshold floor in dB, so that a noiseless trace is not split on rounding error.
    pub floor_db: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            min_leak_magnitude: Probability::ZERO,
            window: 5,
            mad_factor: 5.0,
            floor_db: 1e-9,
        }
    }
}

pub fn fit_tomogram(r: &Reflectogram, min_leak_magnitude: Probability) -> Result<Tomogram> {
    fit_tomogram_with(
        r,
        &FitConfig {
            min_leak_magnitude,
            ..FitConfig::default()
        },
    )
}

pub fn fit_tomogram_with(r: &Reflectogram, cfg: &FitConfig) -> Result<Tomogram> {
    let w = cfg.window.max(1);
    let n = r.len();
    if n < 3 * w {
        return Err(Error::Degenerate(format!(
            "trace of {n} samples is shorter than three {w}-bin windows"
        )));
    }
    let x = r.positions_km();
    let y = r.power_db();

    let (a0, b0) = repeated_median_line(x, y);
    let resid: Vec<f64> = x.iter().zip(y).map(|(x, y)| y - a0 - b0 * x).collect();
    let mut steps = change_points(&resid, w, cfg.mad_factor, cfg.floor_db);

    // refit jointly, dropping rises and sub-threshold steps until stable;
    // the slack keeps a leak sitting exactly at the threshold
    let min_magnitude = *cfg.min_leak_magnitude * (1.0 - 1e-9);
    loop {
        let fit = joint_fit(x, y, &steps)?;
        let keep: Vec<usize> = steps
            .iter()
            .zip(&fit.heights)
            .filter(|(_, &h)| h < 0.0 && magnitude_from_drop(-h) >= min_magnitude)
            .map(|(&k, _)| k)
            .collect();
        if keep.len() == steps.len() {
            let leaks = steps
                .iter()
                .zip(&fit.heights)
                .map(|(&k, &h)| LocalLeak::new(x[k], magnitude_from_drop(-h)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Tomogram {
                fitted_slope_db_per_km: fit.slope,
                leaks,
                residual_rms_db: fit.rms,
            });
        }
        steps = keep;
    }
}

/// Magnitude of a leak seen as a round-trip drop of `drop_db`.
fn magnitude_from_drop(drop_db: f64) -> f64 {
    // 1 - 10^{-drop/20}
    -(-drop_db * std::f64::consts::LN_10 / 20.0).exp_m1()
}

/// Siegel's repeated-median line `(intercept, slope)`.
fn repeated_median_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    let mut per_point = Vec::with_capacity(n);
    let mut buf = Vec::with_capacity(n);
    for i in 0..n {
        buf.clear();
        buf.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (y[j] - y[i]) / (x[j] - x[i])),
        );
        per_point.push(median_in_place(&mut buf));
    }
    let slope = median_in_place(&mut per_point);
    let mut offsets: Vec<f64> = x.iter().zip(y).map(|(x, y)| y - slope * x).collect();
    (median_in_place(&mut offsets), slope)
}

/// Indices `k` (first sample after the step) where the windowed derivative
/// stands out from its own MAD. Local maxima only, at least `w` bins apart.
fn change_points(resid: &[f64], w: usize, mad_factor: f64, floor: f64) -> Vec<usize> {
    let n = resid.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, r) in resid.iter().enumerate() {
        prefix[i + 1] = prefix[i] + r;
    }
    let mean = |a: usize, b: usize| (prefix[b] - prefix[a]) / (b - a) as f64;
    let ks: Vec<usize> = (w..=n - w).collect();
    let d: Vec<f64> = ks.iter().map(|&k| mean(k, k + w) - mean(k - w, k)).collect();

    let med = median_in_place(&mut d.clone());
    let dev: Vec<f64> = d.iter().map(|v| (v - med).abs()).collect();
    let mad = median_in_place(&mut dev.clone());
    let threshold = (mad_factor * mad).max(floor);

    let mut peaks: Vec<usize> = (0..dev.len())
        .filter(|&i| {
            dev[i] > threshold
                && (i == 0 || dev[i] >= dev[i - 1])
                && (i + 1 == dev.len() || dev[i] >= dev[i + 1])
        })
        .collect();
    peaks.sort_by(|&a, &b| dev[b].total_cmp(&dev[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::new();
    for p in peaks {
        if chosen.iter().all(|&c| c.abs_diff(p) >= w) {
            chosen.push(p);
        }
    }
    let mut out: Vec<usize> = chosen.into_iter().map(|i| ks[i]).collect();
    out.sort_unstable();
    out
}

struct JointFit {
    slope: f64,
    heights: Vec<f64>,
    rms: f64,
}

/// Least squares on `[1, x, H(i >= k_1), ..., H(i >= k_m)]`.
fn joint_fit(x: &[f64], y: &[f64], steps: &[usize]) -> Result<JointFit> {
    let n = x.len();
    let p = 2 + steps.len();
    let a = DMatrix::from_fn(n, p, |i, j| match j {
        0 => 1.0,
        1 => x[i],
        _ => f64::from(u8::from(i >= steps[j - 2])),
    });
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::Degenerate(
            "step design matrix is rank deficient".into(),
        ));
    }
    let coef = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let resid = &b - &a * &coef;
    let rms = (resid.norm_squared() / n as f64).sqrt();
    if !coef.iter().all(|c| c.is_finite()) {
        return Err(Error::Degenerate("non-finite least-squares solution".into()));
    }
    Ok(JointFit {
        slope: coef[1],
        heights: coef.iter().skip(2).copied().collect(),
        rms,
    })
}
