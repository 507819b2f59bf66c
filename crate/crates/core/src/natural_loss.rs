//! Upper bounds on what an eavesdropper could learn by collecting the light
//! Rayleigh-scattered out of a fiber segment of length `l`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{natural_scatter_fraction, FiberSpec};
use crate::error::{non_negative, Error, Result};
use crate::info::holevo_kernel;

/// Intensity used for the natural-loss curves unless overridden.
pub const DEFAULT_INTENSITY: f64 = 100.0;

/// Bit-encoding family whose scattered components Eve would have to tell apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EncodingKind {
    /// `0 → |γ⟩|γ⟩`, `1 → |γ⟩|−γ⟩`.
    DpsLike,
    /// `0 → |0⟩|γ⟩`, `1 → |γ⟩|0⟩`.
    CowLike,
    /// Phase-randomized pulses; any detected photon reveals the bit.
    PhaseRandomized,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 3] = [
        EncodingKind::DpsLike,
        EncodingKind::CowLike,
        EncodingKind::PhaseRandomized,
    ];
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncodingKind::DpsLike => "DPS_LIKE",
            EncodingKind::CowLike => "COW_LIKE",
            EncodingKind::PhaseRandomized => "PHASE_RANDOMIZED",
        })
    }
}

impl FromStr for EncodingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "DPS_LIKE" | "DPS" => Ok(EncodingKind::DpsLike),
            "COW_LIKE" | "COW" => Ok(EncodingKind::CowLike),
            "PHASE_RANDOMIZED" | "PR" => Ok(EncodingKind::PhaseRandomized),
            _ => Err(Error::InvalidInput(format!("unknown encoding kind `{s}`"))),
        }
    }
}

/// Information bound (bits per pulse) on the light scattered from a segment.
pub fn natural_loss_info_bound(
    kind: EncodingKind,
    fiber: &FiberSpec,
    segment_km: f64,
    intensity: f64,
) -> Result<f64> {
    let mu = non_negative("intensity", intensity)?;
    let r = *natural_scatter_fraction(fiber, segment_km)?;
    Ok(bound_from_scattered(kind, r * mu))
}

/// Bound as a function of the scattered mean photon number `r_l · μ`.
fn bound_from_scattered(kind: EncodingKind, scattered_mu: f64) -> f64 {
    match kind {
        // |⟨γ,γ|γ,−γ⟩| = exp(−|2γ|²/2) on the second mode
        EncodingKind::DpsLike => holevo_kernel((-2.0 * scattered_mu).exp()),
        EncodingKind::CowLike => holevo_kernel((-scattered_mu).exp()),
        EncodingKind::PhaseRandomized => -(-scattered_mu).exp_m1(),
    }
}

/// Evaluates the bound on a strictly increasing grid of segment lengths.
pub fn natural_loss_curve(
    kind: EncodingKind,
    fiber: &FiberSpec,
    l_grid: &[f64],
    intensity: f64,
) -> Result<Vec<(f64, f64)>> {
    if l_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(
            "segment-length grid must be strictly increasing".into(),
        ));
    }
    l_grid
        .par_iter()
        .map(|&l| natural_loss_info_bound(kind, fiber, l, intensity).map(|b| (l, b)))
        .collect()
}

/// Smallest segment length at which the bound reaches `threshold` bits, or
/// `None` when it never does (zero intensity, or `threshold >= 1`).
pub fn length_exceeding(
    kind: EncodingKind,
    fiber: &FiberSpec,
    intensity: f64,
    threshold: f64,
) -> Result<Option<f64>> {
    let mu = non_negative("intensity", intensity)?;
    if !(0.0..1.0).contains(&threshold) {
        return Ok(None);
    }
    let at = |l: f64| natural_loss_info_bound(kind, fiber, l, mu);
    if mu == 0.0 {
        return Ok(None);
    }
    if at(0.0)? > threshold {
        return Ok(Some(0.0));
    }
    let mut hi = 1e-3;
    while at(hi)? <= threshold {
        hi *= 2.0;
        if hi > 1e9 {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? > threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
