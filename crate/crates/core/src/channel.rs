//! Fiber channel model: exponential attenuation plus a list of localized
//! artificial leaks.

use serde::{Deserialize, Serialize};

use crate::error::{domain, non_negative, Error, Result};
use crate::info::Probability;

/// Attenuation constant of standard telecom fiber, per km (base-10 exponent).
pub const DEFAULT_XI_PER_KM: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    attenuation_xi: f64,
    length_km: f64,
}

impl FiberSpec {
    pub fn new(attenuation_xi: f64, length_km: f64) -> Result<Self> {
        if !(attenuation_xi.is_finite() && attenuation_xi > 0.0) {
            return Err(domain("attenuation xi", attenuation_xi, "> 0"));
        }
        let length_km = non_negative("fiber length", length_km)?;
        Ok(FiberSpec {
            attenuation_xi,
            length_km,
        })
    }

    /// Standard fiber (`xi = 0.02 / km`) of the given length.
    pub fn standard(length_km: f64) -> Result<Self> {
        FiberSpec::new(DEFAULT_XI_PER_KM, length_km)
    }

    pub fn attenuation_xi(&self) -> f64 {
        self.attenuation_xi
    }

    pub fn length_km(&self) -> f64 {
        self.length_km
    }

    /// One-way attenuation in dB/km (`10 xi`).
    pub fn attenuation_db_per_km(&self) -> f64 {
        10.0 * self.attenuation_xi
    }
}

impl Default for FiberSpec {
    fn default() -> Self {
        FiberSpec {
            attenuation_xi: DEFAULT_XI_PER_KM,
            length_km: 0.0,
        }
    }
}

/// A localized tap diverting `magnitude` of the passing signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalLeak {
    pub position_km: f64,
    pub magnitude: Probability,
    /// Pre-existing loss (connector, bend) that still counts toward `r_E`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub benign: bool,
}

impl LocalLeak {
    pub fn new(position_km: f64, magnitude: f64) -> Result<Self> {
        let position_km = non_negative("leak position", position_km)?;
        let magnitude = Probability::new(magnitude)?;
        if *magnitude >= 1.0 {
            return Err(domain("leak magnitude", *magnitude, "[0, 1)"));
        }
        Ok(LocalLeak {
            position_km,
            magnitude,
            benign: false,
        })
    }

    pub fn benign(mut self) -> Self {
        self.benign = true;
        self
    }

    pub fn survival(&self) -> f64 {
        1.0 - *self.magnitude
    }
}

/// Fiber plus its sorted, position-unique leak list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelDoc", into = "ChannelDoc")]
pub struct ChannelState {
    fiber: FiberSpec,
    leaks: Vec<LocalLeak>,
}

impl ChannelState {
    /// Sorts the leaks by position and merges coincident ones multiplicatively.
    pub fn new(fiber: FiberSpec, leaks: impl IntoIterator<Item = LocalLeak>) -> Result<Self> {
        let mut leaks: Vec<LocalLeak> = leaks.into_iter().collect();
        for leak in &leaks {
            if leak.position_km > fiber.length_km() {
                return Err(Error::InvalidInput(format!(
                    "leak at {} km lies beyond the {} km fiber",
                    leak.position_km,
                    fiber.length_km()
                )));
            }
            if !(0.0..1.0).contains(&*leak.magnitude) {
                return Err(domain("leak magnitude", *leak.magnitude, "[0, 1)"));
            }
        }
        leaks.sort_by(|a, b| a.position_km.total_cmp(&b.position_km));

        let mut merged: Vec<LocalLeak> = Vec::with_capacity(leaks.len());
        for leak in leaks {
            match merged.last_mut() {
                Some(last) if last.position_km == leak.position_km => {
                    let survival = last.survival() * leak.survival();
                    last.magnitude = Probability::saturating(1.0 - survival);
                    last.benign &= leak.benign;
                }
                _ => merged.push(leak),
            }
        }
        Ok(ChannelState {
            fiber,
            leaks: merged,
        })
    }

    pub fn without_leaks(fiber: FiberSpec) -> Self {
        ChannelState {
            fiber,
            leaks: Vec::new(),
        }
    }

    pub fn fiber(&self) -> &FiberSpec {
        &self.fiber
    }

    pub fn leaks(&self) -> &[LocalLeak] {
        &self.leaks
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelDoc {
    xi_per_km: f64,
    length_km: f64,
    #[serde(default)]
    leaks: Vec<LocalLeak>,
}

impl TryFrom<ChannelDoc> for ChannelState {
    type Error = Error;

    fn try_from(doc: ChannelDoc) -> Result<Self> {
        ChannelState::new(FiberSpec::new(doc.xi_per_km, doc.length_km)?, doc.leaks)
    }
}

impl From<ChannelState> for ChannelDoc {
    fn from(ch: ChannelState) -> Self {
        ChannelDoc {
            xi_per_km: ch.fiber.attenuation_xi,
            length_km: ch.fiber.length_km,
            leaks: ch.leaks,
        }
    }
}

/// `T = 10^{-xi D}`.
pub fn transmittance(fiber: &FiberSpec, distance_km: f64) -> Result<Probability> {
    let d = non_negative("distance", distance_km)?;
    Ok(Probability::saturating(10f64.powf(-fiber.attenuation_xi * d)))
}

/// Fraction of the signal scattered away along a segment, `1 - 10^{-xi l}`.
pub fn natural_scatter_fraction(fiber: &FiberSpec, segment_km: f64) -> Result<Probability> {
    let l = non_negative("segment length", segment_km)?;
    // 1 - 10^{-x} = -expm1(-x ln 10), accurate for short segments
    Ok(Probability::saturating(
        -(-fiber.attenuation_xi * l * std::f64::consts::LN_10).exp_m1(),
    ))
}

/// Aggregate exploitable leak `r_E = 1 - Π(1 - m_i)`.
pub fn total_artificial_leak(channel: &ChannelState) -> Probability {
    let survival: f64 = channel.leaks.iter().map(LocalLeak::survival).product();
    Probability::saturating(1.0 - survival)
}

/// End-to-end transmittance including every leak.
pub fn effective_transmittance(channel: &ChannelState) -> Probability {
    let natural = 10f64.powf(-channel.fiber.attenuation_xi * channel.fiber.length_km);
    let survival: f64 = channel.leaks.iter().map(LocalLeak::survival).product();
    Probability::saturating(natural * survival)
}
