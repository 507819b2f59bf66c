//! Closed-form secret-key rates, normalized per emitted pulse (`L_f / L`).
//!
//! Raw rates may be negative (no key). They are kept as-is for ordering
//! checks; clamping to zero happens only when a [`RatePoint`] is built for
//! reporting. With errors present, a negative raw enhanced rate can rise
//! with `r_E` (the negative bracket is damped by `e^{-r_E μ}`), so
//! monotonicity in `r_E` is a property of the clamped rate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, non_negative, Error, Result};
use crate::format::fmt_f64;
use crate::info::{h2, Probability};

/// Phase-randomized BB84 with loss control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BB84Params {
    intensity_mu: f64,
    r_e: Probability,
    p_err_x: Probability,
    p_err_z: Probability,
}

impl BB84Params {
    pub fn new(
        intensity_mu: f64,
        r_e: Probability,
        p_err_x: Probability,
        p_err_z: Probability,
    ) -> Result<Self> {
        Ok(BB84Params {
            intensity_mu: non_negative("intensity", intensity_mu)?,
            r_e,
            p_err_x,
            p_err_z,
        })
    }

    /// Error-free parameters.
    pub fn ideal(intensity_mu: f64, r_e: Probability) -> Result<Self> {
        BB84Params::new(intensity_mu, r_e, Probability::ZERO, Probability::ZERO)
    }

    pub fn with_intensity(self, intensity_mu: f64) -> Result<Self> {
        BB84Params::new(intensity_mu, self.r_e, self.p_err_x, self.p_err_z)
    }

    pub fn intensity_mu(&self) -> f64 {
        self.intensity_mu
    }

    pub fn r_e(&self) -> Probability {
        self.r_e
    }

    pub fn p_err_x(&self) -> Probability {
        self.p_err_x
    }

    pub fn p_err_z(&self) -> Probability {
        self.p_err_z
    }

    fn error_entropy(&self) -> f64 {
        0.5 * (h2(*self.p_err_x) + h2(*self.p_err_z))
    }
}

/// Coherent One-Way with loss control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct COWParams {
    intensity_mu: f64,
    r_e: Probability,
    p_err: Probability,
}

impl COWParams {
    pub fn new(intensity_mu: f64, r_e: Probability, p_err: Probability) -> Result<Self> {
        Ok(COWParams {
            intensity_mu: non_negative("intensity", intensity_mu)?,
            r_e,
            p_err,
        })
    }

    pub fn with_intensity(self, intensity_mu: f64) -> Result<Self> {
        COWParams::new(intensity_mu, self.r_e, self.p_err)
    }

    pub fn intensity_mu(&self) -> f64 {
        self.intensity_mu
    }

    pub fn r_e(&self) -> Probability {
        self.r_e
    }

    pub fn p_err(&self) -> Probability {
        self.p_err
    }
}

/// Observed (or modeled) quantities entering the decoy-state rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyObservables {
    gain_q: Probability,
    gain_q1: Probability,
    e1: Probability,
    p_err: Probability,
    ec_efficiency_f: f64,
}

impl DecoyObservables {
    pub fn new(
        gain_q: Probability,
        gain_q1: Probability,
        e1: Probability,
        p_err: Probability,
        ec_efficiency_f: f64,
    ) -> Result<Self> {
        if gain_q1 > gain_q {
            return Err(Error::InvalidInput(format!(
                "single-photon gain {gain_q1} exceeds total gain {gain_q}"
            )));
        }
        if !(ec_efficiency_f >= 1.0) {
            return Err(domain("error-correction efficiency", ec_efficiency_f, ">= 1"));
        }
        Ok(DecoyObservables {
            gain_q,
            gain_q1,
            e1,
            p_err,
            ec_efficiency_f,
        })
    }

    /// Eve-free channel: `Q = 1 - e^{-Tμ}`, `Q1 = Tμe^{-μ}`, `e1 = 0`, Shannon-limit correction.
    pub fn ideal(t: Probability, intensity_mu: f64, p_err: Probability) -> Result<Self> {
        let mu = non_negative("intensity", intensity_mu)?;
        let q = Probability::saturating(-(-*t * mu).exp_m1());
        let q1 = Probability::saturating((*t * mu * (-mu).exp()).min(*q));
        DecoyObservables::new(q, q1, Probability::ZERO, p_err, 1.0)
    }
}

/// `I(A,E) = 1 - e^{-r_E μ}`: any tapped photon reveals the bit.
pub fn bb84_eve_info(p: &BB84Params) -> f64 {
    -(-*p.r_e * p.intensity_mu).exp_m1()
}

/// Sifted conclusive probability `½(1 - e^{-T(1-r_E)μ})`.
pub fn bb84_conclusive_prob(p: &BB84Params, t: Probability) -> Probability {
    Probability::saturating(0.5 * bob_click(*t * (1.0 - *p.r_e) * p.intensity_mu))
}

/// Loss-controlled BB84 rate in its printed closed form,
/// `½(1 - ½h₂(p_x) - ½h₂(p_z) - e^{-T(1-r_E)μ}) e^{-r_E μ}`.
pub fn bb84_enhanced_rate(p: &BB84Params, t: Probability) -> f64 {
    let mu = p.intensity_mu;
    let arrive = (-*t * (1.0 - *p.r_e) * mu).exp();
    if p.p_err_x == Probability::ZERO && p.p_err_z == Probability::ZERO {
        // same value, without cancellation in 1 - e^{-x} for tiny x
        return 0.5 * bob_click(*t * (1.0 - *p.r_e) * mu) * (-*p.r_e * mu).exp();
    }
    0.5 * (1.0 - p.error_entropy() - arrive) * (-*p.r_e * mu).exp()
}

/// Loss-controlled BB84 rate as the product `p✓ (I(A,B) - I(A,E))`.
///
/// Identical to [`bb84_enhanced_rate`] when both error rates are zero.
pub fn bb84_enhanced_rate_product(p: &BB84Params, t: Probability) -> f64 {
    *bb84_conclusive_prob(p, t) * (1.0 - p.error_entropy() - bb84_eve_info(p))
}

/// Upper bound for standard decoy-state BB84 (`r_E` is ignored):
/// `½[Tμe^{-μ} - (1 - e^{-Tμ}) ½(h₂(p_x) + h₂(p_z))]`.
pub fn bb84_original_upper(p: &BB84Params, t: Probability) -> f64 {
    let mu = p.intensity_mu;
    0.5 * (*t * mu * (-mu).exp() - bob_click(*t * mu) * p.error_entropy())
}

/// `½[Q1(1 - h₂(e1)) - Q f h₂(p_err)]`.
pub fn decoy_rate(obs: &DecoyObservables) -> f64 {
    0.5 * (*obs.gain_q1 * (1.0 - h2(*obs.e1))
        - *obs.gain_q * obs.ec_efficiency_f * h2(*obs.p_err))
}

/// Holevo bound on the pair `|√k γ⟩|0⟩, |0⟩|√k γ⟩` given the tapped mean photon number `k|γ|²`.
fn tapped_pair_holevo(tapped_mu: f64) -> f64 {
    h2(0.5 * bob_click(tapped_mu))
}

/// `χ = h₂((1 - e^{-r_E μ}) / 2)`.
pub fn cow_eve_info(p: &COWParams) -> f64 {
    tapped_pair_holevo(*p.r_e * p.intensity_mu)
}

/// `p✓ = 1 - e^{-T(1-r_E)μ}`; no sifting factor.
pub fn cow_conclusive_prob(p: &COWParams, t: Probability) -> Probability {
    Probability::saturating(bob_click(*t * (1.0 - *p.r_e) * p.intensity_mu))
}

/// `p✓ (1 - h₂(p_err) - χ)`.
pub fn cow_enhanced_rate(p: &COWParams, t: Probability) -> f64 {
    *cow_conclusive_prob(p, t) * (1.0 - h2(*p.p_err) - cow_eve_info(p))
}

/// Eve's Holevo bound under the beam-splitting attack, which collects the
/// whole `1 - T` fraction of the signal.
pub fn cow_bs_eve_info(intensity_mu: f64, t: Probability) -> Result<f64> {
    let mu = non_negative("intensity", intensity_mu)?;
    Ok(tapped_pair_holevo((1.0 - *t) * mu))
}

/// Beam-splitting-attack upper bound for the original COW (`r_E` is ignored).
pub fn cow_original_upper(p: &COWParams, t: Probability) -> f64 {
    let mu = p.intensity_mu;
    bob_click(*t * mu) * (1.0 - h2(*p.p_err) - tapped_pair_holevo((1.0 - *t) * mu))
}

/// Repeaterless secret-key capacity `-log₂(1 - T)`.
pub fn plob_bound(t: Probability) -> Result<f64> {
    if *t >= 1.0 {
        return Err(domain("transmittance", *t, "[0, 1)"));
    }
    Ok(-(-*t).ln_1p() / std::f64::consts::LN_2)
}

fn bob_click(mean: f64) -> f64 {
    -(-mean).exp_m1()
}

/// Identifies which rate formula produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormulaId {
    #[serde(rename = "BB84_ENH")]
    Bb84Enh,
    #[serde(rename = "BB84_ORIG_UB")]
    Bb84OrigUb,
    #[serde(rename = "DECOY")]
    Decoy,
    #[serde(rename = "COW_ENH")]
    CowEnh,
    #[serde(rename = "COW_ORIG_UB")]
    CowOrigUb,
    #[serde(rename = "PLOB")]
    Plob,
}

impl FormulaId {
    pub fn as_str(self) -> &'static str {
        match self {
            FormulaId::Bb84Enh => "BB84_ENH",
            FormulaId::Bb84OrigUb => "BB84_ORIG_UB",
            FormulaId::Decoy => "DECOY",
            FormulaId::CowEnh => "COW_ENH",
            FormulaId::CowOrigUb => "COW_ORIG_UB",
            FormulaId::Plob => "PLOB",
        }
    }

    /// Whether the formula depends on the signal intensity at all.
    pub fn depends_on_intensity(self) -> bool {
        self != FormulaId::Plob
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            FormulaId::Bb84Enh,
            FormulaId::Bb84OrigUb,
            FormulaId::Decoy,
            FormulaId::CowEnh,
            FormulaId::CowOrigUb,
            FormulaId::Plob,
        ]
        .into_iter()
        .find(|id| id.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::InvalidInput(format!("unknown formula id `{s}`")))
    }
}

/// Error probabilities of the sifted key. COW, which has a single error
/// rate, uses the mean of the two entries.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorParams {
    pub p_err_x: Probability,
    pub p_err_z: Probability,
}

impl ErrorParams {
    pub const NONE: ErrorParams = ErrorParams {
        p_err_x: Probability::ZERO,
        p_err_z: Probability::ZERO,
    };

    pub fn uniform(p: Probability) -> Self {
        ErrorParams {
            p_err_x: p,
            p_err_z: p,
        }
    }

    pub fn single(&self) -> Probability {
        Probability::saturating(0.5 * (*self.p_err_x + *self.p_err_z))
    }
}

/// Evaluates `formula` at intensity `mu` on a line of transmittance `t`.
pub fn evaluate(
    formula: FormulaId,
    t: Probability,
    r_e: Probability,
    errors: ErrorParams,
    mu: f64,
) -> Result<f64> {
    Ok(match formula {
        FormulaId::Bb84Enh => {
            bb84_enhanced_rate(&BB84Params::new(mu, r_e, errors.p_err_x, errors.p_err_z)?, t)
        }
        FormulaId::Bb84OrigUb => {
            bb84_original_upper(&BB84Params::new(mu, r_e, errors.p_err_x, errors.p_err_z)?, t)
        }
        FormulaId::Decoy => decoy_rate(&DecoyObservables::ideal(t, mu, errors.single())?),
        FormulaId::CowEnh => cow_enhanced_rate(&COWParams::new(mu, r_e, errors.single())?, t),
        FormulaId::CowOrigUb => {
            cow_original_upper(&COWParams::new(mu, r_e, errors.single())?, t)
        }
        FormulaId::Plob => plob_bound(t)?,
    })
}

/// One sample of a rate-vs-distance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub distance_km: f64,
    pub raw_rate: f64,
    pub clamped_rate: f64,
    pub intensity_mu: f64,
    pub formula_id: FormulaId,
}

impl RatePoint {
    pub fn new(distance_km: f64, raw_rate: f64, intensity_mu: f64, formula_id: FormulaId) -> Self {
        RatePoint {
            distance_km,
            raw_rate,
            clamped_rate: raw_rate.max(0.0),
            intensity_mu,
            formula_id,
        }
    }
}

/// Ordered rate samples with CSV and JSON encodings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateCurve(pub Vec<RatePoint>);

impl RateCurve {
    pub const CSV_HEADER: &'static str = "distance_km,raw_rate,clamped_rate,intensity_mu,formula_id";

    pub fn points(&self) -> &[RatePoint] {
        &self.0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.0 {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(p.distance_km),
                fmt_f64(p.raw_rate),
                fmt_f64(p.clamped_rate),
                fmt_f64(p.intensity_mu),
                p.formula_id
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(Self::CSV_HEADER) {
            return Err(Error::InvalidInput("missing rate-curve CSV header".into()));
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::InvalidInput(format!(
                    "row {}: expected 5 fields, found {}",
                    i + 2,
                    fields.len()
                )));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("row {}: bad number `{s}`", i + 2)))
            };
            points.push(RatePoint {
                distance_km: num(fields[0])?,
                raw_rate: num(fields[1])?,
                clamped_rate: num(fields[2])?,
                intensity_mu: num(fields[3])?,
                formula_id: fields[4].parse()?,
            });
        }
        Ok(RateCurve(points))
    }
}
