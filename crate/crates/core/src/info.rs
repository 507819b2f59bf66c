//! Quantum-information primitives shared by every rate formula: binary
//! entropy, coherent-state overlaps, Poisson photon statistics and the
//! Holevo quantity of two equiprobable pure states.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, non_negative, Result};

/// A real number constrained to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(domain("probability", value, "[0, 1]"))
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Probability(0.0)
        } else {
            Probability(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Probability {
        Probability(1.0 - self.0)
    }
}

impl Deref for Probability {
    type Target = f64;

    fn deref(&self) -> &f64 {
        &self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = crate::Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Complex amplitude `γ` of a coherent state `|γ⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoherentAmplitude {
    pub re: f64,
    pub im: f64,
}

impl CoherentAmplitude {
    pub const VACUUM: CoherentAmplitude = CoherentAmplitude { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        CoherentAmplitude { re, im }
    }

    /// Real amplitude with mean photon number `mu`.
    pub fn from_intensity(mu: f64) -> Result<Self> {
        Ok(CoherentAmplitude {
            re: non_negative("intensity", mu)?.sqrt(),
            im: 0.0,
        })
    }

    /// Mean photon number `|γ|²`.
    pub fn intensity(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, t: f64) -> Self {
        CoherentAmplitude {
            re: self.re * t,
            im: self.im * t,
        }
    }

    fn distance_sq(self, other: CoherentAmplitude) -> f64 {
        let dr = self.re - other.re;
        let di = self.im - other.im;
        dr * dr + di * di
    }
}

impl std::ops::Neg for CoherentAmplitude {
    type Output = CoherentAmplitude;

    fn neg(self) -> Self {
        CoherentAmplitude {
            re: -self.re,
            im: -self.im,
        }
    }
}

/// Binary Shannon entropy in bits, with `0·log 0 = 0`.
pub fn binary_entropy(p: Probability) -> f64 {
    h2(p.0)
}

/// Unchecked binary entropy; arguments are clamped to `[0, 1]`.
pub(crate) fn h2(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    let y = 1.0 - 2.0 * x;
    if y.abs() <= 0.5 {
        // h2((1 - y)/2) = 1 - Σ_k y^{2k} / (2k(2k-1) ln 2); monotone in |y| term by term
        let u = y * y;
        let mut term = u;
        let mut sum = 0.0;
        let mut k = 1.0;
        while term > 1e-18 * sum || sum == 0.0 {
            sum += term / (2.0 * k * (2.0 * k - 1.0));
            term *= u;
            k += 1.0;
            if term == 0.0 {
                break;
            }
        }
        return 1.0 - sum / std::f64::consts::LN_2;
    }
    let nats = -x * x.ln() - (1.0 - x) * (-x).ln_1p();
    (nats / std::f64::consts::LN_2).clamp(0.0, 1.0)
}

/// `|⟨a|b⟩| = exp(-|a - b|² / 2)`.
pub fn coherent_overlap_mag(a: CoherentAmplitude, b: CoherentAmplitude) -> f64 {
    (-0.5 * a.distance_sq(b)).exp()
}

/// Holevo quantity of two equiprobable pure states whose overlap has magnitude `s`.
pub fn holevo_two_pure(overlap_mag: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap_mag) {
        return Err(domain("overlap magnitude", overlap_mag, "[0, 1]"));
    }
    Ok(holevo_kernel(overlap_mag))
}

pub(crate) fn holevo_kernel(overlap_mag: f64) -> f64 {
    h2(0.5 * (1.0 - overlap_mag))
}

/// Poisson probability of `n` photons at mean `mu`, evaluated in log space so
/// that test-pulse intensities (~1e11 photons) do not overflow.
pub fn poisson_pmf(mu: f64, n: u64) -> Result<Probability> {
    let mu = non_negative("mean photon number", mu)?;
    if mu == 0.0 {
        return Ok(if n == 0 {
            Probability::ONE
        } else {
            Probability::ZERO
        });
    }
    if n == 0 {
        return Ok(Probability::saturating((-mu).exp()));
    }
    // k ln(μ/k) + k - μ - [ln k! - (k ln k - k)], which avoids cancelling
    // two terms of size k ln μ when both μ and k are large
    let k = n as f64;
    let ln_p = k * ((mu - k) / k).ln_1p() - (mu - k) - stirling_remainder(k);
    Ok(Probability::saturating(ln_p.exp()))
}

/// `ln k! - (k ln k - k)` for `k >= 1`.
fn stirling_remainder(k: f64) -> f64 {
    if k < 20.0 {
        return ln_gamma(k + 1.0) - (k * k.ln() - k);
    }
    let inv = 1.0 / k;
    let inv2 = inv * inv;
    0.5 * (2.0 * std::f64::consts::PI * k).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Probability of at least one photon, `1 - e^{-mu}`.
pub fn nonvacuum_prob(mu: f64) -> Result<Probability> {
    let mu = non_negative("mean photon number", mu)?;
    Ok(Probability::saturating(-(-mu).exp_m1()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> Probability {
        Probability::new(x).unwrap()
    }

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(Probability::new(-1e-12).is_err());
        assert!(Probability::new(1.0 + 1e-12).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert!(serde_json::from_str::<Probability>("1.5").is_err());
        assert_eq!(serde_json::from_str::<Probability>("0.25").unwrap(), p(0.25));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(p(0.5)), 1.0);
        assert_eq!(binary_entropy(p(0.0)), 0.0);
        assert_eq!(binary_entropy(p(1.0)), 0.0);
        // mpmath, 40 digits
        assert!((binary_entropy(p(0.25)) - 0.811_278_124_459_132_9).abs() < 1e-15);
    }

    #[test]
    fn overlap_examples() {
        let g = CoherentAmplitude::new(0.3, -1.7);
        assert_eq!(coherent_overlap_mag(g, g), 1.0);
        let one = CoherentAmplitude::from_intensity(1.0).unwrap();
        let vac = CoherentAmplitude::VACUUM;
        assert!((coherent_overlap_mag(vac, one) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((coherent_overlap_mag(one, -one) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn holevo_examples() {
        assert_eq!(holevo_two_pure(1.0).unwrap(), 0.0);
        assert_eq!(holevo_two_pure(0.0).unwrap(), 1.0);
        let v = holevo_two_pure((-1.0f64).exp()).unwrap();
        assert!((v - 0.900_045_591_523_535_1).abs() < 1e-14);
        assert!(holevo_two_pure(1.5).is_err());
        assert!(holevo_two_pure(-0.1).is_err());
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson_pmf(0.0, 0).unwrap(), Probability::ONE);
        assert_eq!(poisson_pmf(0.0, 1).unwrap(), Probability::ZERO);
        assert!((*poisson_pmf(1.0, 1).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(poisson_pmf(-1.0, 0).is_err());
        // test-pulse scale does not overflow
        let peak = *poisson_pmf(1e11, 100_000_000_000).unwrap();
        let approx = 1.0 / (2.0 * std::f64::consts::PI * 1e11).sqrt();
        assert!((peak / approx - 1.0).abs() < 1e-4);
    }

    #[test]
    fn nonvacuum_examples() {
        assert_eq!(nonvacuum_prob(0.0).unwrap(), Probability::ZERO);
        assert!((*nonvacuum_prob(0.01).unwrap() - 0.009_950_166_250_831_946).abs() < 1e-17);
        let mut prev = 0.0;
        for mu in [0.1, 1.0, 10.0, 100.0, 1000.0] {
            let v = *nonvacuum_prob(mu).unwrap();
            assert!(v >= prev && v <= 1.0);
            prev = v;
        }
        assert_eq!(prev, 1.0);
        assert!(nonvacuum_prob(-0.5).is_err());
    }

    #[test]
    fn poisson_partial_sums_normalize() {
        for mu in [0.0, 0.3, 1.0, 7.5, 50.0, 200.0, 1000.0] {
            let n_max = (mu + 10.0 * f64::sqrt(mu) + 10.0).ceil() as u64;
            let total: f64 = (0..=n_max).map(|n| *poisson_pmf(mu, n).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-9, "mu = {mu}: {total}");
        }
    }

    #[test]
    fn series_branch_matches_logs() {
        for x in [0.25, 0.2500001, 0.3, 0.4, 0.49, 0.5 - 1e-9, 0.6, 0.75] {
            let direct = (-x * f64::ln(x) - (1.0 - x) * f64::ln(1.0 - x)) / std::f64::consts::LN_2;
            assert!((h2(x) - direct).abs() < 1e-15, "{x}");
        }
        // saturation approaches 1 from below without wobbling
        let mut prev = 0.0;
        for k in 0..60 {
            let v = h2(0.5 * (1.0 - (-(k as f64)).exp()));
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn entropy_concave_on_grid() {
        let n = 1000;
        for i in 1..n {
            let a = (i - 1) as f64 / n as f64;
            let b = (i + 1) as f64 / n as f64;
            let mid = h2(0.5 * (a + b));
            assert!(mid + 1e-15 >= 0.5 * (h2(a) + h2(b)));
            assert!(h2(i as f64 / n as f64) <= 1.0);
        }
    }
}
