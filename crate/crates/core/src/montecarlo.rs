//! Pulse-level sampling of the local-leak attack.
//!
//! For a coherent pulse split by a beamsplitter the photon numbers in the two
//! output ports are independent Poisson variables, so Eve's tap and Bob's
//! detector are drawn independently with means `r_E μ` and `T (1 - r_E) μ`.
//! Each pulse owns a ChaCha stream selected by its index, which makes the
//! tallies identical for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::channel::{transmittance, FiberSpec};
use crate::error::{non_negative, Error, Result};
use crate::info::{poisson_pmf, Probability};
use crate::optimize::Protocol;

/// Pass/fail threshold on `|z|` for every comparison.
pub const Z_LIMIT: f64 = 4.0;

/// Tap photon numbers at or above this land in the last histogram bin.
pub const TAP_HISTOGRAM_BINS: usize = 64;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub protocol: Protocol,
    pub intensity_mu: f64,
    pub distance_km: f64,
    pub r_e: Probability,
    pub n_pulses: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        non_negative("intensity", self.intensity_mu)?;
        non_negative("distance", self.distance_km)?;
        if self.n_pulses == 0 {
            return Err(Error::InvalidInput("n_pulses must be at least 1".into()));
        }
        Ok(())
    }

    pub fn transmittance(&self) -> Result<Probability> {
        transmittance(&FiberSpec::default(), self.distance_km)
    }

    fn tap_mean(&self) -> f64 {
        *self.r_e * self.intensity_mu
    }

    fn bob_mean(&self) -> Result<f64> {
        Ok(*self.transmittance()? * (1.0 - *self.r_e) * self.intensity_mu)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOutcome {
    /// Pulses with at least one photon at Bob's detector.
    pub conclusive_count: u64,
    /// BB84 only: conclusive pulses whose basis guess matched.
    pub sifted_count: Option<u64>,
    /// Pulses whose tapped mode carried at least one photon.
    pub eve_tap_count: u64,
    pub n_pulses: u64,
    pub seed: u64,
    /// `tap_histogram[k]` counts pulses with `k` tapped photons; the last bin is open-ended.
    pub tap_histogram: Vec<u64>,
}

#[derive(Default)]
struct Tally {
    conclusive: u64,
    sifted: u64,
    tap: u64,
    histogram: Vec<u64>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.conclusive += other.conclusive;
        self.sifted += other.sifted;
        self.tap += other.tap;
        if self.histogram.is_empty() {
            return Tally {
                histogram: other.histogram,
                ..self
            };
        }
        for (a, b) in self.histogram.iter_mut().zip(other.histogram) {
            *a += b;
        }
        self
    }
}

fn draw(dist: &Option<Poisson<f64>>, rng: &mut ChaCha8Rng) -> u64 {
    dist.as_ref().map_or(0, |d| d.sample(rng) as u64)
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean == 0.0 {
        return Ok(None);
    }
    Poisson::new(mean)
        .map(Some)
        .map_err(|e| Error::InvalidInput(format!("Poisson mean {mean}: {e}")))
}

/// Runs the pulse-by-pulse simulation.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutcome> {
    cfg.validate()?;
    let tap = poisson(cfg.tap_mean())?;
    let bob = poisson(cfg.bob_mean()?)?;
    let is_bb84 = cfg.protocol == Protocol::Bb84;
    let key = ChaCha8Rng::seed_from_u64(cfg.seed).get_seed();

    let chunks = cfg.n_pulses.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally {
                histogram: vec![0; TAP_HISTOGRAM_BINS],
                ..Tally::default()
            };
            let end = ((c + 1) * CHUNK).min(cfg.n_pulses);
            for pulse in c * CHUNK..end {
                let mut rng = ChaCha8Rng::from_seed(key);
                rng.set_stream(pulse);
                let tapped = draw(&tap, &mut rng);
                let detected = draw(&bob, &mut rng);
                let basis_match = rng.random::<bool>();
                t.histogram[(tapped as usize).min(TAP_HISTOGRAM_BINS - 1)] += 1;
                if tapped > 0 {
                    t.tap += 1;
                }
                if detected > 0 {
                    t.conclusive += 1;
                    if basis_match {
                        t.sifted += 1;
                    }
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    Ok(SimOutcome {
        conclusive_count: tally.conclusive,
        sifted_count: is_bb84.then_some(tally.sifted),
        eve_tap_count: tally.tap,
        n_pulses: cfg.n_pulses,
        seed: cfg.seed,
        tap_histogram: tally.histogram,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub empirical: f64,
    pub analytic: f64,
    pub z: f64,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.z.abs() <= Z_LIMIT
    }
}

/// Binomial z-score of `k` successes in `n` trials against probability `p`.
fn binomial_z(k: u64, n: u64, p: f64) -> f64 {
    let freq = k as f64 / n as f64;
    if p <= 0.0 || p >= 1.0 {
        return if freq == p { 0.0 } else { f64::INFINITY };
    }
    (freq - p) / (p * (1.0 - p) / n as f64).sqrt()
}

fn binomial(name: &str, k: u64, n: u64, p: f64) -> Comparison {
    Comparison {
        name: name.to_string(),
        empirical: k as f64 / n as f64,
        analytic: p,
        z: binomial_z(k, n, p),
    }
}

/// Compares the tallies with the closed-form click probabilities.
pub fn compare_to_analytic(outcome: &SimOutcome, cfg: &SimConfig) -> Result<Vec<Comparison>> {
    cfg.validate()?;
    let n = cfg.n_pulses;
    let consistent = outcome.n_pulses == n
        && outcome.seed == cfg.seed
        && outcome.conclusive_count <= n
        && outcome.eve_tap_count <= n
        && outcome.sifted_count.is_some() == (cfg.protocol == Protocol::Bb84)
        && outcome.sifted_count.is_none_or(|s| s <= outcome.conclusive_count);
    if !consistent {
        return Err(Error::InvalidInput(
            "simulation outcome does not belong to this configuration".into(),
        ));
    }

    let click = -(-cfg.bob_mean()?).exp_m1();
    let tap = -(-cfg.tap_mean()).exp_m1();
    let mut out = vec![binomial("conclusive", outcome.conclusive_count, n, click)];
    if let Some(sifted) = outcome.sifted_count {
        out.push(binomial("sifted", sifted, n, 0.5 * click));
        let c = outcome.conclusive_count;
        let z = if c == 0 {
            0.0
        } else {
            (sifted as f64 - 0.5 * c as f64) / (0.25 * c as f64).sqrt()
        };
        out.push(Comparison {
            name: "sifting_balance".into(),
            empirical: if c == 0 { 0.5 } else { sifted as f64 / c as f64 },
            analytic: 0.5,
            z,
        });
    }
    out.push(binomial("eve_tap", outcome.eve_tap_count, n, tap));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of the tapped photon-number histogram against Poisson(`r_E μ`).
/// Bins are merged until every expected count is at least 5. `None` when the
/// tap is empty or fewer than two bins survive merging.
pub fn tap_chi_square(outcome: &SimOutcome, cfg: &SimConfig) -> Result<Option<ChiSquareTest>> {
    let mean = cfg.tap_mean();
    if mean == 0.0 {
        return Ok(None);
    }
    let n = outcome.n_pulses as f64;
    let last = outcome.tap_histogram.len() - 1;
    let mut expected: Vec<f64> = (0..last)
        .map(|k| poisson_pmf(mean, k as u64).map(|p| *p * n))
        .collect::<Result<_>>()?;
    expected.push((n - expected.iter().sum::<f64>()).max(0.0));

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs_acc, mut exp_acc) = (0.0, 0.0);
    for (o, e) in outcome.tap_histogram.iter().zip(&expected) {
        obs_acc += *o as f64;
        exp_acc += e;
        if exp_acc >= 5.0 {
            bins.push((obs_acc, exp_acc));
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    if exp_acc > 0.0 || obs_acc > 0.0 {
        match bins.last_mut() {
            Some(b) => {
                b.0 += obs_acc;
                b.1 += exp_acc;
            }
            None => bins.push((obs_acc, exp_acc)),
        }
    }
    if bins.len() < 2 {
        return Ok(None);
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::InvalidInput(format!("chi-square with {dof} dof: {e}")))?;
    Ok(Some(ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    }))
}
