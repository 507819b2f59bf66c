//! Maximization of key rates over the signal intensity, and the analyses
//! built on it: optimal-intensity curves, boost factors over the original
//! protocols, PLOB crossover distances and error sweeps.
//!
//! Every optimization is a log-spaced grid scan followed by golden-section
//! refinement (in `ln μ`) around the best grid point. The refinement can only
//! improve on the grid: if it ends below the best grid value, the grid point
//! is returned.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{transmittance, FiberSpec};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::info::Probability;
use crate::keyrate::{
    bb84_enhanced_rate, bb84_enhanced_rate_product, evaluate, plob_bound, BB84Params, ErrorParams,
    FormulaId, RateCurve, RatePoint,
};

/// Intensity at which the original protocols are usually operated.
pub const ORIGINAL_BB84_INTENSITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub search_lo: f64,
    pub search_hi: f64,
    /// Log-spaced coarse grid size (at least 200).
    pub grid_points: usize,
    /// Relative bracket width at which golden-section refinement stops.
    pub rel_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            search_lo: 1e-3,
            search_hi: 1e4,
            grid_points: 200,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub optimal_mu: f64,
    pub optimal_rate: f64,
    /// Interval known to contain `optimal_mu`.
    pub bracket: (f64, f64),
    pub evaluations: usize,
    /// The objective was constant on the whole grid; `optimal_mu` is the lower bound.
    pub degenerate: bool,
}

/// Maximizes `objective` over `[search_lo, search_hi]` with the default grid.
pub fn optimize_intensity<F>(
    objective: F,
    search_lo: f64,
    search_hi: f64,
    rel_tol: f64,
) -> Result<OptimizationResult>
where
    F: Fn(f64) -> f64,
{
    optimize_intensity_with(
        objective,
        &OptimizerConfig {
            search_lo,
            search_hi,
            rel_tol,
            ..OptimizerConfig::default()
        },
    )
}

pub fn optimize_intensity_with<F>(objective: F, cfg: &OptimizerConfig) -> Result<OptimizationResult>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = (cfg.search_lo, cfg.search_hi);
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "search bracket [{lo}, {hi}] must satisfy 0 < lo < hi"
        )));
    }
    if !(cfg.rel_tol > 0.0) {
        return Err(Error::InvalidInput("rel_tol must be positive".into()));
    }
    let n = cfg.grid_points.max(200);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let step = (ln_hi - ln_lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (ln_lo + step * i as f64).exp()
            }
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&mu| objective(mu)).collect();
    let mut evaluations = n;

    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        // strict comparison keeps the smallest mu on ties
        if v > values[best] || (values[best].is_nan() && !v.is_nan()) {
            best = i;
        }
    }
    if values.iter().all(|&v| v == values[0]) {
        return Ok(OptimizationResult {
            optimal_mu: lo,
            optimal_rate: values[0],
            bracket: (lo, hi),
            evaluations,
            degenerate: true,
        });
    }

    let bracket = (grid[best.saturating_sub(1)], grid[(best + 1).min(n - 1)]);
    let (mu, val, evals) = golden_section_max(&objective, bracket.0, bracket.1, cfg.rel_tol);
    evaluations += evals;
    let (optimal_mu, optimal_rate) = if val >= values[best] {
        (mu, val)
    } else {
        (grid[best], values[best])
    };
    Ok(OptimizationResult {
        optimal_mu,
        optimal_rate,
        bracket,
        evaluations,
        degenerate: false,
    })
}

/// Golden-section search for a maximum in `ln μ` on `[lo, hi]`.
fn golden_section_max<F>(f: &F, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64, usize)
where
    F: Fn(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp());
    let mut fd = f(d.exp());
    let mut evals = 2;
    // ln-width equals relative width to first order
    while b - a > rel_tol && evals < 500 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp());
        }
        evals += 1;
    }
    let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    (x.exp(), fx, evals)
}

/// Which protocol family a derived analysis refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Bb84,
    Cow,
}

impl Protocol {
    pub fn enhanced(self) -> FormulaId {
        match self {
            Protocol::Bb84 => FormulaId::Bb84Enh,
            Protocol::Cow => FormulaId::CowEnh,
        }
    }

    pub fn original(self) -> FormulaId {
        match self {
            Protocol::Bb84 => FormulaId::Bb84OrigUb,
            Protocol::Cow => FormulaId::CowOrigUb,
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bb84" => Ok(Protocol::Bb84),
            "cow" => Ok(Protocol::Cow),
            _ => Err(Error::InvalidInput(format!("unknown protocol `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntensityPoint {
    pub distance_km: f64,
    pub optimal_mu: f64,
    pub optimal_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Boost {
    /// `enhanced / original`; infinite when the original rate is not positive.
    pub ratio: f64,
    pub enhanced: OptimizationResult,
    pub original: OptimizationResult,
    pub original_non_positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossover {
    pub distance_km: f64,
    /// Final bisection interval.
    pub bracket_km: (f64, f64),
    pub iterations: usize,
    /// Sign of `rate - PLOB` at the near end of the search interval.
    pub above_plob_at_lo: bool,
}

/// Which closed form of the loss-controlled BB84 rate an error sweep uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnhancedForm {
    /// The printed closed form (see [`bb84_enhanced_rate`]).
    #[default]
    Closed,
    /// `p✓ (I(A,B) - I(A,E))` (see [`bb84_enhanced_rate_product`]).
    Product,
}

/// Optimized BB84 rates against symmetric error probability at one distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSweep {
    pub distance_km: f64,
    pub form: EnhancedForm,
    pub p_err: Vec<f64>,
    pub r_e: Vec<f64>,
    /// `enhanced[i][j]`: optimized raw rate at `p_err[i]`, `r_e[j]`.
    pub enhanced: Vec<Vec<f64>>,
    /// Optimized raw original upper bound at each `p_err[i]`.
    pub original: Vec<f64>,
}

impl ErrorSweep {
    /// Enhanced rate over the original bound at the same error level.
    pub fn ratio_to_same_error_original(&self, i: usize, j: usize) -> f64 {
        self.enhanced[i][j] / self.original[i]
    }

    /// Enhanced rate over the error-free original bound.
    pub fn ratio_to_errorless_original(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.p_err.iter().position(|&p| p == 0.0)?;
        Some(self.enhanced[i][j] / self.original[k])
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("p_err");
        for r in &self.r_e {
            h.push_str(&format!(",rate_rE_{r}"));
        }
        h.push_str(",rate_original");
        h
    }

    /// Clamped rates, one row per error probability.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for (i, p) in self.p_err.iter().enumerate() {
            out.push_str(&fmt_f64(*p));
            for v in &self.enhanced[i] {
                out.push(',');
                out.push_str(&fmt_f64(v.max(0.0)));
            }
            out.push(',');
            out.push_str(&fmt_f64(self.original[i].max(0.0)));
            out.push('\n');
        }
        out
    }
}

/// The four series of a rate-vs-distance figure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSeries {
    /// Loss-controlled rate at the optimal (or fixed) intensity.
    pub enhanced: RateCurve,
    /// Loss-controlled rate at the original protocol's intensity.
    pub enhanced_original_mu: RateCurve,
    pub original: RateCurve,
    pub plob: RateCurve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntensityChoice {
    Optimize,
    Fixed(f64),
}

/// Optimization context: the fiber's attenuation law plus optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Analyzer {
    pub fiber: FiberSpec,
    pub optimizer: OptimizerConfig,
}

impl Analyzer {
    pub fn new(fiber: FiberSpec, optimizer: OptimizerConfig) -> Self {
        Analyzer { fiber, optimizer }
    }

    pub fn transmittance(&self, distance_km: f64) -> Result<Probability> {
        transmittance(&self.fiber, distance_km)
    }

    /// Best intensity for `formula` at one distance.
    pub fn optimize(
        &self,
        formula: FormulaId,
        distance_km: f64,
        r_e: Probability,
        errors: ErrorParams,
    ) -> Result<OptimizationResult> {
        let t = self.transmittance(distance_km)?;
        // validate once so the objective can be infallible
        evaluate(formula, t, r_e, errors, self.optimizer.search_lo)?;
        optimize_intensity_with(
            |mu| evaluate(formula, t, r_e, errors, mu).unwrap_or(f64::NEG_INFINITY),
            &self.optimizer,
        )
    }

    pub fn optimal_intensity_curve(
        &self,
        formula: FormulaId,
        distances: &[f64],
        r_e: Probability,
        errors: ErrorParams,
    ) -> Result<Vec<IntensityPoint>> {
        if distances.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("distances must be sorted ascending".into()));
        }
        distances
            .par_iter()
            .map(|&d| {
                self.optimize(formula, d, r_e, errors).map(|r| IntensityPoint {
                    distance_km: d,
                    optimal_mu: r.optimal_mu,
                    optimal_rate: r.optimal_rate,
                })
            })
            .collect()
    }

    pub fn boost_factor(
        &self,
        protocol: Protocol,
        distance_km: f64,
        r_e: Probability,
        errors: ErrorParams,
    ) -> Result<Boost> {
        let enhanced = self.optimize(protocol.enhanced(), distance_km, r_e, errors)?;
        let original = self.optimize(protocol.original(), distance_km, r_e, errors)?;
        let original_non_positive = original.optimal_rate <= 0.0;
        let ratio = if original_non_positive {
            f64::INFINITY
        } else {
            enhanced.optimal_rate.max(0.0) / original.optimal_rate
        };
        Ok(Boost {
            ratio,
            enhanced,
            original,
            original_non_positive,
        })
    }

    /// Optimized rate minus the PLOB bound at a distance.
    pub fn plob_margin(
        &self,
        formula: FormulaId,
        distance_km: f64,
        r_e: Probability,
        errors: ErrorParams,
    ) -> Result<f64> {
        let rate = self.optimize(formula, distance_km, r_e, errors)?.optimal_rate;
        Ok(rate - plob_bound(self.transmittance(distance_km)?)?)
    }

    /// Bisects for the distance where the optimized rate meets the PLOB bound.
    /// `None` when the margin has the same sign at both ends.
    pub fn plob_crossover(
        &self,
        formula: FormulaId,
        r_e: Probability,
        errors: ErrorParams,
        d_lo: f64,
        d_hi: f64,
        tol_km: f64,
    ) -> Result<Option<Crossover>> {
        if !(d_lo < d_hi) {
            return Err(Error::InvalidInput(format!(
                "crossover bracket [{d_lo}, {d_hi}] is empty"
            )));
        }
        let margin = |d: f64| self.plob_margin(formula, d, r_e, errors);
        let (m_lo, m_hi) = (margin(d_lo)?, margin(d_hi)?);
        if (m_lo > 0.0) == (m_hi > 0.0) {
            return Ok(None);
        }
        let above_plob_at_lo = m_lo > 0.0;
        let (mut a, mut b) = (d_lo, d_hi);
        let mut iterations = 0;
        while b - a > tol_km && iterations < 60 {
            let mid = 0.5 * (a + b);
            if (margin(mid)? > 0.0) == above_plob_at_lo {
                a = mid;
            } else {
                b = mid;
            }
            iterations += 1;
        }
        Ok(Some(Crossover {
            distance_km: 0.5 * (a + b),
            bracket_km: (a, b),
            iterations,
            above_plob_at_lo,
        }))
    }

    pub fn error_sweep(
        &self,
        distance_km: f64,
        r_e_list: &[Probability],
        p_err_grid: &[Probability],
        form: EnhancedForm,
    ) -> Result<ErrorSweep> {
        let t = self.transmittance(distance_km)?;
        let enhanced = p_err_grid
            .par_iter()
            .map(|&p| {
                r_e_list
                    .iter()
                    .map(|&r_e| {
                        let params = BB84Params::new(1.0, r_e, p, p)?;
                        let objective = |mu: f64| {
                            let params = params.with_intensity(mu).expect("positive intensity");
                            match form {
                                EnhancedForm::Closed => bb84_enhanced_rate(&params, t),
                                EnhancedForm::Product => bb84_enhanced_rate_product(&params, t),
                            }
                        };
                        Ok(optimize_intensity_with(objective, &self.optimizer)?.optimal_rate)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let original = p_err_grid
            .par_iter()
            .map(|&p| {
                self.optimize(FormulaId::Bb84OrigUb, distance_km, Probability::ZERO, ErrorParams::uniform(p))
                    .map(|r| r.optimal_rate)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ErrorSweep {
            distance_km,
            form,
            p_err: p_err_grid.iter().map(|p| **p).collect(),
            r_e: r_e_list.iter().map(|p| **p).collect(),
            enhanced,
            original,
        })
    }

    /// Loss-controlled rate when the intensity is left at the original
    /// protocol's operating point: `μ = 1` for BB84, the beam-splitting
    /// bound's optimum for COW. Returns `(μ, raw rate)`.
    pub fn enhanced_at_original_intensity(
        &self,
        protocol: Protocol,
        distance_km: f64,
        r_e: Probability,
        errors: ErrorParams,
    ) -> Result<(f64, f64)> {
        let mu = match protocol {
            Protocol::Bb84 => ORIGINAL_BB84_INTENSITY,
            Protocol::Cow => {
                self.optimize(FormulaId::CowOrigUb, distance_km, r_e, errors)?
                    .optimal_mu
            }
        };
        let t = self.transmittance(distance_km)?;
        Ok((mu, evaluate(protocol.enhanced(), t, r_e, errors, mu)?))
    }

    /// The four curves of a rate-vs-distance comparison.
    pub fn rate_series(
        &self,
        protocol: Protocol,
        distances: &[f64],
        r_e: Probability,
        errors: ErrorParams,
        intensity: IntensityChoice,
    ) -> Result<RateSeries> {
        if distances.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("distances must be sorted ascending".into()));
        }
        let rows = distances
            .par_iter()
            .map(|&d| {
                let t = self.transmittance(d)?;
                let enhanced = match intensity {
                    IntensityChoice::Optimize => {
                        let r = self.optimize(protocol.enhanced(), d, r_e, errors)?;
                        RatePoint::new(d, r.optimal_rate, r.optimal_mu, protocol.enhanced())
                    }
                    IntensityChoice::Fixed(mu) => RatePoint::new(
                        d,
                        evaluate(protocol.enhanced(), t, r_e, errors, mu)?,
                        mu,
                        protocol.enhanced(),
                    ),
                };
                let (mu0, dashed) = self.enhanced_at_original_intensity(protocol, d, r_e, errors)?;
                let orig = self.optimize(protocol.original(), d, r_e, errors)?;
                Ok((
                    enhanced,
                    RatePoint::new(d, dashed, mu0, protocol.enhanced()),
                    RatePoint::new(d, orig.optimal_rate, orig.optimal_mu, protocol.original()),
                    RatePoint::new(d, plob_bound(t)?, 0.0, FormulaId::Plob),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut series = RateSeries {
            enhanced: RateCurve::default(),
            enhanced_original_mu: RateCurve::default(),
            original: RateCurve::default(),
            plob: RateCurve::default(),
        };
        for (a, b, c, d) in rows {
            series.enhanced.0.push(a);
            series.enhanced_original_mu.0.push(b);
            series.original.0.push(c);
            series.plob.0.push(d);
        }
        Ok(series)
    }
}

pub fn optimal_intensity_curve(
    formula: FormulaId,
    distances: &[f64],
    r_e: Probability,
    errors: ErrorParams,
) -> Result<Vec<IntensityPoint>> {
    Analyzer::default().optimal_intensity_curve(formula, distances, r_e, errors)
}

pub fn boost_factor(
    protocol: Protocol,
    distance_km: f64,
    r_e: Probability,
    errors: ErrorParams,
) -> Result<Boost> {
    Analyzer::default().boost_factor(protocol, distance_km, r_e, errors)
}

pub fn plob_crossover(
    formula: FormulaId,
    r_e: Probability,
    errors: ErrorParams,
    d_lo: f64,
    d_hi: f64,
) -> Result<Option<Crossover>> {
    Analyzer::default().plob_crossover(formula, r_e, errors, d_lo, d_hi, 1e-3)
}

pub fn error_sweep(
    distance_km: f64,
    r_e_list: &[Probability],
    p_err_grid: &[Probability],
) -> Result<ErrorSweep> {
    Analyzer::default().error_sweep(distance_km, r_e_list, p_err_grid, EnhancedForm::Closed)
}

/// CSV for an optimal-intensity curve.
pub fn intensity_curve_csv(points: &[IntensityPoint]) -> String {
    let mut out = String::from("distance_km,optimal_mu,optimal_rate\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(p.distance_km),
            fmt_f64(p.optimal_mu),
            fmt_f64(p.optimal_rate)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyrate::{bb84_original_upper, cow_original_upper, COWParams};

    fn p(x: f64) -> Probability {
        Probability::new(x).unwrap()
    }

    #[test]
    fn finds_peak_of_x_exp_minus_x() {
        let r = optimize_intensity(|x| x * (-x).exp(), 1e-3, 1e3, 1e-6).unwrap();
        assert!((r.optimal_mu - 1.0).abs() < 1e-3);
        assert!(r.bracket.0 <= r.optimal_mu && r.optimal_mu <= r.bracket.1);
        assert!(!r.degenerate);
        assert!(r.evaluations > 200);
    }

    #[test]
    fn flat_objective_is_degenerate() {
        let r = optimize_intensity(|_| 0.0, 1e-3, 1e3, 1e-6).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.optimal_rate, 0.0);
        assert_eq!(r.optimal_mu, 1e-3);
    }

    #[test]
    fn rejects_bad_brackets() {
        assert!(optimize_intensity(|x| x, 0.0, 1.0, 1e-6).is_err());
        assert!(optimize_intensity(|x| x, 2.0, 1.0, 1e-6).is_err());
        assert!(optimize_intensity(|x| x, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn monotone_objective_hits_the_edge() {
        let r = optimize_intensity(|x| -x, 1e-2, 1e2, 1e-6).unwrap();
        assert!((r.optimal_mu - 1e-2).abs() < 1e-7);
        let r = optimize_intensity(|x| x, 1e-2, 1e2, 1e-6).unwrap();
        assert!((r.optimal_mu - 1e2).abs() < 1e-3);
    }

    #[test]
    fn enhanced_bb84_meets_stationarity() {
        // zero errors: e^{-a mu*} = b / (a + b), a = T(1 - r_E), b = r_E
        let a: f64 = 1e-4 * 0.995;
        let b = 0.005;
        let closed = ((a + b) / b).ln() / a;
        let r = Analyzer::default()
            .optimize(FormulaId::Bb84Enh, 200.0, p(0.005), ErrorParams::NONE)
            .unwrap();
        assert!((r.optimal_mu / closed - 1.0).abs() < 1e-5, "{} vs {closed}", r.optimal_mu);
    }

    #[test]
    fn original_bs_bound_peaks_near_half_photon() {
        let r = Analyzer::default()
            .optimize(FormulaId::CowOrigUb, 200.0, p(0.0), ErrorParams::NONE)
            .unwrap();
        // dense-grid oracle
        let t = p(1e-4);
        let (mut best_mu, mut best) = (0.0, f64::MIN);
        for i in 0..=100_000 {
            let mu = 0.1 + 1.9 * i as f64 / 100_000.0;
            let v = cow_original_upper(&COWParams::new(mu, p(0.0), p(0.0)).unwrap(), t);
            if v > best {
                best = v;
                best_mu = mu;
            }
        }
        assert!((r.optimal_mu - best_mu).abs() < 1e-4);
        assert!((r.optimal_rate / best - 1.0).abs() < 1e-9);
        assert!((0.4..0.5).contains(&r.optimal_mu));
    }

    #[test]
    fn original_bb84_optimum_is_one_photon() {
        let pts = optimal_intensity_curve(
            FormulaId::Bb84OrigUb,
            &[50.0, 120.0, 250.0],
            p(0.01),
            ErrorParams::NONE,
        )
        .unwrap();
        for pt in pts {
            assert!((pt.optimal_mu - 1.0).abs() < 1e-3);
            let t = 10f64.powf(-0.02 * pt.distance_km);
            assert!((pt.optimal_rate - 0.5 * t * (-1.0f64).exp()).abs() < 1e-12 * t);
        }
    }

    #[test]
    fn local_maximum_property() {
        let an = Analyzer::default();
        for formula in [FormulaId::Bb84Enh, FormulaId::CowEnh, FormulaId::CowOrigUb] {
            for r_e in [0.005, 0.1] {
                let t = p(1e-3);
                let r = an.optimize(formula, 150.0, p(r_e), ErrorParams::NONE).unwrap();
                let f = |mu| evaluate(formula, t, p(r_e), ErrorParams::NONE, mu).unwrap();
                let d = 1e-3 * r.optimal_mu;
                assert!(f(r.optimal_mu + d) <= r.optimal_rate);
                assert!(f(r.optimal_mu - d) <= r.optimal_rate);
            }
        }
    }

    #[test]
    fn boost_limits() {
        let b = boost_factor(Protocol::Bb84, 200.0, p(0.999_999), ErrorParams::NONE).unwrap();
        assert!(b.ratio < 1e-3);
        let b = boost_factor(Protocol::Cow, 200.0, p(0.999_999), ErrorParams::NONE).unwrap();
        assert!(b.ratio < 1e-3);
        let b = boost_factor(Protocol::Bb84, 200.0, p(0.01), ErrorParams::uniform(p(0.5)))
            .unwrap();
        assert!(b.original_non_positive && b.ratio.is_infinite());
    }

    #[test]
    fn crossover_bisection() {
        let an = Analyzer::default();
        // r_E = 0.1 sits below PLOB at 50 km and above it at 250 km
        let c = an
            .plob_crossover(FormulaId::Bb84Enh, p(0.1), ErrorParams::NONE, 50.0, 250.0, 0.1)
            .unwrap()
            .unwrap();
        assert!(c.iterations <= 60);
        assert!(c.bracket_km.1 - c.bracket_km.0 <= 0.1);
        assert!(!c.above_plob_at_lo);
        let below = an.plob_margin(FormulaId::Bb84Enh, c.bracket_km.0, p(0.1), ErrorParams::NONE);
        let above = an.plob_margin(FormulaId::Bb84Enh, c.bracket_km.1, p(0.1), ErrorParams::NONE);
        assert!(below.unwrap() <= 0.0 && above.unwrap() > 0.0);
        // r_E = 0.5 never beats PLOB here
        assert!(an
            .plob_crossover(FormulaId::Bb84Enh, p(0.5), ErrorParams::NONE, 50.0, 250.0, 0.1)
            .unwrap()
            .is_none());
        assert!(an
            .plob_crossover(FormulaId::Bb84Enh, p(0.5), ErrorParams::NONE, 250.0, 50.0, 0.1)
            .is_err());
    }

    #[test]
    fn error_sweep_shapes() {
        let sweep = error_sweep(200.0, &[p(0.005), p(0.1)], &[p(0.0), p(0.1), p(0.5)]).unwrap();
        assert_eq!(sweep.enhanced.len(), 3);
        let fig3 = Analyzer::default()
            .optimize(FormulaId::Bb84Enh, 200.0, p(0.005), ErrorParams::NONE)
            .unwrap();
        assert_eq!(sweep.enhanced[0][0], fig3.optimal_rate);
        assert!(sweep.enhanced[2].iter().all(|&v| v <= 0.0));
        assert!(sweep.original[2] <= 0.0);
        assert!(sweep.enhanced[1][0] > 0.0);
        let csv = sweep.to_csv();
        assert!(csv.starts_with("p_err,rate_rE_0.005,rate_rE_0.1,rate_original\n"));
        assert_eq!(csv.lines().count(), 4);
        // original at zero error is the mu = 1 bound
        let t = p(1e-4);
        let direct = bb84_original_upper(&BB84Params::ideal(1.0, p(0.0)).unwrap(), t);
        assert!((sweep.original[0] / direct - 1.0).abs() < 1e-9);
    }

    #[test]
    fn product_form_sweep_reports_both_ratios() {
        let sweep = Analyzer::default()
            .error_sweep(200.0, &[p(0.005)], &[p(0.0), p(0.1)], EnhancedForm::Product)
            .unwrap();
        let same = sweep.ratio_to_same_error_original(1, 0);
        let errorless = sweep.ratio_to_errorless_original(1, 0).unwrap();
        assert!(same > 150.0 && same < 250.0, "{same}");
        assert!(errorless > 30.0 && errorless < 60.0, "{errorless}");
    }

    #[test]
    fn dashed_series_uses_original_intensity() {
        let an = Analyzer::default();
        let (mu, rate) = an
            .enhanced_at_original_intensity(Protocol::Bb84, 200.0, p(0.005), ErrorParams::NONE)
            .unwrap();
        assert_eq!(mu, 1.0);
        let expected = 0.5 * -(-1e-4f64 * 0.995).exp_m1() * (-0.005f64).exp();
        assert!((rate / expected - 1.0).abs() < 1e-9);
        let (mu, _) = an
            .enhanced_at_original_intensity(Protocol::Cow, 200.0, p(0.005), ErrorParams::NONE)
            .unwrap();
        assert!((0.4..0.5).contains(&mu));
    }

    #[test]
    fn rate_series_fixed_intensity_reduction() {
        let s = Analyzer::default()
            .rate_series(
                Protocol::Bb84,
                &[50.0, 100.0, 150.0],
                p(0.0),
                ErrorParams::NONE,
                IntensityChoice::Fixed(1.0),
            )
            .unwrap();
        for pt in s.enhanced.points() {
            let t = 10f64.powf(-0.02 * pt.distance_km);
            assert!((pt.raw_rate - 0.5 * -(-t).exp_m1()).abs() < 1e-15);
        }
        assert_eq!(s.plob.points().len(), 3);
    }

    #[test]
    fn intensity_csv_header() {
        let csv = intensity_curve_csv(&[IntensityPoint {
            distance_km: 1.0,
            optimal_mu: 2.0,
            optimal_rate: 3.0,
        }]);
        assert!(csv.starts_with("distance_km,optimal_mu,optimal_rate\n"));
    }
}
