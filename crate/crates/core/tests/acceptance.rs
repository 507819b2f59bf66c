//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qkdlc_core::channel::{
    effective_transmittance, total_artificial_leak, transmittance, ChannelState, FiberSpec,
    LocalLeak,
};
use qkdlc_core::info::{binary_entropy, coherent_overlap_mag, poisson_pmf};
use qkdlc_core::keyrate::{
    bb84_enhanced_rate, cow_bs_eve_info, cow_eve_info, plob_bound, BB84Params, COWParams,
    ErrorParams, FormulaId,
};
use qkdlc_core::montecarlo::{compare_to_analytic, simulate, SimConfig};
use qkdlc_core::natural_loss::{natural_loss_info_bound, EncodingKind};
use qkdlc_core::optimize::{Analyzer, Protocol};
use qkdlc_core::tomography::{
    fit_tomogram, naive_rms_estimate, synth_reflectogram, transmittometry_estimate,
    TransmittometryConfig,
};
use qkdlc_core::{CoherentAmplitude, Probability};

type Check = Result<String, String>;

fn p(x: f64) -> Probability {
    Probability::new(x).expect("probability literal")
}

fn ok_if(cond: bool, detail: String) -> Check {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn t_at(d: f64) -> Probability {
    transmittance(&FiberSpec::default(), d).unwrap()
}

fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Maximum of `f` over 10^5 log-spaced intensities in [1e-3, 1e4].
fn dense_grid_max(f: impl Fn(f64) -> f64) -> f64 {
    let n = 100_000;
    (0..n)
        .map(|i| 10f64.powf(-3.0 + 7.0 * i as f64 / (n - 1) as f64))
        .map(f)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn ac1() -> Check {
    let v = plob_bound(p(1e-4)).map_err(|e| e.to_string())?;
    ok_if(
        (v - 1.44277e-4).abs() <= 1e-9,
        format!("plob_bound(1e-4) = {v:.9e}, expected 1.44277e-4 ± 1e-9"),
    )
}

fn ac2() -> Check {
    let a = Analyzer::default();
    let mut parts = Vec::new();
    let mut good = true;
    for d in [50.0, 100.0, 200.0] {
        let r = a
            .optimize(FormulaId::Bb84OrigUb, d, Probability::ZERO, ErrorParams::NONE)
            .map_err(|e| e.to_string())?;
        good &= (r.optimal_mu - 1.0).abs() <= 1e-3;
        parts.push(format!("{d} km: μ* = {:.6}", r.optimal_mu));
    }
    ok_if(good, format!("{} (tol 1e-3)", parts.join(", ")))
}

fn boost_check(protocol: Protocol) -> Check {
    let r_e = 0.005;
    let b = Analyzer::default()
        .boost_factor(protocol, 200.0, p(r_e), ErrorParams::NONE)
        .map_err(|e| e.to_string())?;
    let t = *t_at(200.0);
    let oracle = match protocol {
        Protocol::Bb84 => {
            dense_grid_max(|mu| 0.5 * (1.0 - (-t * (1.0 - r_e) * mu).exp()) * (-r_e * mu).exp())
                / dense_grid_max(|mu| 0.5 * t * mu * (-mu).exp())
        }
        Protocol::Cow => {
            let click = |m: f64| 1.0 - (-m).exp();
            dense_grid_max(|mu| {
                click(t * (1.0 - r_e) * mu) * (1.0 - h2(0.5 * click(r_e * mu)))
            }) / dense_grid_max(|mu| click(t * mu) * (1.0 - h2(0.5 * click((1.0 - t) * mu))))
        }
    };
    let rel = (b.ratio / oracle - 1.0).abs();
    ok_if(
        b.ratio >= 100.0 && rel <= 0.01,
        format!(
            "boost = {:.3} (>= 100), dense-grid oracle {:.3}, rel diff {:.2e} (tol 1e-2)",
            b.ratio, oracle, rel
        ),
    )
}

fn ac5() -> Check {
    let a = Analyzer::default();
    let mut parts = Vec::new();
    let mut good = true;
    for protocol in [Protocol::Bb84, Protocol::Cow] {
        let (mu, dashed) = a
            .enhanced_at_original_intensity(protocol, 200.0, p(0.005), ErrorParams::NONE)
            .map_err(|e| e.to_string())?;
        let base = a
            .optimize(protocol.original(), 200.0, p(0.005), ErrorParams::NONE)
            .map_err(|e| e.to_string())?
            .optimal_rate;
        let ratio = dashed / base;
        good &= ratio > 2.0;
        parts.push(format!("{protocol:?} at μ = {mu:.4}: {ratio:.3}×"));
    }
    ok_if(good, format!("{} (need > 2)", parts.join(", ")))
}

fn ac6() -> Check {
    let a = Analyzer::default();
    let distances: Vec<f64> = (50..=250).map(f64::from).collect();
    let mut parts = Vec::new();
    let mut good = true;
    for (protocol, lo, hi) in [(Protocol::Bb84, 2.0, 250.0), (Protocol::Cow, 1.0, 150.0)] {
        let (mut min, mut max) = (f64::INFINITY, 0.0f64);
        for r_e in [0.005, 0.01, 0.10] {
            let curve = a
                .optimal_intensity_curve(protocol.enhanced(), &distances, p(r_e), ErrorParams::NONE)
                .map_err(|e| e.to_string())?;
            for pt in curve {
                min = min.min(pt.optimal_mu);
                max = max.max(pt.optimal_mu);
            }
        }
        good &= min >= lo && max <= hi;
        parts.push(format!("{protocol:?} μ* ∈ [{min:.2}, {max:.2}] ⊂ [{lo}, {hi}]"));
    }
    ok_if(good, parts.join(", "))
}

fn ac7() -> Check {
    let a = Analyzer::default();
    let mut parts = Vec::new();
    let mut good = true;
    for protocol in [Protocol::Bb84, Protocol::Cow] {
        for r_e in [0.005, 0.01] {
            let m = a
                .plob_margin(protocol.enhanced(), 200.0, p(r_e), ErrorParams::NONE)
                .map_err(|e| e.to_string())?;
            good &= m > 0.0;
            parts.push(format!("{protocol:?} r_E={r_e} @200 km margin {m:.3e}"));
        }
        for r_e in [0.005, 0.01, 0.05, 0.09] {
            let mut best = f64::NEG_INFINITY;
            for d in (50..=250).step_by(10) {
                let m = a
                    .plob_margin(protocol.enhanced(), f64::from(d), p(r_e), ErrorParams::NONE)
                    .map_err(|e| e.to_string())?;
                best = best.max(m);
            }
            good &= best > 0.0;
            parts.push(format!("{protocol:?} r_E={r_e} best margin {best:.3e}"));
        }
    }
    ok_if(good, parts.join("; "))
}

fn ac8() -> Check {
    let configs: [(Protocol, f64, f64, f64); 12] = [
        (Protocol::Bb84, 0.5, 50.0, 0.0),
        (Protocol::Cow, 0.5, 200.0, 0.005),
        (Protocol::Bb84, 0.5, 200.0, 0.1),
        (Protocol::Cow, 1.0, 50.0, 0.0),
        (Protocol::Bb84, 1.0, 200.0, 0.005),
        (Protocol::Cow, 1.0, 50.0, 0.1),
        (Protocol::Bb84, 50.0, 50.0, 0.005),
        (Protocol::Cow, 50.0, 200.0, 0.0),
        (Protocol::Bb84, 50.0, 200.0, 0.1),
        (Protocol::Cow, 200.0, 50.0, 0.005),
        (Protocol::Bb84, 200.0, 200.0, 0.0),
        (Protocol::Cow, 200.0, 200.0, 0.1),
    ];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (i, (protocol, mu, d, r_e)) in configs.into_iter().enumerate() {
        let cfg = SimConfig {
            protocol,
            intensity_mu: mu,
            distance_km: d,
            r_e: p(r_e),
            n_pulses: 1_000_000,
            seed: 1000 + i as u64,
        };
        let out = simulate(&cfg).map_err(|e| e.to_string())?;
        for c in compare_to_analytic(&out, &cfg).map_err(|e| e.to_string())? {
            worst = worst.max(c.z.abs());
            if !c.passed() {
                failures.push(format!("{protocol:?} μ={mu} D={d} r_E={r_e} {} z={:.2}", c.name, c.z));
            }
        }
    }
    let detail = format!("12 configs, n = 1e6, max |z| = {worst:.2} (limit 4)");
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn ac9() -> Check {
    let res = 0.2;
    let injected = [
        (12.34, 0.005),
        (31.7, 0.01),
        (50.05, 0.02),
        (68.9, 0.035),
        (87.21, 0.05),
    ];
    let ch = ChannelState::new(
        FiberSpec::standard(100.0).unwrap(),
        injected.iter().map(|&(z, m)| LocalLeak::new(z, m).unwrap()),
    )
    .map_err(|e| e.to_string())?;

    let r = synth_reflectogram(&ch, res, 0.0, 1, 0).map_err(|e| e.to_string())?;
    let t = fit_tomogram(&r, Probability::ZERO).map_err(|e| e.to_string())?;
    let mut worst_pos: f64 = 0.0;
    let mut worst_mag: f64 = 0.0;
    let noiseless_ok = t.leaks.len() == injected.len()
        && t.leaks.iter().zip(&injected).all(|(got, &(z, m))| {
            worst_pos = worst_pos.max((got.position_km - z).abs() / res);
            worst_mag = worst_mag.max((*got.magnitude / m - 1.0).abs());
            (got.position_km - z).abs() <= res + 1e-9 && (*got.magnitude / m - 1.0).abs() <= 1e-6
        });

    let trials = 200;
    let hits: usize = (0..trials)
        .filter(|&seed| {
            let r = synth_reflectogram(&ch, res, 0.005, 1, seed).expect("valid synth");
            fit_tomogram(&r, p(1e-3)).expect("fit").leaks.iter().any(|l| {
                (l.position_km - 12.34).abs() <= 2.0 * res + 1e-9
                    && (*l.magnitude / 0.005 - 1.0).abs() <= 0.2
            })
        })
        .count();
    let rate = hits as f64 / trials as f64;
    ok_if(
        noiseless_ok && rate >= 0.95,
        format!(
            "noiseless: {} leaks, worst position error {worst_pos:.3} bins (≤ 1), worst magnitude rel error {worst_mag:.1e} (≤ 1e-6); noisy 0.5% leak recovered in {hits}/{trials} (need ≥ 95%)",
            t.leaks.len()
        ),
    )
}

fn ac10() -> Check {
    let natural = p(0.5);
    let effective = p(0.5 * (1.0 - 0.02));
    let mut wins = 0;
    for seed in 0..100 {
        let cfg = TransmittometryConfig {
            one_over_f_amp: 10.0,
            white_noise_amp: 0.1,
            seed,
            ..TransmittometryConfig::default()
        };
        let lock_in = transmittometry_estimate(&cfg, effective, natural).map_err(|e| e.to_string())?;
        let naive = naive_rms_estimate(&cfg, effective, natural).map_err(|e| e.to_string())?;
        if (*lock_in - 0.02).abs() < (*naive - 0.02).abs() {
            wins += 1;
        }
    }
    ok_if(wins >= 90, format!("lock-in wins {wins}/100 paired trials (need ≥ 90)"))
}

/// Seeded sampling of the module invariants; the proptest suite explores them further.
fn ac11() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failed = Vec::new();
    let mut check = |name: &str, cond: bool| {
        if !cond && !failed.iter().any(|f: &String| f == name) {
            failed.push(name.to_string());
        }
    };
    for _ in 0..500 {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        check(
            "entropy symmetry",
            (binary_entropy(p(x)) - binary_entropy(p(1.0 - x))).abs() < 1e-12,
        );
        let lam: f64 = rng.random();
        let mix = binary_entropy(p(lam * x + (1.0 - lam) * y));
        check(
            "entropy concavity",
            mix + 1e-12 >= lam * binary_entropy(p(x)) + (1.0 - lam) * binary_entropy(p(y)),
        );

        let g = CoherentAmplitude::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let s: f64 = rng.random();
        let lhs = coherent_overlap_mag(CoherentAmplitude::VACUUM, g.scale(s));
        let rhs = coherent_overlap_mag(CoherentAmplitude::VACUUM, g).powf(s * s);
        check("overlap scaling", (lhs - rhs).abs() < 1e-12);
        check(
            "overlap symmetry",
            coherent_overlap_mag(g, -g) == coherent_overlap_mag(-g, g),
        );

        let mu = rng.random_range(0.0..300.0);
        let n_max = (mu + 12.0 * f64::sqrt(mu) + 12.0) as u64;
        let total: f64 = (0..=n_max).map(|k| *poisson_pmf(mu, k).unwrap()).sum();
        check("poisson normalization", (total - 1.0).abs() < 1e-9);

        let d1 = rng.random_range(0.0..250.0);
        let d2 = d1 + rng.random_range(0.1..50.0);
        let r1 = rng.random_range(0.0..0.1);
        let r2 = r1 + rng.random_range(0.001..0.05);
        let pe1 = rng.random_range(0.0..0.1);
        let pe2 = pe1 + rng.random_range(0.001..0.05);
        let mu = rng.random_range(0.01..300.0);
        let rate = |d: f64, r: f64, pe: f64| {
            bb84_enhanced_rate(&BB84Params::new(mu, p(r), p(pe), p(pe)).unwrap(), t_at(d))
        };
        check("rate monotone in D", rate(d2, r1, pe1) <= rate(d1, r1, pe1));
        // a negative raw rate with errors can rise with r_E; the key rate is the clamped value
        check(
            "rate monotone in r_E",
            rate(d1, r2, pe1).max(0.0) <= rate(d1, r1, pe1).max(0.0),
        );
        check("rate monotone in p_err", rate(d1, r1, pe2) <= rate(d1, r1, pe1));

        // beam-splitting Eve with (1 - T) = r_E sees exactly the leak-bound state
        let t: f64 = rng.random();
        let eq9 = cow_eve_info(&COWParams::new(mu, p(1.0 - t), Probability::ZERO).unwrap());
        let eq12 = cow_bs_eve_info(mu, p(t)).unwrap();
        check("shared Holevo kernel", (eq9 - eq12).abs() < 1e-12);

        let l = rng.random_range(0.0..1.0);
        let b = |k| natural_loss_info_bound(k, &FiberSpec::default(), l, 100.0).unwrap();
        check(
            "natural-loss ordering",
            b(EncodingKind::DpsLike) + 1e-12 >= b(EncodingKind::CowLike),
        );
    }

    for _ in 0..100 {
        let leaks: Vec<LocalLeak> = (0..rng.random_range(0..6))
            .map(|_| LocalLeak::new(rng.random_range(0.0..100.0), rng.random_range(0.0..0.2)).unwrap())
            .collect();
        let fiber = FiberSpec::standard(100.0).unwrap();
        let a = ChannelState::new(fiber, leaks.clone()).unwrap();
        let mut rev = leaks.clone();
        rev.reverse();
        let b = ChannelState::new(fiber, rev).unwrap();
        check(
            "leak permutation invariance",
            (*total_artificial_leak(&a) - *total_artificial_leak(&b)).abs() < 1e-15
                && effective_transmittance(&a) == effective_transmittance(&b),
        );
    }

    let cfg = SimConfig {
        protocol: Protocol::Bb84,
        intensity_mu: 3.0,
        distance_km: 20.0,
        r_e: p(0.05),
        n_pulses: 100_000,
        seed: 99,
    };
    check(
        "seeded determinism",
        simulate(&cfg).unwrap() == simulate(&cfg).unwrap(),
    );

    if failed.is_empty() {
        Ok("entropy, overlap, Poisson, monotonicity, shared-kernel, leak-composition and determinism checks hold".into())
    } else {
        Err(format!("violated: {}", failed.join(", ")))
    }
}

fn main() {
    let criteria: [(&str, &str, u64, fn() -> Check); 11] = [
        ("AC1", "PLOB at 200 km", 1, ac1),
        ("AC2", "original BB84 optimum at μ = 1", 1, ac2),
        ("AC3", "BB84 boost at 200 km", 5, || boost_check(Protocol::Bb84)),
        ("AC4", "COW boost at 200 km", 5, || boost_check(Protocol::Cow)),
        ("AC5", "dashed-line doubling", 1, ac5),
        ("AC6", "optimal-intensity envelopes", 30, ac6),
        ("AC7", "PLOB overcoming", 30, ac7),
        ("AC8", "Monte Carlo agreement", 60, ac8),
        ("AC9", "tomography round trip", 120, ac9),
        ("AC10", "lock-in superiority", 60, ac10),
        ("AC11", "property suites", 60, ac11),
    ];
    let mut failures = 0;
    for (id, name, budget_s, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget_s);
        let (tag, detail) = match (&result, in_time) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the {budget_s} s budget")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failures += 1;
        }
        println!("[{tag}] {id} {name}: {detail} [{:.2} s]", elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failures} failed", 11 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
