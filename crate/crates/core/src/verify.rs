//! Self-checks run by `ilnlab verify`: the noisy-posterior identity against
//! simulated flips, the clean/noisy risk-shift bound by enumeration, and
//! the estimator-independent excess-risk sum of the construction.

use std::fmt;
use std::str::FromStr;

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::distributions::{check_noise_bound, noisy_posterior, FiniteDistribution, Label, NoiseFamily, NoiseFn, NoiseModel, NoiseProbe};
use crate::error::{Error, Result};
use crate::hypotheses::{Hypothesis, HypothesisSpace};
use crate::losses::LossKind;
use crate::minimax::{
    build_construction, closed_form_excess_sum, estimator_excess_sum, verify_indistinguishable, LookupEstimator,
    MajorityAtB,
};
use crate::risk::exact_risk;
use crate::scalar::Exact;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemma1,
    Lemma2,
    Minimax,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma1" => Ok(Suite::Lemma1),
            "lemma2" => Ok(Suite::Lemma2),
            "minimax" => Ok(Suite::Minimax),
            "all" => Ok(Suite::All),
            _ => Err(Error::invalid(format!("unknown suite `{s}` (lemma1, lemma2, minimax, all)"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2 => "lemma2",
            Suite::Minimax => "minimax",
            Suite::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Random cases per check; `None` uses each check's default.
    pub trials: Option<usize>,
    /// Simulated flips per tuple in the noisy-posterior check.
    pub draws: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            trials: None,
            draws: 1_000_000,
            seed: 0,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Lemma1 | Suite::All) {
        checks.push(noisy_posterior_frequency(opts.trials.unwrap_or(1000), opts.draws, opts.seed)?);
        checks.push(noisy_view_exact(opts.trials.unwrap_or(200), opts.seed)?);
    }
    if matches!(suite, Suite::Lemma2 | Suite::All) {
        checks.push(risk_shift_enumeration(opts.trials.unwrap_or(200), opts.seed)?);
    }
    if matches!(suite, Suite::Minimax | Suite::All) {
        checks.extend(construction_identities(opts.trials.unwrap_or(100), opts.seed)?);
    }
    Ok(SuiteReport {
        suite,
        seed: opts.seed,
        checks,
    })
}

/// Counts simulated `ỹ = +1` in `draws` two-stage draws. Uniform `u32`
/// thresholds keep it fast; the rounding is below `2^-32`.
pub fn simulate_noisy_positive(eta: f64, rho_plus: f64, rho_minus: f64, draws: usize, rng: &mut SmallRng) -> u64 {
    let scale = 4294967296.0;
    let t_eta = (eta * scale) as u64;
    let t_plus = (rho_plus * scale) as u64;
    let t_minus = (rho_minus * scale) as u64;
    let mut hits = 0u64;
    for _ in 0..draws {
        let u = rng.random::<u64>();
        let (a, b) = (u >> 32, u & 0xffff_ffff);
        let positive = a < t_eta;
        let flipped = if positive { b < t_plus } else { b < t_minus };
        hits += u64::from(positive != flipped);
    }
    hits
}

/// Random `(η, ρ₊, ρ₋)` with `ρ₊ + ρ₋ < 1`.
pub fn random_tuple(rng: &mut SmallRng) -> (f64, f64, f64) {
    loop {
        let eta = rng.random::<f64>();
        let rp = rng.random::<f64>();
        let rm = rng.random::<f64>();
        if rp + rm < 0.999 {
            return (eta, rp, rm);
        }
    }
}

fn noisy_posterior_frequency(trials: usize, draws: usize, seed: u64) -> Result<Check> {
    let mut rng = SmallRng::seed_from_u64(seed);
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (eta, rp, rm) = random_tuple(&mut rng);
        let p = noisy_posterior(eta, rp, rm)?;
        let hits = simulate_noisy_positive(eta, rp, rm, draws, &mut rng);
        let freq = hits as f64 / draws as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt().max(1.0 / draws as f64);
        let z = (freq - p).abs() / sigma;
        worst = worst.max(z);
        if z <= 4.0 {
            within += 1;
        }
    }
    let needed = (trials * 995).div_ceil(1000);
    Ok(Check {
        name: "noisy_posterior_vs_simulated_flips".into(),
        passed: within >= needed,
        detail: format!("{within}/{trials} tuples within 4 sigma at {draws} draws (need {needed}); worst z = {worst:.2}"),
    })
}

/// Random finite law with at most `max_support` points on the integers.
pub fn random_finite(rng: &mut SmallRng, max_support: usize) -> Result<FiniteDistribution> {
    let k = rng.random_range(1..=max_support);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut mass: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = mass[..k - 1].iter().sum();
    mass[k - 1] = 1.0 - head;
    let posterior = (0..k)
        .map(|_| match rng.random_range(0..6) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random(),
        })
        .collect();
    FiniteDistribution::new((0..k).map(|i| vec![i as f64]).collect(), mass, posterior)
}

/// Table noise on the support of `dist` with `ρ₊ + ρ₋ ≤ rho` pointwise.
pub fn random_table_noise(rng: &mut SmallRng, dist: &FiniteDistribution, rho: f64) -> Result<NoiseModel> {
    let k = dist.len();
    let mut plus = Vec::with_capacity(k);
    let mut minus = Vec::with_capacity(k);
    for _ in 0..k {
        let s = rho * rng.random::<f64>();
        let split = rng.random::<f64>();
        plus.push(s * split);
        minus.push(s * (1.0 - split));
    }
    let pts = dist.points().to_vec();
    NoiseModel::new(
        NoiseFamily::Iln,
        NoiseFn::Table {
            points: pts.clone(),
            values: plus,
        },
        NoiseFn::Table { points: pts, values: minus },
        rho,
    )
}

fn noisy_view_exact(trials: usize, seed: u64) -> Result<Check> {
    let mut rng = SmallRng::seed_from_u64(seed ^ 0x51);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let d = random_finite(&mut rng, 5)?;
        let rho = rng.random_range(0.0..0.95);
        let nm = random_table_noise(&mut rng, &d, rho)?;
        let view = d.noisy_view(&nm)?;
        for (i, x) in d.points().iter().enumerate() {
            let (rp, rm) = nm.rates(x)?;
            let eta = d.posterior()[i];
            // (1 − ρ₊ − ρ₋)η + ρ₋, an independent arrangement of the same identity
            let alt = (1.0 - rp - rm) * eta + rm;
            worst = worst.max((view.posterior()[i] - alt).abs());
        }
    }
    Ok(Check {
        name: "noisy_view_matches_identity".into(),
        passed: worst <= 1e-12,
        detail: format!("{trials} finite transforms, max deviation {worst:.3e}"),
    })
}

/// Largest `R(f) − R̃(f)` over all sign tables on the support, 0-1 loss.
pub fn max_risk_shift(dist: &FiniteDistribution, noise: &NoiseModel) -> Result<f64> {
    let k = dist.len();
    let space = HypothesisSpace::finite_sign(dist.points().to_vec())?;
    let mut worst = f64::NEG_INFINITY;
    for mask in 0u32..(1 << k) {
        let signs = (0..k)
            .map(|i| if mask >> i & 1 == 1 { Label::Pos } else { Label::Neg })
            .collect();
        let h = Hypothesis::sign_table(space.clone(), signs)?;
        let clean = exact_risk(&h, dist, None, LossKind::ZeroOne)?;
        let noisy = exact_risk(&h, dist, Some(noise), LossKind::ZeroOne)?;
        worst = worst.max(clean - noisy);
    }
    Ok(worst)
}

fn risk_shift_enumeration(trials: usize, seed: u64) -> Result<Check> {
    let mut rng = SmallRng::seed_from_u64(seed ^ 0x52);
    let mut ok = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..trials {
        let d = random_finite(&mut rng, 5)?;
        let rho = rng.random_range(0.0..0.95);
        let nm = random_table_noise(&mut rng, &d, rho)?;
        let mean_sum = check_noise_bound(&nm, NoiseProbe::Support(&d))?.mean_sum;
        let shift = max_risk_shift(&d, &nm)?;
        let cap = 1.5 * mean_sum;
        tightest = tightest.min(cap - shift);
        if shift <= cap + 1e-12 && cap <= 1.5 * rho + 1e-12 {
            ok += 1;
        }
    }
    Ok(Check {
        name: "risk_shift_within_three_halves_mean_sum".into(),
        passed: ok == trials,
        detail: format!("{ok}/{trials} distributions; smallest slack {tightest:.3e}"),
    })
}

fn construction_identities(estimators: usize, seed: u64) -> Result<Vec<Check>> {
    let mut kl_tv = true;
    let mut margin_err: f64 = 0.0;
    let mut sums_equal = true;
    let mut above_floor = true;
    let mut count = 0;
    for k in 1..=9 {
        let rho = k as f64 / 10.0;
        let exact = build_construction(Exact::new(k.into(), 10.into()))?;
        let float = build_construction(rho)?;
        for side in [&float.eta_minus, &float.eta_plus] {
            let m = (2.0 * side[1] - 1.0).abs();
            margin_err = margin_err.max((m - rho / (2.0 - rho)).abs());
        }
        let target = closed_form_excess_sum(&exact);
        above_floor &= target.lower() > rho / 8.0 && target.lower() > 2.0 * rho / 16.0;
        for n in 1..=4 {
            let d = verify_indistinguishable(&exact, n)?;
            kl_tv &= d.kl == 0.0 && d.tv == 0.0;
            sums_equal &= estimator_excess_sum(&exact, &MajorityAtB, n)? == target;
            for e in 0..estimators {
                let est = LookupEstimator::random(n, crate::rng::derive_seed(seed, (k * 1000 + n * 100 + e) as u64))?;
                sums_equal &= estimator_excess_sum(&exact, &est, n)? == target;
                count += 1;
            }
        }
    }
    Ok(vec![
        Check {
            name: "noisy_laws_identical".into(),
            passed: kl_tv,
            detail: "kl = tv = 0 for rho in 0.1..0.9, n in 1..4 (exact rationals)".into(),
        },
        Check {
            name: "margin_at_b".into(),
            passed: margin_err <= 1e-15,
            detail: format!("max | |2 eta(b) - 1| - rho/(2 - rho) | = {margin_err:.3e}"),
        },
        Check {
            name: "excess_sum_estimator_independent".into(),
            passed: sums_equal && above_floor,
            detail: format!("{count} random estimators plus majority vote all equal 0.75 rho/(2 - rho) exactly, above rho/8"),
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        let opts = VerifyOptions {
            trials: Some(20),
            draws: 20_000,
            seed: 3,
        };
        for s in [Suite::Lemma1, Suite::Lemma2] {
            let r = run_suite(s, &opts).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        let r = run_suite(Suite::Minimax, &VerifyOptions { trials: Some(2), ..opts }).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn simulated_frequency_tracks_formula() {
        let mut rng = SmallRng::seed_from_u64(1);
        let hits = simulate_noisy_positive(0.625, 0.2, 0.0, 200_000, &mut rng);
        assert!((hits as f64 / 200_000.0 - 0.5).abs() < 0.005);
    }

    #[test]
    fn suite_names() {
        assert_eq!("lemma2".parse::<Suite>().unwrap(), Suite::Lemma2);
        assert!("lemma3".parse::<Suite>().is_err());
    }
}
