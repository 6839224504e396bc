//! The three-point, two-hypothesis construction behind the minimax lower
//! bound, verified by exact enumeration of the `n`-sample noisy laws.
//!
//! Points `a`, `b`, `c` carry mass `1/8`, `3/4`, `1/8`. Both clean laws are
//! deterministic at `a` (`η = 1`) and `c` (`η = 0`); at `b` they sit on
//! opposite sides of ½ while noise pulls both noisy posteriors to exactly ½.

use std::path::Path;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::distributions::{
    check_anchor, check_margin, noisy_posterior, FiniteDistribution, Label, NoiseFamily, NoiseFn, NoiseModel,
    DEFAULT_ANCHOR_TOL,
};
use crate::error::{Error, Result};
use crate::scalar::{Exact, KahanSum, Scalar};

/// Largest sample size for exact enumeration (`6^8` outcomes).
pub const MAX_ENUMERATION_N: usize = 8;

/// Outcomes per draw: three points times two noisy labels.
const OUTCOMES: usize = 6;

pub const POINT_NAMES: [&str; 3] = ["a", "b", "c"];

/// Index of `b`, the only point where the two Bayes classifiers disagree.
pub const B: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Minus, Side::Plus];

    /// Bayes sign at `b`.
    pub fn sign(self) -> Label {
        match self {
            Side::Minus => Label::Neg,
            Side::Plus => Label::Pos,
        }
    }
}

/// Flip rates at `a`, `b`, `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTables<T> {
    pub rho_plus: [T; 3],
    pub rho_minus: [T; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionPair<T> {
    pub rho: T,
    pub points: [Vec<f64>; 3],
    pub marginal: [T; 3],
    pub eta_minus: [T; 3],
    pub eta_plus: [T; 3],
    pub noise_minus: NoiseTables<T>,
    pub noise_plus: NoiseTables<T>,
    pub noisy_minus: [T; 3],
    pub noisy_plus: [T; 3],
}

/// Build-time identities hold to a few units of roundoff; exact types
/// meet them with 0.
fn close<T: Scalar>(a: &T, b: &T) -> bool {
    (a.clone() - b.clone()).abs() <= T::lift(64.0 * T::unit_roundoff())
}

pub fn build_construction<T: Scalar>(rho: T) -> Result<ConstructionPair<T>> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::invalid(format!("rho = {} outside (0, 1)", rho.lower())));
    }
    let (zero, one, two) = (T::zero(), T::one(), T::two());
    let eight = T::from_u8(8).expect("small integer");
    let denom = two.clone() - rho.clone();
    let marginal = [
        one.clone() / eight.clone(),
        T::from_u8(3).expect("small integer") / T::from_u8(4).expect("small integer"),
        one.clone() / eight,
    ];
    let eta_plus = [one.clone(), one.clone() / denom.clone(), zero.clone()];
    let eta_minus = [one.clone(), (one.clone() - rho.clone()) / denom.clone(), zero.clone()];
    let half_rho = rho.clone() / two.clone();
    let noise_plus = NoiseTables {
        rho_plus: [zero.clone(), half_rho.clone(), zero.clone()],
        rho_minus: [zero.clone(), zero.clone(), zero.clone()],
    };
    let noise_minus = NoiseTables {
        rho_plus: [zero.clone(), zero.clone(), zero.clone()],
        rho_minus: [zero.clone(), half_rho, zero.clone()],
    };
    let apply = |eta: &[T; 3], nt: &NoiseTables<T>| -> Result<[T; 3]> {
        Ok([
            noisy_posterior(eta[0].clone(), nt.rho_plus[0].clone(), nt.rho_minus[0].clone())?,
            noisy_posterior(eta[1].clone(), nt.rho_plus[1].clone(), nt.rho_minus[1].clone())?,
            noisy_posterior(eta[2].clone(), nt.rho_plus[2].clone(), nt.rho_minus[2].clone())?,
        ])
    };
    let noisy_plus = apply(&eta_plus, &noise_plus)?;
    let noisy_minus = apply(&eta_minus, &noise_minus)?;

    let pair = ConstructionPair {
        rho,
        points: [vec![0.0], vec![1.0], vec![2.0]],
        marginal,
        eta_minus,
        eta_plus,
        noise_minus,
        noise_plus,
        noisy_minus,
        noisy_plus,
    };
    pair.check()?;
    Ok(pair)
}

impl<T: Scalar> ConstructionPair<T> {
    fn check(&self) -> Result<()> {
        for x in 0..3 {
            if !close(&self.noisy_plus[x], &self.noisy_minus[x]) {
                return Err(Error::invalid(format!(
                    "noisy posteriors differ at {}",
                    POINT_NAMES[x]
                )));
            }
        }
        if !close(&self.noisy_plus[B], &T::half()) {
            return Err(Error::invalid("noisy posterior at b is not 1/2"));
        }
        let target = self.margin();
        for side in Side::BOTH {
            let m = (T::two() * self.eta(side)[B].clone() - T::one()).abs();
            if !close(&m, &target) {
                return Err(Error::invalid("margin at b differs from rho/(2 - rho)"));
            }
            let d = self.clean_distribution(side)?;
            let anchor = check_anchor(&d, DEFAULT_ANCHOR_TOL);
            if !(anchor.has_pos_anchor && anchor.has_neg_anchor) {
                return Err(Error::invalid("construction lacks anchor points"));
            }
            if !check_margin(&d, 0.0, 1.0)?.ok {
                return Err(Error::invalid("construction fails the alpha = 0 margin condition"));
            }
        }
        Ok(())
    }

    /// `ρ/(2 − ρ)`.
    pub fn margin(&self) -> T {
        self.rho.clone() / (T::two() - self.rho.clone())
    }

    pub fn eta(&self, side: Side) -> &[T; 3] {
        match side {
            Side::Minus => &self.eta_minus,
            Side::Plus => &self.eta_plus,
        }
    }

    pub fn noisy(&self, side: Side) -> &[T; 3] {
        match side {
            Side::Minus => &self.noisy_minus,
            Side::Plus => &self.noisy_plus,
        }
    }

    pub fn noise_tables(&self, side: Side) -> &NoiseTables<T> {
        match side {
            Side::Minus => &self.noise_minus,
            Side::Plus => &self.noise_plus,
        }
    }

    pub fn clean_distribution(&self, side: Side) -> Result<FiniteDistribution> {
        FiniteDistribution::new(
            self.points.to_vec(),
            self.marginal.iter().map(Scalar::lower).collect(),
            self.eta(side).iter().map(Scalar::lower).collect(),
        )
    }

    /// Table-valued noise with declared bound `ρ`.
    pub fn noise_model(&self, side: Side) -> Result<NoiseModel> {
        let nt = self.noise_tables(side);
        let table = |v: &[T; 3]| NoiseFn::Table {
            points: self.points.to_vec(),
            values: v.iter().map(Scalar::lower).collect(),
        };
        NoiseModel::new(NoiseFamily::Iln, table(&nt.rho_plus), table(&nt.rho_minus), self.rho.lower())
    }

    /// Probability of outcome `k = 2·point + (label == −1)` in one noisy draw.
    fn outcome_prob(&self, side: Side, k: usize) -> T {
        let (x, neg) = (k / 2, k % 2 == 1);
        let eta = self.noisy(side)[x].clone();
        let p = if neg { T::one() - eta } else { eta };
        self.marginal[x].clone() * p
    }

    /// Excess 0-1 risk under side `side` of a classifier that uses the
    /// Bayes signs at `a`, `c` and `sign` at `b`.
    pub fn excess_at_b(&self, side: Side, sign: Label) -> T {
        if sign == side.sign() {
            T::zero()
        } else {
            self.marginal[B].clone() * self.margin()
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_N {
        Err(Error::EnumerationTooLarge {
            n,
            max: MAX_ENUMERATION_N,
        })
    } else {
        Ok(())
    }
}

/// Visits every ordered `n`-sample with its probability under both sides.
fn enumerate<T: Scalar, F>(pair: &ConstructionPair<T>, n: usize, mut visit: F) -> Result<()>
where
    F: FnMut(&[Outcome], &T, &T) -> Result<()>,
{
    check_n(n)?;
    let single: Vec<(T, T)> = (0..OUTCOMES)
        .map(|k| (pair.outcome_prob(Side::Minus, k), pair.outcome_prob(Side::Plus, k)))
        .collect();
    let total = OUTCOMES.pow(n as u32);
    let mut digits = vec![0usize; n];
    let mut sample = vec![Outcome { point: 0, label: Label::Pos }; n];
    for _ in 0..total {
        let mut pm = T::one();
        let mut pp = T::one();
        for (j, d) in digits.iter().enumerate() {
            pm = pm * single[*d].0.clone();
            pp = pp * single[*d].1.clone();
            sample[j] = Outcome::from_code(*d);
        }
        visit(&sample, &pm, &pp)?;
        for d in digits.iter_mut() {
            *d += 1;
            if *d < OUTCOMES {
                break;
            }
            *d = 0;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Indistinguishability {
    /// `KL(P̃⁻ⁿ ‖ P̃⁺ⁿ)`.
    pub kl: f64,
    pub tv: f64,
}

/// KL divergence and total variation between the two `n`-fold noisy laws.
///
/// TV is accumulated in `T`; KL terms need a logarithm and are taken in
/// `f64` on the exact likelihood ratio.
pub fn verify_indistinguishable<T: Scalar>(pair: &ConstructionPair<T>, n: usize) -> Result<Indistinguishability> {
    let mut kl = KahanSum::<f64>::new();
    let mut tv = KahanSum::<T>::new();
    enumerate(pair, n, |_, pm, pp| {
        tv.add((pm.clone() - pp.clone()).abs());
        if pm.is_zero() {
            return Ok(());
        }
        if pp.is_zero() {
            kl.add(f64::INFINITY);
            return Ok(());
        }
        let ratio = (pm.clone() / pp.clone()).lower();
        kl.add(pm.lower() * ratio.ln());
        Ok(())
    })?;
    Ok(Indistinguishability {
        kl: kl.total(),
        tv: (tv.total() / T::two()).lower(),
    })
}

/// `Σ_x P(x)·min(η(x), 1 − η(x))`.
pub fn bayes_risk01<T: Scalar>(pair: &ConstructionPair<T>, side: Side) -> T {
    let eta = pair.eta(side);
    (0..3)
        .map(|x| pair.marginal[x].clone() * T::min_of(eta[x].clone(), T::one() - eta[x].clone()))
        .fold(T::zero(), |a, b| a + b)
}

/// One noisy draw: a point of `{a, b, c}` and its observed label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub point: usize,
    pub label: Label,
}

impl Outcome {
    fn from_code(k: usize) -> Self {
        Outcome {
            point: k / 2,
            label: if k % 2 == 1 { Label::Neg } else { Label::Pos },
        }
    }

    fn code(self) -> usize {
        2 * self.point + usize::from(self.label == Label::Neg)
    }
}

/// A deterministic rule mapping a noisy sample to a sign at `b`.
pub trait Estimator {
    /// Must return `1` or `-1`.
    fn decide(&self, sample: &[Outcome]) -> i8;
}

/// Always the same sign.
#[derive(Debug, Clone, Copy)]
pub struct ConstantEstimator(pub i8);

impl Estimator for ConstantEstimator {
    fn decide(&self, _: &[Outcome]) -> i8 {
        self.0
    }
}

/// Majority of the noisy labels observed at `b`, ties to `+1`. This is what
/// 0-1 ERM over sign tables does at `b`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MajorityAtB;

impl Estimator for MajorityAtB {
    fn decide(&self, sample: &[Outcome]) -> i8 {
        let votes: i64 = sample
            .iter()
            .filter(|o| o.point == B)
            .map(|o| o.label.as_i8() as i64)
            .sum();
        if votes >= 0 {
            1
        } else {
            -1
        }
    }
}

/// Arbitrary table from ordered samples of one fixed size to signs.
#[derive(Debug, Clone)]
pub struct LookupEstimator {
    n: usize,
    table: Vec<i8>,
}

impl LookupEstimator {
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        check_n(n)?;
        let mut rng = rand::rngs::SmallRng::seed_from_u64(seed);
        let table = (0..OUTCOMES.pow(n as u32))
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Ok(LookupEstimator { n, table })
    }

    pub fn from_table(n: usize, table: Vec<i8>) -> Result<Self> {
        check_n(n)?;
        if table.len() != OUTCOMES.pow(n as u32) {
            return Err(Error::invalid("lookup table must have 6^n entries"));
        }
        Ok(LookupEstimator { n, table })
    }
}

impl Estimator for LookupEstimator {
    fn decide(&self, sample: &[Outcome]) -> i8 {
        debug_assert_eq!(sample.len(), self.n);
        let idx = sample.iter().rev().fold(0, |acc, o| acc * OUTCOMES + o.code());
        self.table[idx]
    }
}

impl<F: Fn(&[Outcome]) -> i8> Estimator for F {
    fn decide(&self, sample: &[Outcome]) -> i8 {
        self(sample)
    }
}

fn decision(est: &dyn Estimator, sample: &[Outcome]) -> Result<Label> {
    let v = est.decide(sample);
    Label::from_i64(v as i64).map_err(|_| Error::NonBinaryEstimate(v as i64))
}

/// `Σ_{i∈{−,+}} E_{P̃ⁱⁿ}[R(f̂) − R(f*ⁱ)]`, exactly, over all `6^n` samples.
pub fn estimator_excess_sum<T: Scalar>(pair: &ConstructionPair<T>, est: &dyn Estimator, n: usize) -> Result<T> {
    let mut acc = KahanSum::<T>::new();
    enumerate(pair, n, |sample, pm, pp| {
        if pm.is_zero() && pp.is_zero() {
            return Ok(());
        }
        let s = decision(est, sample)?;
        acc.add(pm.clone() * pair.excess_at_b(Side::Minus, s));
        acc.add(pp.clone() * pair.excess_at_b(Side::Plus, s));
        Ok(())
    })?;
    Ok(acc.total())
}

/// `P⁻(test says +) + P⁺(test says −)` for the test induced by `est`.
pub fn testing_error_sum<T: Scalar>(pair: &ConstructionPair<T>, est: &dyn Estimator, n: usize) -> Result<T> {
    let mut acc = KahanSum::<T>::new();
    enumerate(pair, n, |sample, pm, pp| {
        if pm.is_zero() && pp.is_zero() {
            return Ok(());
        }
        match decision(est, sample)? {
            Label::Pos => acc.add(pm.clone()),
            Label::Neg => acc.add(pp.clone()),
        }
        Ok(())
    })?;
    Ok(acc.total())
}

/// `P(b)·ρ/(2 − ρ)`, the value every estimator attains.
pub fn closed_form_excess_sum<T: Scalar>(pair: &ConstructionPair<T>) -> T {
    pair.marginal[B].clone() * pair.margin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionTables {
    pub points: Vec<String>,
    pub marginal: [f64; 3],
    pub eta_minus: [f64; 3],
    pub eta_plus: [f64; 3],
    pub noisy_minus: [f64; 3],
    pub noisy_plus: [f64; 3],
    pub rho_plus_minus_side: [f64; 3],
    pub rho_minus_minus_side: [f64; 3],
    pub rho_plus_plus_side: [f64; 3],
    pub rho_minus_plus_side: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub n: usize,
    pub kl: f64,
    pub tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRow {
    pub estimator: String,
    pub n: usize,
    pub excess_sum: f64,
    pub testing_error_sum: f64,
}

/// Constants that a generic two-point argument would use, next to the
/// exact testing-error sum they lower-bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestingConstants {
    /// Testing-error floor from the classical two-hypothesis inequality.
    pub classical: f64,
    /// The weaker floor used by the lower-bound argument.
    pub argument: f64,
    pub exact_testing_error_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    pub rho: f64,
    pub arithmetic: String,
    pub construction: ConstructionTables,
    pub margin: f64,
    pub divergences: Vec<DivergenceRow>,
    pub bayes_risk01_minus: f64,
    pub bayes_risk01_plus: f64,
    pub estimators: Vec<EstimatorRow>,
    pub closed_form_excess_sum: f64,
    pub lemma6_lower: f64,
    pub theorem2_lower: f64,
    pub excess_sum_over_lemma6_lower: f64,
    pub testing_constants: TestingConstants,
    pub all_sums_equal: bool,
    pub indistinguishable: bool,
}

/// Full report at one `ρ`, computed in exact rational arithmetic.
///
/// `n_max` caps the enumerated sample sizes (`1..=n_max`); `seed` drives the
/// random lookup estimators.
pub fn minimax_report(rho: f64, n_max: usize, random_estimators: usize, seed: u64) -> Result<MinimaxReport> {
    check_n(n_max)?;
    let pair = build_construction(Exact::lift(rho))?;
    let lower3 = |v: &[Exact; 3]| [v[0].lower(), v[1].lower(), v[2].lower()];
    let construction = ConstructionTables {
        points: POINT_NAMES.iter().map(|s| s.to_string()).collect(),
        marginal: lower3(&pair.marginal),
        eta_minus: lower3(&pair.eta_minus),
        eta_plus: lower3(&pair.eta_plus),
        noisy_minus: lower3(&pair.noisy_minus),
        noisy_plus: lower3(&pair.noisy_plus),
        rho_plus_minus_side: lower3(&pair.noise_minus.rho_plus),
        rho_minus_minus_side: lower3(&pair.noise_minus.rho_minus),
        rho_plus_plus_side: lower3(&pair.noise_plus.rho_plus),
        rho_minus_plus_side: lower3(&pair.noise_plus.rho_minus),
    };
    let closed = closed_form_excess_sum(&pair);
    let mut divergences = Vec::new();
    let mut estimators = Vec::new();
    let mut all_equal = true;
    let mut exact_testing = None;
    for n in 1..=n_max {
        let div = verify_indistinguishable(&pair, n)?;
        divergences.push(DivergenceRow { n, kl: div.kl, tv: div.tv });
        let mut ests: Vec<(String, Box<dyn Estimator>)> = vec![
            ("constant_plus".into(), Box::new(ConstantEstimator(1))),
            ("constant_minus".into(), Box::new(ConstantEstimator(-1))),
            ("majority_at_b".into(), Box::new(MajorityAtB)),
        ];
        for k in 0..random_estimators {
            let s = crate::rng::derive_seed(seed, (n as u64) << 32 | k as u64);
            ests.push((format!("random_lookup_{k}"), Box::new(LookupEstimator::random(n, s)?)));
        }
        for (name, est) in &ests {
            let sum = estimator_excess_sum(&pair, est.as_ref(), n)?;
            let testing = testing_error_sum(&pair, est.as_ref(), n)?;
            all_equal &= sum == closed;
            exact_testing.get_or_insert(testing.clone());
            estimators.push(EstimatorRow {
                estimator: name.clone(),
                n,
                excess_sum: sum.lower(),
                testing_error_sum: testing.lower(),
            });
        }
    }
    let closed = closed.lower();
    let lemma6 = bounds::two_point_lower(rho);
    Ok(MinimaxReport {
        rho,
        arithmetic: "exact_rational".into(),
        construction,
        margin: pair.margin().lower(),
        indistinguishable: divergences.iter().all(|d| d.kl == 0.0 && d.tv == 0.0),
        divergences,
        bayes_risk01_minus: bayes_risk01(&pair, Side::Minus).lower(),
        bayes_risk01_plus: bayes_risk01(&pair, Side::Plus).lower(),
        estimators,
        closed_form_excess_sum: closed,
        lemma6_lower: lemma6,
        theorem2_lower: bounds::minimax_lower(rho),
        excess_sum_over_lemma6_lower: closed / lemma6,
        testing_constants: TestingConstants {
            classical: 0.36,
            argument: 1.0 / 3.0,
            exact_testing_error_sum: exact_testing.map(|t| t.lower()).unwrap_or(1.0),
        },
        all_sums_equal: all_equal,
    })
}

/// Writes `rho,excess_sum,lemma6_lower,theorem2_lower` rows.
pub fn write_floor_csv(reports: &[MinimaxReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::error::csv_io(e, path))?;
    w.write_record(["rho", "excess_sum", "lemma6_lower", "theorem2_lower"])?;
    for r in reports {
        w.write_record([
            crate::harness::fmt_float(r.rho),
            crate::harness::fmt_float(r.closed_form_excess_sum),
            crate::harness::fmt_float(r.lemma6_lower),
            crate::harness::fmt_float(r.theorem2_lower),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn exact(num: i64, den: i64) -> Exact {
        Exact::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn construction_values() {
        let p = build_construction(0.4f64).unwrap();
        assert!((p.eta_plus[B] - 0.625).abs() < 1e-15);
        assert!((p.eta_minus[B] - 0.375).abs() < 1e-15);
        assert!((p.noisy_plus[B] - 0.5).abs() < 1e-15);
        let p = build_construction(0.8f64).unwrap();
        assert!((p.margin() - 2.0 / 3.0).abs() < 1e-15);

        let q = build_construction(exact(2, 5)).unwrap();
        assert_eq!(q.eta_plus[B], exact(5, 8));
        assert_eq!(q.noisy_plus, q.noisy_minus);
        assert_eq!(q.noisy_plus[B], exact(1, 2));

        let tiny = build_construction(1e-6f64).unwrap();
        assert!(tiny.eta_plus[B] > 0.5 && tiny.eta_plus[B] - 0.5 < 1e-6);
        assert!(build_construction(0.0f64).is_err());
        assert!(build_construction(1.0f64).is_err());
        assert!(build_construction(0.3f32).is_ok());
    }

    #[test]
    fn indistinguishable_exactly() {
        let p = build_construction(exact(2, 5)).unwrap();
        for n in [0, 1, 4] {
            let d = verify_indistinguishable(&p, n).unwrap();
            assert_eq!((d.kl, d.tv), (0.0, 0.0));
        }
        assert!(matches!(
            verify_indistinguishable(&p, 9),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn bayes_risks() {
        let p = build_construction(exact(2, 5)).unwrap();
        assert_eq!(bayes_risk01(&p, Side::Plus), exact(9, 32));
        assert_eq!(bayes_risk01(&p, Side::Minus), bayes_risk01(&p, Side::Plus));
        let f = build_construction(0.4f64).unwrap();
        assert!((bayes_risk01(&f, Side::Plus) - 0.28125).abs() < 1e-15);
        let near_one = build_construction(0.999_999f64).unwrap();
        assert!(bayes_risk01(&near_one, Side::Plus) < 1e-5);
    }

    #[test]
    fn estimator_sums() {
        let p = build_construction(exact(2, 5)).unwrap();
        let target = exact(3, 16);
        assert_eq!(estimator_excess_sum(&p, &ConstantEstimator(1), 2).unwrap(), target);
        assert_eq!(estimator_excess_sum(&p, &MajorityAtB, 4).unwrap(), target);
        let l = LookupEstimator::random(3, 7).unwrap();
        assert_eq!(estimator_excess_sum(&p, &l, 3).unwrap(), target);
        assert!(target.lower() >= bounds::two_point_lower(0.4));
        let bad = |_: &[Outcome]| 0i8;
        assert!(matches!(
            estimator_excess_sum(&p, &bad, 1),
            Err(Error::NonBinaryEstimate(0))
        ));
        assert_eq!(testing_error_sum(&p, &MajorityAtB, 3).unwrap(), exact(1, 1));
    }

    #[test]
    fn float_enumeration_agrees() {
        let p = build_construction(0.4f64).unwrap();
        let s = estimator_excess_sum(&p, &MajorityAtB, 5).unwrap();
        assert!((s - 0.1875).abs() < 1e-12);
        let d = verify_indistinguishable(&p, 3).unwrap();
        assert!(d.kl.abs() < 1e-12 && d.tv < 1e-12);
    }

    #[test]
    fn half_sum_above_minimax_floor() {
        for k in 1..1000 {
            let rho = k as f64 / 1000.0;
            let p = build_construction(rho).unwrap();
            assert!(closed_form_excess_sum(&p) / 2.0 >= bounds::minimax_lower(rho));
        }
    }

    #[test]
    fn report_and_floor_csv() {
        let r = minimax_report(0.4, 2, 3, 1).unwrap();
        assert!(r.indistinguishable && r.all_sums_equal);
        assert_eq!(r.closed_form_excess_sum, 0.1875);
        assert_eq!(r.estimators.len(), 12);
        assert_eq!(r.testing_constants.exact_testing_error_sum, 1.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("floor.csv");
        write_floor_csv(&[r], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "rho,excess_sum,lemma6_lower,theorem2_lower\n0.4,0.1875,0.05,0.025\n");
    }
}
