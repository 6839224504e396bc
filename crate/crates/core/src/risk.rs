//! Exact, empirical and Monte-Carlo risks, and the clean-versus-noisy ERM
//! risk-gap experiment.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{self, GSetting};
use crate::distributions::{
    noisy_posterior, sample_dataset, ClassDistribution, Dataset, FiniteDistribution, Label, NoiseModel,
};
use crate::error::{Error, Result};
use crate::hypotheses::{erm_convex, erm_zero_one_finite, Hypothesis, HypothesisSpace, SolverConfig};
use crate::losses::{gap_constant, LossKind};
use crate::rng::{stream_rng, Stream};
use crate::scalar::KahanSum;
use crate::LabelChannel;

/// `η·ℓ(f, +1) + (1 − η)·ℓ(f, −1)`.
#[inline]
fn conditional_loss(loss: LossKind, score: f64, eta: f64) -> f64 {
    eta * loss.eval(score, Label::Pos) + (1.0 - eta) * loss.eval(score, Label::Neg)
}

/// Exact risk on a finite law; with `noise`, the risk against noisy labels.
pub fn exact_risk(h: &Hypothesis, dist: &FiniteDistribution, noise: Option<&NoiseModel>, loss: LossKind) -> Result<f64> {
    let mut acc = KahanSum::new();
    for ((x, p), eta) in dist.points().iter().zip(dist.mass()).zip(dist.posterior()) {
        let eta = match noise {
            Some(nm) => {
                let (rp, rm) = nm.rates_checked(x)?;
                noisy_posterior(*eta, rp, rm)?
            }
            None => *eta,
        };
        acc.add(p * conditional_loss(loss, h.predict(x)?, eta));
    }
    Ok(acc.total())
}

/// Mean loss over the rows of one label channel.
pub fn empirical_risk(h: &Hypothesis, data: &Dataset, loss: LossKind, channel: LabelChannel) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut acc = KahanSum::new();
    for (i, y) in data.labels(channel).iter().enumerate() {
        acc.add(loss.eval(h.predict(data.x(i))?, *y));
    }
    Ok(acc.total() / data.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Hoeffding half-width at confidence `1 − δ`.
    pub ci_half_width: f64,
    pub draws: usize,
    pub delta: f64,
}

/// Hoeffding half-width `B·√(ln(2/δ)/(2m))` for a loss with range width `B`.
pub fn hoeffding_half_width(range: f64, m: usize, delta: f64) -> f64 {
    range * ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt()
}

/// Monte-Carlo risk from `m` fresh draws of the evaluation stream.
///
/// Each draw contributes the conditional expected loss given `x`, so the
/// label itself is never sampled.
pub fn mc_risk(
    h: &Hypothesis,
    dist: &ClassDistribution,
    noise: Option<&NoiseModel>,
    loss: LossKind,
    m: usize,
    delta: f64,
    seed: u64,
) -> Result<McEstimate> {
    Ok(mc_risks(&[h], &[loss], dist, noise, m, delta, seed)?[0][0])
}

/// Several hypotheses and losses on one shared set of draws; indexed
/// `[hypothesis][loss]`.
pub fn mc_risks(
    hs: &[&Hypothesis],
    losses: &[LossKind],
    dist: &ClassDistribution,
    noise: Option<&NoiseModel>,
    m: usize,
    delta: f64,
    seed: u64,
) -> Result<Vec<Vec<McEstimate>>> {
    if m == 0 {
        return Err(Error::invalid("Monte-Carlo evaluation needs m >= 1"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta = {delta} outside (0, 1]")));
    }
    let mut widths = Vec::with_capacity(hs.len());
    for h in hs {
        let bound = h.space.score_bound();
        let mut row = Vec::with_capacity(losses.len());
        for loss in losses {
            if *loss == LossKind::SquaredMargin && !bound.is_finite() {
                return Err(Error::UnboundedLoss(loss.name()));
            }
            let (lo, hi) = loss.range(bound);
            if !(hi - lo).is_finite() {
                return Err(Error::UnboundedLoss(loss.name()));
            }
            row.push(hi - lo);
        }
        widths.push(row);
    }
    let mut rng = stream_rng(seed, Stream::Evaluation, 0);
    let mut x = vec![0.0; dist.dim()];
    let mut sums: Vec<Vec<KahanSum<f64>>> = hs.iter().map(|_| losses.iter().map(|_| KahanSum::new()).collect()).collect();
    for _ in 0..m {
        let mut eta = dist.draw(&mut rng, &mut x);
        if let Some(nm) = noise {
            let (rp, rm) = nm.rates_checked(&x)?;
            eta = noisy_posterior(eta, rp, rm)?;
        }
        for (h, row) in hs.iter().zip(sums.iter_mut()) {
            let score = h.predict(&x)?;
            for (loss, acc) in losses.iter().zip(row.iter_mut()) {
                acc.add(conditional_loss(*loss, score, eta));
            }
        }
    }
    Ok(sums
        .iter()
        .zip(&widths)
        .map(|(row, w)| {
            row.iter()
                .zip(w)
                .map(|(acc, b)| McEstimate {
                    estimate: acc.total() / m as f64,
                    ci_half_width: hoeffding_half_width(*b, m, delta),
                    draws: m,
                    delta,
                })
                .collect()
        })
        .collect())
}

/// How population risks are computed in the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Evaluation {
    /// Closed-form sum; finite laws only.
    Exact,
    MonteCarlo { draws: usize },
}

impl Evaluation {
    pub const DEFAULT_DRAWS: usize = 1_000_000;

    /// Exact for finite laws, Monte-Carlo with the default draw count
    /// otherwise.
    pub fn default_for(dist: &ClassDistribution) -> Self {
        match dist {
            ClassDistribution::Finite(_) => Evaluation::Exact,
            ClassDistribution::Synthetic(_) => Evaluation::MonteCarlo {
                draws: Self::DEFAULT_DRAWS,
            },
        }
    }
}

/// One cell of the risk-gap experiment.
#[derive(Debug, Clone)]
pub struct GapExperiment<'a> {
    pub dist: &'a ClassDistribution,
    pub noise: &'a NoiseModel,
    pub space: &'a HypothesisSpace,
    pub loss: LossKind,
    pub solver: SolverConfig,
    pub n: usize,
    pub delta: f64,
    /// Drives the training sample.
    pub seed: u64,
    pub evaluation: Evaluation,
    /// Drives Monte-Carlo evaluation; disjoint from training by stream.
    pub eval_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskGapResult {
    pub run_id: String,
    pub seed: u64,
    pub n: usize,
    pub rho: f64,
    pub dist_kind: String,
    pub noise_family: String,
    pub loss: String,
    pub space: String,
    #[serde(rename = "C")]
    pub c: f64,
    pub g_delta: f64,
    pub delta: f64,
    pub bound_lemma2: f64,
    pub bound_theorem1: f64,
    pub bound_corollary1: f64,
    /// Probability with which the risk-gap bound holds over the sample.
    pub bound_confidence: f64,
    pub clean_risk_clean_erm: f64,
    pub clean_risk_noisy_erm: f64,
    pub gap: f64,
    pub clean_risk01_clean_erm: f64,
    pub clean_risk01_noisy_erm: f64,
    pub gap01: f64,
    /// Half-width on each surrogate risk estimate; 0 when exact.
    pub eval_ci: f64,
    pub eval_ci01: f64,
    /// Extra failure probability per Monte-Carlo estimate; 0 when exact.
    pub eval_failure_prob: f64,
    pub solver_tol: f64,
    pub wall_ms: f64,
}

fn train(data: &Dataset, channel: LabelChannel, space: &HypothesisSpace, loss: LossKind, cfg: &SolverConfig) -> Result<Hypothesis> {
    match (loss, space) {
        (LossKind::ZeroOne, HypothesisSpace::FiniteSign { domain }) => erm_zero_one_finite(data, channel, domain),
        (LossKind::ZeroOne, _) => Err(Error::NonConvexLoss(loss.name())),
        _ => erm_convex(data, channel, space, loss, cfg),
    }
}

/// Deviation envelope for the space and loss.
///
/// For sign tables the finite-class envelope is scaled by the loss range.
pub fn g_delta_for(space: &HypothesisSpace, loss: LossKind, n: usize, delta: f64) -> Result<f64> {
    let bound = space.score_bound();
    let lipschitz = || loss.lipschitz_on(bound).ok_or(Error::UnboundedLoss(loss.name()));
    let setting = match space {
        HypothesisSpace::LinearBall {
            feature_radius,
            weight_radius,
            ..
        } => GSetting::Linear {
            lipschitz: lipschitz()?,
            feature_radius: *feature_radius,
            weight_radius: *weight_radius,
        },
        HypothesisSpace::RkhsBall { norm_bound, .. } => GSetting::Rkhs {
            lipschitz: lipschitz()?,
            kernel_radius: 1.0,
            norm_bound: *norm_bound,
        },
        HypothesisSpace::FiniteSign { domain } => {
            let (lo, hi) = loss.range(bound);
            let g = bounds::g_delta(&GSetting::Finite { domain_size: domain.len() }, n, delta)?;
            return Ok((hi - lo) * g);
        }
    };
    bounds::g_delta(&setting, n, delta)
}

impl GapExperiment<'_> {
    pub fn run(&self) -> Result<RiskGapResult> {
        let started = Instant::now();
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid(format!("delta = {} outside (0, 1]", self.delta)));
        }
        let c = gap_constant(self.loss, self.space)?;
        let g = g_delta_for(self.space, self.loss, self.n, self.delta)?;
        let rho = self.noise.rho_bound;

        let data = sample_dataset(self.dist, self.noise, self.n, self.seed)?;
        let clean = train(&data, LabelChannel::Clean, self.space, self.loss, &self.solver)?;
        let noisy = train(&data, LabelChannel::Noisy, self.space, self.loss, &self.solver)?;

        let (r_clean, r_noisy, r01_clean, r01_noisy, ci, ci01, fail) = match self.evaluation {
            Evaluation::Exact => {
                let ClassDistribution::Finite(d) = self.dist else {
                    return Err(Error::invalid("exact evaluation needs a finite distribution"));
                };
                (
                    exact_risk(&clean, d, None, self.loss)?,
                    exact_risk(&noisy, d, None, self.loss)?,
                    exact_risk(&clean, d, None, LossKind::ZeroOne)?,
                    exact_risk(&noisy, d, None, LossKind::ZeroOne)?,
                    0.0,
                    0.0,
                    0.0,
                )
            }
            Evaluation::MonteCarlo { draws } => {
                let est = mc_risks(
                    &[&clean, &noisy],
                    &[self.loss, LossKind::ZeroOne],
                    self.dist,
                    None,
                    draws,
                    self.delta,
                    self.eval_seed,
                )?;
                (
                    est[0][0].estimate,
                    est[1][0].estimate,
                    est[0][1].estimate,
                    est[1][1].estimate,
                    est[0][0].ci_half_width,
                    est[0][1].ci_half_width,
                    self.delta,
                )
            }
        };

        Ok(RiskGapResult {
            run_id: String::new(),
            seed: self.seed,
            n: self.n,
            rho,
            dist_kind: self.dist.kind_name().to_string(),
            noise_family: self.noise.family.name().to_string(),
            loss: self.loss.name().to_string(),
            space: self.space.kind_name().to_string(),
            c,
            g_delta: g,
            delta: self.delta,
            bound_lemma2: bounds::risk_shift(c, rho),
            bound_theorem1: bounds::risk_gap(c, rho, g),
            bound_corollary1: bounds::excess_risk(c, rho, g),
            bound_confidence: (1.0 - 2.0 * self.delta).max(0.0),
            clean_risk_clean_erm: r_clean,
            clean_risk_noisy_erm: r_noisy,
            gap: r_noisy - r_clean,
            clean_risk01_clean_erm: r01_clean,
            clean_risk01_noisy_erm: r01_noisy,
            gap01: r01_noisy - r01_clean,
            eval_ci: ci,
            eval_ci01: ci01,
            eval_failure_prob: fail,
            solver_tol: clean.solver_tolerance.max(noisy.solver_tolerance),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }
}
