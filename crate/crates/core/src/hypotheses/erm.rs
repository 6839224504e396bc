use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{rbf, Hypothesis, HypothesisSpace};
use crate::distributions::{dot, Dataset, Label};
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::LabelChannel;

/// Projected subgradient descent with step `c/√t` and uniform averaging of
/// the iterates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub iterations: usize,
    /// Step constant `c`; defaults to the ball radius (`W*` or `M`).
    pub step: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            iterations: 2000,
            step: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("solver needs at least one iteration"));
        }
        if let Some(c) = self.step {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("step constant must be positive, got {c}")));
            }
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        crate::digest(self)
    }
}

/// Convex ERM over a linear or RKHS ball on the chosen label channel.
pub fn erm_convex(
    data: &Dataset,
    channel: LabelChannel,
    space: &HypothesisSpace,
    loss: LossKind,
    cfg: &SolverConfig,
) -> Result<Hypothesis> {
    if !loss.is_convex() {
        return Err(Error::NonConvexLoss(loss.name()));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;
    space.validate()?;
    let labels = data.labels(channel);
    let mut h = match space {
        HypothesisSpace::LinearBall {
            dim,
            feature_radius,
            weight_radius,
        } => {
            if *dim != data.dim() {
                return Err(Error::DimensionMismatch {
                    expected: *dim,
                    got: data.dim(),
                });
            }
            for i in 0..data.len() {
                let r = dot(data.x(i), data.x(i)).sqrt();
                if r > feature_radius * (1.0 + 1e-12) {
                    return Err(Error::invalid(format!(
                        "row {i} has norm {r} outside the feature ball of radius {feature_radius}"
                    )));
                }
            }
            let step = cfg.step.unwrap_or(*weight_radius);
            let (w, tol) = linear_psgd(data, labels, loss, *weight_radius, step, cfg.iterations);
            let mut h = Hypothesis::linear(space.clone(), w)?;
            h.solver_tolerance = tol;
            h
        }
        HypothesisSpace::RkhsBall {
            bandwidth,
            norm_bound,
        } => {
            let step = cfg.step.unwrap_or(*norm_bound);
            let (alpha, tol) = kernel_psgd(data, labels, loss, *bandwidth, *norm_bound, step, cfg.iterations);
            let anchors = (0..data.len()).map(|i| data.x(i).to_vec()).collect();
            let mut h = Hypothesis::kernel(space.clone(), anchors, alpha)?;
            h.solver_tolerance = tol;
            h
        }
        HypothesisSpace::FiniteSign { .. } => {
            return Err(Error::invalid(
                "convex ERM needs a linear_ball or rkhs_ball space",
            ))
        }
    };
    h.solver_digest = Some(cfg.digest());
    Ok(h)
}

fn project_ball(w: &mut [f64], radius: f64) {
    let norm = dot(w, w).sqrt();
    if norm > radius {
        let s = radius / norm;
        w.iter_mut().for_each(|v| *v *= s);
    }
}

fn linear_gradient(data: &Dataset, labels: &[Label], loss: LossKind, w: &[f64], grad: &mut [f64]) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    for (i, y) in labels.iter().enumerate() {
        let x = data.x(i);
        let yv = y.value();
        let d = loss.margin_derivative(yv * dot(w, x)) * yv;
        if d != 0.0 {
            for (g, xj) in grad.iter_mut().zip(x) {
                *g += d * xj;
            }
        }
    }
    let inv = 1.0 / labels.len() as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
}

/// Certified suboptimality on the ball: `⟨g, w⟩ + W*‖g‖ ≥ R_n(w) − min R_n`.
pub fn frank_wolfe_gap_linear(
    data: &Dataset,
    channel: LabelChannel,
    loss: LossKind,
    weights: &[f64],
    radius: f64,
) -> f64 {
    let mut g = vec![0.0; weights.len()];
    linear_gradient(data, data.labels(channel), loss, weights, &mut g);
    (dot(&g, weights) + radius * dot(&g, &g).sqrt()).max(0.0)
}

fn linear_psgd(
    data: &Dataset,
    labels: &[Label],
    loss: LossKind,
    radius: f64,
    step: f64,
    iterations: usize,
) -> (Vec<f64>, f64) {
    let d = data.dim();
    let mut w = vec![0.0; d];
    let mut avg = vec![0.0; d];
    let mut g = vec![0.0; d];
    for t in 1..=iterations {
        linear_gradient(data, labels, loss, &w, &mut g);
        let eta = step / (t as f64).sqrt();
        for (wj, gj) in w.iter_mut().zip(&g) {
            *wj -= eta * gj;
        }
        project_ball(&mut w, radius);
        for (a, wj) in avg.iter_mut().zip(&w) {
            *a += wj;
        }
    }
    let inv = 1.0 / iterations as f64;
    avg.iter_mut().for_each(|a| *a *= inv);
    linear_gradient(data, labels, loss, &avg, &mut g);
    let gap = (dot(&g, &avg) + radius * dot(&g, &g).sqrt()).max(0.0);
    (avg, gap)
}

fn kernel_psgd(
    data: &Dataset,
    labels: &[Label],
    loss: LossKind,
    bandwidth: f64,
    radius: f64,
    step: f64,
    iterations: usize,
) -> (Vec<f64>, f64) {
    let n = data.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let k = rbf(data.x(i), data.x(j), bandwidth);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }
    let gram_times = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            out[i] = dot(&gram[i * n..(i + 1) * n], v);
        }
    };
    let ys: Vec<f64> = labels.iter().map(|y| y.value()).collect();
    let inv_n = 1.0 / n as f64;
    let coef_grad = |f: &[f64], beta: &mut [f64]| {
        for i in 0..n {
            beta[i] = loss.margin_derivative(ys[i] * f[i]) * ys[i] * inv_n;
        }
    };

    let mut alpha = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut avg = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut kbeta = vec![0.0; n];
    for t in 1..=iterations {
        coef_grad(&f, &mut beta);
        gram_times(&beta, &mut kbeta);
        let eta = step / (t as f64).sqrt();
        for i in 0..n {
            alpha[i] -= eta * beta[i];
            f[i] -= eta * kbeta[i];
        }
        let norm2 = dot(&alpha, &f).max(0.0);
        if norm2 > radius * radius {
            let s = radius / norm2.sqrt();
            alpha.iter_mut().for_each(|a| *a *= s);
            f.iter_mut().for_each(|v| *v *= s);
        }
        for (a, v) in avg.iter_mut().zip(&alpha) {
            *a += v;
        }
    }
    let inv = 1.0 / iterations as f64;
    avg.iter_mut().for_each(|a| *a *= inv);

    gram_times(&avg, &mut f);
    // rounding can leave the average a hair outside the ball
    let norm2 = dot(&avg, &f).max(0.0);
    if norm2 > radius * radius {
        let s = radius / norm2.sqrt();
        avg.iter_mut().for_each(|a| *a *= s);
        f.iter_mut().for_each(|v| *v *= s);
    }
    coef_grad(&f, &mut beta);
    gram_times(&beta, &mut kbeta);
    let gap = (dot(&beta, &f) + radius * dot(&beta, &kbeta).max(0.0).sqrt()).max(0.0);
    (avg, gap)
}

fn point_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Exact 0-1 ERM over all sign tables of `domain`: per-point majority vote
/// on the chosen channel, ties (including unseen points) to `+1`.
pub fn erm_zero_one_finite(data: &Dataset, channel: LabelChannel, domain: &[Vec<f64>]) -> Result<Hypothesis> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let index: HashMap<Vec<u64>, usize> = domain.iter().enumerate().map(|(i, p)| (point_key(p), i)).collect();
    let mut votes = vec![0i64; domain.len()];
    for (i, y) in data.labels(channel).iter().enumerate() {
        let x = data.x(i);
        let k = *index
            .get(&point_key(x))
            .ok_or_else(|| Error::UnknownPoint(x.to_vec()))?;
        votes[k] += y.as_i8() as i64;
    }
    let signs = votes
        .iter()
        .map(|v| if *v >= 0 { Label::Pos } else { Label::Neg })
        .collect();
    Hypothesis::sign_table(HypothesisSpace::finite_sign(domain.to_vec())?, signs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypotheses::HypothesisParams;
    use crate::distributions::{sample_dataset, ClassDistribution, NoiseModel, SyntheticDistribution};
    use crate::losses::LossKind;
    use crate::risk::empirical_risk;
    use rand::{Rng, SeedableRng};

    fn toy(rows: &[(f64, i64)]) -> Dataset {
        let labels: Vec<Label> = rows.iter().map(|r| Label::from_i64(r.1).unwrap()).collect();
        Dataset::from_rows(1, rows.iter().map(|r| r.0).collect(), labels.clone(), labels, 0, String::new()).unwrap()
    }

    fn synthetic() -> ClassDistribution {
        SyntheticDistribution::new(
            vec![vec![0.4, 0.2], vec![-0.3, -0.1]],
            vec![0.15, 0.1],
            vec![0.6, 0.4],
            1.0,
            vec![4.0, 1.5],
            0.3,
        )
        .unwrap()
        .into()
    }

    fn grid_min(data: &Dataset, loss: LossKind, radius: f64, step: f64) -> f64 {
        let mut best = f64::INFINITY;
        let k = (radius / step).round() as i64;
        for i in -k..=k {
            for j in -k..=k {
                let w = [i as f64 * step, j as f64 * step];
                if dot(&w, &w).sqrt() > radius + 1e-12 {
                    continue;
                }
                let mut r = 0.0;
                for (r_i, y) in data.clean_labels().iter().enumerate() {
                    r += loss.eval(dot(&w, data.x(r_i)), *y);
                }
                best = best.min(r / data.len() as f64);
            }
        }
        best
    }

    #[test]
    fn hinge_toy_hits_boundary() {
        // grid search over [-1, 1] at 1e-4 puts the minimizer at w = 1
        let data = toy(&[(1.0, 1), (1.0, 1), (-1.0, -1)]);
        let mut best = (f64::INFINITY, 0.0);
        for k in -10_000..=10_000 {
            let w = k as f64 * 1e-4;
            let r: f64 = (0..3)
                .map(|i| LossKind::Hinge.eval(w * data.x(i)[0], data.clean_labels()[i]))
                .sum::<f64>()
                / 3.0;
            if r < best.0 {
                best = (r, w);
            }
        }
        assert_eq!(best.1, 1.0);
        let space = HypothesisSpace::linear_ball(1, 1.0, 1.0).unwrap();
        let h = erm_convex(&data, LabelChannel::Clean, &space, LossKind::Hinge, &SolverConfig::default()).unwrap();
        let HypothesisParams::Linear { weights } = &h.params else { panic!() };
        assert!((weights[0] - best.1).abs() < 1e-4);
    }

    #[test]
    fn rejects_empty_zero_one_and_dimension_mismatch() {
        let empty = Dataset::from_rows(1, vec![], vec![], vec![], 0, String::new()).unwrap();
        let space = HypothesisSpace::linear_ball(1, 1.0, 1.0).unwrap();
        let cfg = SolverConfig::default();
        assert!(matches!(
            erm_convex(&empty, LabelChannel::Clean, &space, LossKind::Hinge, &cfg),
            Err(Error::EmptyDataset)
        ));
        let data = toy(&[(0.5, 1)]);
        assert!(matches!(
            erm_convex(&data, LabelChannel::Clean, &space, LossKind::ZeroOne, &cfg),
            Err(Error::NonConvexLoss(_))
        ));
        let wide = HypothesisSpace::linear_ball(2, 1.0, 1.0).unwrap();
        assert!(matches!(
            erm_convex(&data, LabelChannel::Clean, &wide, LossKind::Hinge, &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_noise_channels_agree_bitwise() {
        let data = sample_dataset(&synthetic(), &NoiseModel::rcn(0.0).unwrap(), 1000, 4).unwrap();
        let space = HypothesisSpace::linear_ball(2, 1.0, 1.0).unwrap();
        let cfg = SolverConfig::default();
        let a = erm_convex(&data, LabelChannel::Clean, &space, LossKind::Logistic, &cfg).unwrap();
        let b = erm_convex(&data, LabelChannel::Noisy, &space, LossKind::Logistic, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn matches_grid_search_in_two_dimensions() {
        for (seed, loss, radius) in [
            (1, LossKind::Logistic, 1.0),
            (2, LossKind::Hinge, 1.0),
            (3, LossKind::Logistic, 3.0),
            (4, LossKind::SquaredMargin, 0.5),
        ] {
            let data = sample_dataset(&synthetic(), &NoiseModel::rcn(0.1).unwrap(), 300, seed).unwrap();
            let space = HypothesisSpace::linear_ball(2, 1.0, radius).unwrap();
            let h = erm_convex(&data, LabelChannel::Clean, &space, loss, &SolverConfig::default()).unwrap();
            let got = empirical_risk(&h, &data, loss, LabelChannel::Clean).unwrap();
            let oracle = grid_min(&data, loss, radius, radius / 200.0);
            assert!(got <= oracle + 1e-3, "{loss} seed {seed}: solver {got} vs grid {oracle}");
            assert!(h.norm().unwrap() <= radius + 1e-9);
            assert!(h.solver_tolerance < 0.05, "tolerance {}", h.solver_tolerance);
        }
    }

    #[test]
    fn noisy_estimator_beats_random_probes() {
        let data = sample_dataset(&synthetic(), &NoiseModel::rcn(0.15).unwrap(), 500, 9).unwrap();
        let space = HypothesisSpace::linear_ball(2, 1.0, 1.0).unwrap();
        let h = erm_convex(&data, LabelChannel::Noisy, &space, LossKind::Logistic, &SolverConfig::default()).unwrap();
        let own = empirical_risk(&h, &data, LossKind::Logistic, LabelChannel::Noisy).unwrap();
        let mut rng = rand::rngs::SmallRng::seed_from_u64(5);
        for _ in 0..100 {
            let mut w = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            project_ball(&mut w, 1.0);
            let probe = Hypothesis::linear(space.clone(), w.to_vec()).unwrap();
            let r = empirical_risk(&probe, &data, LossKind::Logistic, LabelChannel::Noisy).unwrap();
            assert!(own <= r + 1e-3);
        }
    }

    #[test]
    fn kernel_solver_stays_in_ball_and_fits() {
        let data = sample_dataset(&synthetic(), &NoiseModel::rcn(0.0).unwrap(), 120, 6).unwrap();
        for m in [0.5, 2.0] {
            let space = HypothesisSpace::rkhs_ball(0.5, m).unwrap();
            let cfg = SolverConfig { iterations: 1500, step: None };
            let h = erm_convex(&data, LabelChannel::Clean, &space, LossKind::Logistic, &cfg).unwrap();
            assert!(h.norm().unwrap() <= m + 1e-9);
            assert!(h.solver_tolerance < 0.02, "tolerance {}", h.solver_tolerance);
            let fitted = empirical_risk(&h, &data, LossKind::Logistic, LabelChannel::Clean).unwrap();
            let zero = Hypothesis::kernel(space, vec![], vec![]).unwrap();
            let base = empirical_risk(&zero, &data, LossKind::Logistic, LabelChannel::Clean).unwrap();
            assert!(fitted < base);
        }
    }

    #[test]
    fn majority_vote_table() {
        let dom = vec![vec![0.0], vec![1.0], vec![2.0]];
        let data = toy(&[(0.0, 1), (0.0, 1), (0.0, 1), (1.0, 1), (1.0, -1), (1.0, -1), (2.0, -1), (2.0, -1)]);
        let h = erm_zero_one_finite(&data, LabelChannel::Clean, &dom).unwrap();
        let HypothesisParams::SignTable { signs } = &h.params else { panic!() };
        assert_eq!(signs, &[Label::Pos, Label::Neg, Label::Neg]);
        // brute force over all 8 tables
        let mut best = f64::INFINITY;
        for mask in 0..8u32 {
            let t: Vec<Label> = (0..3).map(|k| if mask >> k & 1 == 1 { Label::Pos } else { Label::Neg }).collect();
            let cand = Hypothesis::sign_table(h.space.clone(), t).unwrap();
            best = best.min(empirical_risk(&cand, &data, LossKind::ZeroOne, LabelChannel::Clean).unwrap());
        }
        assert_eq!(empirical_risk(&h, &data, LossKind::ZeroOne, LabelChannel::Clean).unwrap(), best);
    }

    #[test]
    fn unseen_point_defaults_positive_and_unknown_rejected() {
        let dom = vec![vec![0.0], vec![1.0]];
        let data = toy(&[(0.0, -1)]);
        let h = erm_zero_one_finite(&data, LabelChannel::Clean, &dom).unwrap();
        assert_eq!(h.classify(&[1.0]).unwrap(), Label::Pos);
        let stray = toy(&[(5.0, 1)]);
        assert!(matches!(
            erm_zero_one_finite(&stray, LabelChannel::Clean, &dom),
            Err(Error::UnknownPoint(_))
        ));
    }
}
