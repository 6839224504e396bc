//! Checkers for the distributional assumptions: bounded noise sum, margin
//! condition, anchor points.

use serde::Serialize;

use super::{FiniteDistribution, NoiseModel};
use crate::error::{Error, Result};

pub const DEFAULT_ANCHOR_TOL: f64 = 1e-9;

/// Where to evaluate the noise functions.
#[derive(Debug, Clone, Copy)]
pub enum NoiseProbe<'a> {
    /// Mass-weighted support of a finite law.
    Support(&'a FiniteDistribution),
    /// Equally weighted sample points.
    Points(&'a [Vec<f64>]),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseBoundReport {
    pub max_sum: f64,
    pub mean_sum: f64,
    pub ok: bool,
}

pub fn check_noise_bound(noise: &NoiseModel, probe: NoiseProbe<'_>) -> Result<NoiseBoundReport> {
    let (points, weights): (&[Vec<f64>], Option<&[f64]>) = match probe {
        NoiseProbe::Support(d) => (d.points(), Some(d.mass())),
        NoiseProbe::Points(p) => (p, None),
    };
    if points.is_empty() {
        return Err(Error::invalid("noise probe is empty"));
    }
    let mut max_sum: f64 = 0.0;
    let mut mean_sum = 0.0;
    for (i, x) in points.iter().enumerate() {
        let (p, m) = noise.rates(x)?;
        let s = p + m;
        max_sum = max_sum.max(s);
        mean_sum += match weights {
            Some(w) => w[i] * s,
            None => s,
        };
    }
    if weights.is_none() {
        mean_sum /= points.len() as f64;
    }
    Ok(NoiseBoundReport {
        max_sum,
        mean_sum,
        ok: max_sum <= noise.rho_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub ok: bool,
    /// Step point with the least slack `C_α ξ^α − P(0 < |η − ½| ≤ ξ)`;
    /// `None` when no point has `0 < |η − ½|`.
    pub worst_xi: Option<f64>,
    pub worst_slack: f64,
}

/// Checks `P(0 < |η − ½| < ξ) ≤ C_α ξ^α` for `ξ ∈ (0, ½]`.
///
/// Deterministic points (`|η − ½| = ½`) never enter the left side, so a law
/// with `η ∈ {0, 1}` passes for every `(α, C_α)`.
///
/// The left side is a step function that jumps right after each distinct
/// value `v` of `|η − ½|`, and the right side is non-decreasing, so it is
/// enough to test the right-limits `P(0 < |η − ½| ≤ v) ≤ C_α v^α`.
pub fn check_margin(dist: &FiniteDistribution, alpha: f64, c_alpha: f64) -> Result<MarginReport> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha = {alpha} must be in [0, inf)")));
    }
    if !(c_alpha >= 1.0 && c_alpha.is_finite()) {
        return Err(Error::invalid(format!("C_alpha = {c_alpha} must be in [1, inf)")));
    }
    let mut gaps: Vec<(f64, f64)> = dist
        .posterior()
        .iter()
        .zip(dist.mass())
        .map(|(e, m)| ((e - 0.5).abs(), *m))
        .filter(|(g, _)| *g > 0.0 && *g < 0.5)
        .collect();
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut report = MarginReport {
        ok: true,
        worst_xi: None,
        worst_slack: f64::INFINITY,
    };
    let mut cum = 0.0;
    let mut i = 0;
    while i < gaps.len() {
        let v = gaps[i].0;
        while i < gaps.len() && gaps[i].0 == v {
            cum += gaps[i].1;
            i += 1;
        }
        let slack = c_alpha * v.powf(alpha) - cum;
        if slack < report.worst_slack {
            report.worst_slack = slack;
            report.worst_xi = Some(v);
        }
    }
    report.ok = report.worst_slack >= 0.0;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnchorReport {
    pub has_pos_anchor: bool,
    pub has_neg_anchor: bool,
}

pub fn check_anchor(dist: &FiniteDistribution, tol: f64) -> AnchorReport {
    let with_mass = || {
        dist.posterior()
            .iter()
            .zip(dist.mass())
            .filter(|(_, m)| **m > 0.0)
            .map(|(e, _)| *e)
    };
    AnchorReport {
        has_pos_anchor: with_mass().any(|e| e >= 1.0 - tol),
        has_neg_anchor: with_mass().any(|e| e <= tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::NoiseFn;

    fn line(masses: &[f64], etas: &[f64]) -> FiniteDistribution {
        let pts = (0..masses.len()).map(|i| vec![i as f64]).collect();
        FiniteDistribution::new(pts, masses.to_vec(), etas.to_vec()).unwrap()
    }

    #[test]
    fn rcn_sum_is_twice_rate() {
        let d = line(&[0.5, 0.5], &[0.2, 0.9]);
        let noise = NoiseModel::rcn(0.2).unwrap();
        let r = check_noise_bound(&noise, NoiseProbe::Support(&d)).unwrap();
        assert!((r.max_sum - 0.4).abs() < 1e-15);
        assert!((r.mean_sum - 0.4).abs() < 1e-15);
        assert!(r.ok);
        let tight = noise.with_bound(0.39).unwrap();
        assert!(!check_noise_bound(&tight, NoiseProbe::Support(&d)).unwrap().ok);
    }

    #[test]
    fn logistic_family_respects_bound() {
        let f = |w: f64| NoiseFn::Logistic {
            scale: 0.15,
            weights: vec![w, -w],
            bias: 0.3,
        };
        let noise = NoiseModel::iln(f(2.0), f(-1.0)).unwrap();
        assert!((noise.rho_bound - 0.3).abs() < 1e-15);
        let pts: Vec<Vec<f64>> = (0..10_000)
            .map(|i| {
                let t = i as f64 * 0.01;
                vec![t.sin() * 3.0, t.cos() * 5.0]
            })
            .collect();
        let r = check_noise_bound(&noise, NoiseProbe::Points(&pts)).unwrap();
        assert!(r.ok);
        assert!(r.max_sum < 0.3);
    }

    #[test]
    fn empty_probe_rejected() {
        let noise = NoiseModel::none();
        assert!(check_noise_bound(&noise, NoiseProbe::Points(&[])).is_err());
    }

    #[test]
    fn deterministic_posteriors_always_satisfy_margin() {
        let d = line(&[0.3, 0.7], &[0.0, 1.0]);
        for (a, c) in [(0.0, 1.0), (1.0, 1.0), (5.0, 2.0)] {
            assert!(check_margin(&d, a, c).unwrap().ok);
        }
    }

    #[test]
    fn margin_fails_just_above_step() {
        // LHS jumps to 0.5 right after ξ = 0.1 while ξ^1 ≈ 0.1
        let d = line(&[0.5, 0.5], &[0.6, 0.9]);
        let r = check_margin(&d, 1.0, 1.0).unwrap();
        assert!(!r.ok);
        // slack -0.4 at 0.1, -0.6 at 0.4
        assert!((r.worst_xi.unwrap() - 0.4).abs() < 1e-12);
        let only_first = line(&[0.5, 0.5], &[0.6, 1.0]);
        let r = check_margin(&only_first, 1.0, 1.0).unwrap();
        assert!(!r.ok);
        assert!((r.worst_xi.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn margin_alpha_zero_accepts_any_law() {
        let d = line(&[0.125, 0.75, 0.125], &[1.0, 0.625, 0.0]);
        let r = check_margin(&d, 0.0, 1.0).unwrap();
        assert!(r.ok);
        assert!((r.worst_slack - 0.25).abs() < 1e-15);
    }

    #[test]
    fn anchors() {
        let d = line(&[0.3, 0.7], &[1.0, 0.4]);
        let r = check_anchor(&d, DEFAULT_ANCHOR_TOL);
        assert!(r.has_pos_anchor && !r.has_neg_anchor);
        let flat = line(&[0.5, 0.5], &[0.5, 0.5]);
        let r = check_anchor(&flat, DEFAULT_ANCHOR_TOL);
        assert!(!r.has_pos_anchor && !r.has_neg_anchor);
    }
}
