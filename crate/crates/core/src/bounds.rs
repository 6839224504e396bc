//! Closed-form risk bounds.
//!
//! The uniform-deviation envelope `G_δ(n)` comes in three settings (linear
//! ball, RKHS ball, finite class). Upper bounds combine it with the
//! label-gap constant `C` and the noise bound `ρ`; lower bounds depend on
//! `ρ` alone. All logarithms are natural.

use std::fmt;
use std::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn lit<T: Float>(v: f64) -> T {
    T::from(v).expect("representable constant")
}

/// `2·L·X*·W*·√(1/n) + L·X*·W*·√(ln(1/δ)/(2n))`.
pub fn g_delta_linear<T: Float>(lipschitz: T, feature_radius: T, weight_radius: T, n: T, delta: T) -> T {
    let s = lipschitz * feature_radius * weight_radius;
    lit::<T>(2.0) * s * (T::one() / n).sqrt() + s * ((T::one() / delta).ln() / (lit::<T>(2.0) * n)).sqrt()
}

/// `2·L·R·M·(√(1/n) + √(ln(2/δ)/(2n)))`.
pub fn g_delta_rkhs<T: Float>(lipschitz: T, kernel_radius: T, norm_bound: T, n: T, delta: T) -> T {
    let two = lit::<T>(2.0);
    two * lipschitz * kernel_radius * norm_bound
        * ((T::one() / n).sqrt() + ((two / delta).ln() / (two * n)).sqrt())
}

/// Hoeffding plus a union bound over `2^k` sign tables, for a loss with
/// range 1: `√((k·ln 2 + ln(2/δ)) / (2n))`.
pub fn g_delta_finite<T: Float>(domain_size: T, n: T, delta: T) -> T {
    let two = lit::<T>(2.0);
    ((domain_size * two.ln() + (two / delta).ln()) / (two * n)).sqrt()
}

/// Worst-case shift between clean and noisy risk: `3Cρ/2`.
pub fn risk_shift<T: Float>(c: T, rho: T) -> T {
    lit::<T>(1.5) * c * rho
}

/// Risk gap between noisy and clean ERM: `3Cρ + 2G`.
pub fn risk_gap<T: Float>(c: T, rho: T, g: T) -> T {
    lit::<T>(3.0) * c * rho + lit::<T>(2.0) * g
}

/// Excess risk of noisy ERM: `3Cρ + 4G`.
pub fn excess_risk<T: Float>(c: T, rho: T, g: T) -> T {
    lit::<T>(3.0) * c * rho + lit::<T>(4.0) * g
}

/// Published linear-ball risk-gap bound:
/// `2LX*W*(3ρ + 2√(1/n) + √(2 ln(1/δ)/n))`.
pub fn risk_gap_linear_published<T: Float>(l: T, x: T, w: T, rho: T, n: T, delta: T) -> T {
    let two = lit::<T>(2.0);
    two * l * x * w
        * (lit::<T>(3.0) * rho + two * (T::one() / n).sqrt() + (two * (T::one() / delta).ln() / n).sqrt())
}

/// Published RKHS-ball risk-gap bound:
/// `2LRM(3ρ + 2√(1/n) + √(ln(2/δ)/(2n)))`.
pub fn risk_gap_rkhs_published<T: Float>(l: T, r: T, m: T, rho: T, n: T, delta: T) -> T {
    let two = lit::<T>(2.0);
    two * l * r * m
        * (lit::<T>(3.0) * rho + two * (T::one() / n).sqrt() + ((two / delta).ln() / (two * n)).sqrt())
}

/// Minimax lower bound on the excess 0-1 risk: `ρ/16`.
pub fn minimax_lower<T: Float>(rho: T) -> T {
    rho / lit::<T>(16.0)
}

/// Lower bound on the two-sided excess-risk sum of the construction: `ρ/8`.
pub fn two_point_lower<T: Float>(rho: T) -> T {
    rho / lit::<T>(8.0)
}

/// Setting for the deviation envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "snake_case")]
pub enum GSetting {
    Linear {
        lipschitz: f64,
        feature_radius: f64,
        weight_radius: f64,
    },
    Rkhs {
        lipschitz: f64,
        kernel_radius: f64,
        norm_bound: f64,
    },
    Finite { domain_size: usize },
}

pub fn g_delta(setting: &GSetting, n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    check_delta(delta)?;
    let nf = n as f64;
    let positive = |v: f64, name: &str| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("{name} must be positive, got {v}")))
        }
    };
    match *setting {
        GSetting::Linear {
            lipschitz,
            feature_radius,
            weight_radius,
        } => {
            positive(lipschitz, "L")?;
            positive(feature_radius, "X*")?;
            positive(weight_radius, "W*")?;
            Ok(g_delta_linear(lipschitz, feature_radius, weight_radius, nf, delta))
        }
        GSetting::Rkhs {
            lipschitz,
            kernel_radius,
            norm_bound,
        } => {
            positive(lipschitz, "L")?;
            positive(kernel_radius, "R")?;
            positive(norm_bound, "M")?;
            Ok(g_delta_rkhs(lipschitz, kernel_radius, norm_bound, nf, delta))
        }
        GSetting::Finite { domain_size } => Ok(g_delta_finite(domain_size as f64, nf, delta)),
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta = {delta} outside (0, 1]")))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::invalid(format!("rho = {rho} outside [0, 1)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    #[serde(rename = "lemma2")]
    RiskShift,
    #[serde(rename = "theorem1")]
    RiskGap,
    #[serde(rename = "corollary1")]
    ExcessRisk,
    #[serde(rename = "prop_linear")]
    LinearRiskGap,
    #[serde(rename = "prop_rkhs")]
    RkhsRiskGap,
    #[serde(rename = "theorem2_lower")]
    MinimaxLower,
    #[serde(rename = "lemma6_lower")]
    TwoPointLower,
}

impl BoundKind {
    pub const ALL: [BoundKind; 7] = [
        BoundKind::RiskShift,
        BoundKind::RiskGap,
        BoundKind::ExcessRisk,
        BoundKind::LinearRiskGap,
        BoundKind::RkhsRiskGap,
        BoundKind::MinimaxLower,
        BoundKind::TwoPointLower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::RiskShift => "lemma2",
            BoundKind::RiskGap => "theorem1",
            BoundKind::ExcessRisk => "corollary1",
            BoundKind::LinearRiskGap => "prop_linear",
            BoundKind::RkhsRiskGap => "prop_rkhs",
            BoundKind::MinimaxLower => "theorem2_lower",
            BoundKind::TwoPointLower => "lemma6_lower",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown bound kind `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl BoundInputs {
    fn need<T: Copy>(v: Option<T>, name: &'static str) -> Result<T> {
        v.ok_or(Error::MissingInput(name))
    }

    fn linear(&self) -> Result<(f64, f64, f64)> {
        Ok((
            Self::need(self.lipschitz, "lipschitz")?,
            Self::need(self.feature_radius, "feature_radius")?,
            Self::need(self.weight_radius, "weight_radius")?,
        ))
    }

    fn rkhs(&self) -> Result<(f64, f64, f64)> {
        Ok((
            Self::need(self.lipschitz, "lipschitz")?,
            Self::need(self.kernel_radius.or(Some(1.0)), "kernel_radius")?,
            Self::need(self.norm_bound, "norm_bound")?,
        ))
    }

    /// `G` as given, or derived from a linear / RKHS setting plus `n`, `δ`.
    pub fn resolve_g(&self) -> Result<f64> {
        if let Some(g) = self.g {
            return Ok(g);
        }
        let n = Self::need(self.n, "g (or n)")?;
        let delta = Self::need(self.delta, "g (or delta)")?;
        let setting = if let Ok((lipschitz, feature_radius, weight_radius)) = self.linear() {
            GSetting::Linear {
                lipschitz,
                feature_radius,
                weight_radius,
            }
        } else if let Ok((lipschitz, kernel_radius, norm_bound)) = self.rkhs() {
            GSetting::Rkhs {
                lipschitz,
                kernel_radius,
                norm_bound,
            }
        } else {
            return Err(Error::MissingInput("g (or a linear / rkhs setting)"));
        };
        g_delta(&setting, n, delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub inputs: BoundInputs,
    pub value: f64,
    /// Probability with which the bound holds; `None` when `δ` was not given.
    pub confidence: Option<f64>,
    /// For the published linear / RKHS forms: `3Cρ + 2G` with `C` and `G`
    /// from the same setting.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substituted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub published_over_substituted: Option<f64>,
}

pub fn bound(kind: BoundKind, inputs: &BoundInputs) -> Result<BoundReport> {
    let rho = BoundInputs::need(inputs.rho, "rho")?;
    check_rho(rho)?;
    if let Some(d) = inputs.delta {
        check_delta(d)?;
    }
    let with_delta = |k: f64| inputs.delta.map(|d| (1.0 - k * d).max(0.0));
    let mut substituted = None;
    let (value, confidence) = match kind {
        BoundKind::RiskShift => (risk_shift(BoundInputs::need(inputs.c, "c")?, rho), Some(1.0)),
        BoundKind::RiskGap => (
            risk_gap(BoundInputs::need(inputs.c, "c")?, rho, inputs.resolve_g()?),
            with_delta(2.0),
        ),
        BoundKind::ExcessRisk => (
            excess_risk(BoundInputs::need(inputs.c, "c")?, rho, inputs.resolve_g()?),
            with_delta(4.0),
        ),
        BoundKind::LinearRiskGap => {
            let (l, x, w) = inputs.linear()?;
            let n = BoundInputs::need(inputs.n, "n")? as f64;
            let d = BoundInputs::need(inputs.delta, "delta")?;
            substituted = Some(risk_gap(2.0 * l * x * w, rho, g_delta_linear(l, x, w, n, d)));
            (risk_gap_linear_published(l, x, w, rho, n, d), with_delta(4.0))
        }
        BoundKind::RkhsRiskGap => {
            let (l, r, m) = inputs.rkhs()?;
            let n = BoundInputs::need(inputs.n, "n")? as f64;
            let d = BoundInputs::need(inputs.delta, "delta")?;
            substituted = Some(risk_gap(2.0 * l * r * m, rho, g_delta_rkhs(l, r, m, n, d)));
            (risk_gap_rkhs_published(l, r, m, rho, n, d), with_delta(4.0))
        }
        BoundKind::MinimaxLower => (minimax_lower(rho), Some(1.0)),
        BoundKind::TwoPointLower => (two_point_lower(rho), Some(1.0)),
    };
    if !(value >= 0.0) {
        return Err(Error::invalid(format!("{kind} evaluated to {value}")));
    }
    Ok(BoundReport {
        kind,
        inputs: inputs.clone(),
        value,
        confidence,
        substituted,
        published_over_substituted: substituted.filter(|s| *s > 0.0).map(|s| value / s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_linear() -> GSetting {
        GSetting::Linear {
            lipschitz: 1.0,
            feature_radius: 1.0,
            weight_radius: 1.0,
        }
    }

    #[test]
    fn envelope_values() {
        // 0.2 + sqrt(ln 20 / 200)
        let g = g_delta(&unit_linear(), 100, 0.05).unwrap();
        assert!((g - (0.2 + (20f64.ln() / 200.0).sqrt())).abs() < 1e-15);
        assert!((g - 0.32239).abs() < 1e-4);
        let rk = GSetting::Rkhs {
            lipschitz: 1.0,
            kernel_radius: 1.0,
            norm_bound: 1.0,
        };
        let g = g_delta(&rk, 400, 0.05).unwrap();
        assert!((g - 0.23581).abs() < 1e-4);
        let first = |n: f64| 2.0 / n.sqrt();
        assert!((first(400.0) - 0.1).abs() < 1e-15);
        assert!((g_delta_linear(1.0f32, 1.0, 1.0, 100.0, 0.05) - 0.32239).abs() < 1e-4);
    }

    #[test]
    fn golden_bounds() {
        let inp = BoundInputs {
            c: Some(2.0),
            rho: Some(0.1),
            g: Some(0.32239),
            ..Default::default()
        };
        let r = bound(BoundKind::RiskGap, &inp).unwrap();
        assert!((r.value - 1.24478).abs() < 1e-12);
        assert_eq!(r.confidence, None);

        let inp = BoundInputs {
            rho: Some(0.1),
            lipschitz: Some(1.0),
            feature_radius: Some(1.0),
            weight_radius: Some(1.0),
            n: Some(100),
            delta: Some(0.05),
            ..Default::default()
        };
        let r = bound(BoundKind::LinearRiskGap, &inp).unwrap();
        assert!((r.value - 1.48957).abs() < 1e-4);
        assert!((r.confidence.unwrap() - 0.8).abs() < 1e-15);
        assert!(r.substituted.unwrap() <= r.value);

        let lower = bound(BoundKind::MinimaxLower, &BoundInputs { rho: Some(0.4), ..Default::default() }).unwrap();
        assert_eq!(lower.value, 0.025);
        let two = bound(BoundKind::TwoPointLower, &BoundInputs { rho: Some(0.4), ..Default::default() }).unwrap();
        assert_eq!(two.value, 2.0 * lower.value);
    }

    #[test]
    fn zero_noise_zero_envelope() {
        let inp = BoundInputs {
            c: Some(3.0),
            rho: Some(0.0),
            g: Some(0.0),
            ..Default::default()
        };
        for k in [
            BoundKind::RiskShift,
            BoundKind::RiskGap,
            BoundKind::ExcessRisk,
            BoundKind::MinimaxLower,
        ] {
            assert_eq!(bound(k, &inp).unwrap().value, 0.0);
        }
    }

    #[test]
    fn missing_and_invalid_inputs() {
        assert!(matches!(
            bound(BoundKind::RiskGap, &BoundInputs { rho: Some(0.1), ..Default::default() }),
            Err(Error::MissingInput("c"))
        ));
        assert!(bound(BoundKind::MinimaxLower, &BoundInputs { rho: Some(1.0), ..Default::default() }).is_err());
        assert!(bound(BoundKind::MinimaxLower, &BoundInputs::default()).is_err());
        assert!(g_delta(&unit_linear(), 0, 0.05).is_err());
        assert!(g_delta(&unit_linear(), 10, 0.0).is_err());
    }

    #[test]
    fn g_resolved_from_setting() {
        let inp = BoundInputs {
            c: Some(2.0),
            rho: Some(0.1),
            lipschitz: Some(1.0),
            feature_radius: Some(1.0),
            weight_radius: Some(1.0),
            n: Some(100),
            delta: Some(0.05),
            ..Default::default()
        };
        let r = bound(BoundKind::RiskGap, &inp).unwrap();
        let g = g_delta(&unit_linear(), 100, 0.05).unwrap();
        assert!((r.value - (0.6 + 2.0 * g)).abs() < 1e-15);
        assert!((r.confidence.unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn names_round_trip() {
        for k in BoundKind::ALL {
            assert_eq!(k.name().parse::<BoundKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
    }

    proptest! {
        #[test]
        fn dominance_chain(c in 0.0f64..10.0, rho in 0.0f64..0.999, g in 0.0f64..5.0) {
            prop_assert!(excess_risk(c, rho, g) >= risk_gap(c, rho, g));
            prop_assert!(risk_gap(c, rho, g) >= risk_shift(c, rho));
        }

        #[test]
        fn substituted_linear_never_exceeds_published(
            l in 0.1f64..3.0, x in 0.1f64..3.0, w in 0.1f64..3.0,
            rho in 0.0f64..0.999, n in 1usize..100_000, delta in 0.001f64..1.0,
        ) {
            let nf = n as f64;
            let c = 2.0 * l * x * w;
            let sub = risk_gap(c, rho, g_delta_linear(l, x, w, nf, delta));
            prop_assert!(sub <= risk_gap_linear_published(l, x, w, rho, nf, delta) * (1.0 + 1e-12));
        }

        #[test]
        fn monotone_in_rho(c in 0.0f64..10.0, g in 0.0f64..5.0, a in 0.0f64..0.999, b in 0.0f64..0.999) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(risk_shift(c, lo) <= risk_shift(c, hi));
            prop_assert!(risk_gap(c, lo, g) <= risk_gap(c, hi, g));
            prop_assert!(excess_risk(c, lo, g) <= excess_risk(c, hi, g));
            prop_assert!(minimax_lower(lo) <= minimax_lower(hi));
            prop_assert!(two_point_lower(hi) == 2.0 * minimax_lower(hi));
        }

        #[test]
        fn envelope_decreasing_in_n_and_delta(n in 1usize..1_000_000, d1 in 0.001f64..1.0, d2 in 0.001f64..1.0) {
            for s in [unit_linear(), GSetting::Rkhs { lipschitz: 1.0, kernel_radius: 1.0, norm_bound: 2.0 }, GSetting::Finite { domain_size: 3 }] {
                prop_assert!(g_delta(&s, n + 1, d1).unwrap() < g_delta(&s, n, d1).unwrap());
                let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
                prop_assert!(g_delta(&s, n, hi).unwrap() <= g_delta(&s, n, lo).unwrap());
            }
        }
    }
}
