use serde::{Deserialize, Serialize};

use super::{dot, logistic, Label};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability that the observed label is `+1` given `η`, `ρ₊`, `ρ₋`:
/// `(1 − ρ₊)·η + ρ₋·(1 − η)`.
///
/// Rejects values outside their ranges and pairs with `ρ₊ + ρ₋ ≥ 1`.
pub fn noisy_posterior<T: Scalar>(eta: T, rho_plus: T, rho_minus: T) -> Result<T> {
    let zero = T::zero();
    let one = T::one();
    if !eta.within(&zero, &one) {
        return Err(Error::invalid(format!("eta = {eta:?} outside [0, 1]")));
    }
    if !(rho_plus >= zero && rho_plus < one) || !(rho_minus >= zero && rho_minus < one) {
        return Err(Error::invalid(format!(
            "flip rates ({rho_plus:?}, {rho_minus:?}) outside [0, 1)"
        )));
    }
    if !(rho_plus.clone() + rho_minus.clone() < one) {
        return Err(Error::NoiseBoundViolation {
            sum: (rho_plus + rho_minus).lower(),
            bound: 1.0,
        });
    }
    Ok((one.clone() - rho_plus) * eta.clone() + rho_minus * (one - eta))
}

/// One flip-probability function `x ↦ ρ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseFn {
    Constant { value: f64 },
    /// `scale · σ(w·x + bias)`; always strictly below `scale`.
    Logistic {
        scale: f64,
        weights: Vec<f64>,
        bias: f64,
    },
    /// Explicit values on a finite set of points.
    Table {
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
}

impl NoiseFn {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            NoiseFn::Constant { value } => Ok(*value),
            NoiseFn::Logistic {
                scale,
                weights,
                bias,
            } => {
                if weights.len() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: weights.len(),
                        got: x.len(),
                    });
                }
                Ok(scale * logistic(dot(weights, x) + bias))
            }
            NoiseFn::Table { points, values } => points
                .iter()
                .position(|p| p.as_slice() == x)
                .map(|i| values[i])
                .ok_or_else(|| Error::UnknownPoint(x.to_vec())),
        }
    }

    /// Upper bound on the function over its whole domain.
    pub fn sup(&self) -> f64 {
        match self {
            NoiseFn::Constant { value } => *value,
            NoiseFn::Logistic { scale, .. } => *scale,
            NoiseFn::Table { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    fn validate(&self) -> Result<()> {
        let in_range = |v: f64| (0.0..1.0).contains(&v);
        match self {
            NoiseFn::Constant { value } if !in_range(*value) => {
                Err(Error::invalid(format!("flip rate {value} outside [0, 1)")))
            }
            NoiseFn::Logistic { scale, .. } if !in_range(*scale) => {
                Err(Error::invalid(format!("logistic scale {scale} outside [0, 1)")))
            }
            NoiseFn::Table { points, values } => {
                if points.len() != values.len() {
                    return Err(Error::invalid("noise table needs one value per point"));
                }
                match values.iter().find(|v| !in_range(**v)) {
                    Some(v) => Err(Error::invalid(format!("flip rate {v} outside [0, 1)"))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    /// Same constant rate for both labels.
    Rcn,
    /// One constant rate per label.
    Ccn,
    /// One function of `x` shared by both labels.
    Pin,
    /// Two independent functions of `x`.
    Iln,
}

impl NoiseFamily {
    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Rcn => "rcn",
            NoiseFamily::Ccn => "ccn",
            NoiseFamily::Pin => "pin",
            NoiseFamily::Iln => "iln",
        }
    }
}

/// Label-noise model: flip probabilities `ρ₊(x)`, `ρ₋(x)` and a declared
/// uniform bound on their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub family: NoiseFamily,
    pub rho_plus: NoiseFn,
    pub rho_minus: NoiseFn,
    pub rho_bound: f64,
}

impl NoiseModel {
    pub fn new(
        family: NoiseFamily,
        rho_plus: NoiseFn,
        rho_minus: NoiseFn,
        rho_bound: f64,
    ) -> Result<Self> {
        rho_plus.validate()?;
        rho_minus.validate()?;
        if !(0.0..1.0).contains(&rho_bound) {
            return Err(Error::invalid(format!("rho bound {rho_bound} outside [0, 1)")));
        }
        Ok(NoiseModel {
            family,
            rho_plus,
            rho_minus,
            rho_bound,
        })
    }

    /// No noise at all.
    pub fn none() -> Self {
        NoiseModel {
            family: NoiseFamily::Rcn,
            rho_plus: NoiseFn::Constant { value: 0.0 },
            rho_minus: NoiseFn::Constant { value: 0.0 },
            rho_bound: 0.0,
        }
    }

    /// `ρ₊ = ρ₋ = rate`; declared bound `2·rate`.
    pub fn rcn(rate: f64) -> Result<Self> {
        let f = NoiseFn::Constant { value: rate };
        Self::new(NoiseFamily::Rcn, f.clone(), f, 2.0 * rate)
    }

    pub fn ccn(rho_plus: f64, rho_minus: f64) -> Result<Self> {
        Self::new(
            NoiseFamily::Ccn,
            NoiseFn::Constant { value: rho_plus },
            NoiseFn::Constant { value: rho_minus },
            rho_plus + rho_minus,
        )
    }

    /// Both labels flip with `f(x)`; the bound is `2·sup f`.
    pub fn pin(f: NoiseFn) -> Result<Self> {
        let bound = 2.0 * f.sup();
        Self::new(NoiseFamily::Pin, f.clone(), f, bound)
    }

    /// Two logistic flip functions; the bound is the sum of their scales.
    pub fn iln(rho_plus: NoiseFn, rho_minus: NoiseFn) -> Result<Self> {
        let bound = rho_plus.sup() + rho_minus.sup();
        Self::new(NoiseFamily::Iln, rho_plus, rho_minus, bound)
    }

    /// Overrides the declared bound.
    pub fn with_bound(mut self, rho_bound: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho_bound) {
            return Err(Error::invalid(format!("rho bound {rho_bound} outside [0, 1)")));
        }
        self.rho_bound = rho_bound;
        Ok(self)
    }

    pub fn rates(&self, x: &[f64]) -> Result<(f64, f64)> {
        Ok((self.rho_plus.eval(x)?, self.rho_minus.eval(x)?))
    }

    /// Rates at `x`, failing when their sum exceeds the declared bound.
    pub fn rates_checked(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (p, m) = self.rates(x)?;
        if p + m > self.rho_bound {
            return Err(Error::NoiseBoundViolation {
                sum: p + m,
                bound: self.rho_bound,
            });
        }
        Ok((p, m))
    }

    pub fn flip_rate(&self, x: &[f64], y: Label) -> Result<f64> {
        match y {
            Label::Pos => self.rho_plus.eval(x),
            Label::Neg => self.rho_minus.eval(x),
        }
    }
}
