//! Margin losses, their Lipschitz constants and the label-gap constant
//! `C ≥ sup |ℓ(f(x), +1) − ℓ(f(x), −1)|`.

use std::fmt;
use std::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::distributions::Label;
use crate::error::{Error, Result};
use crate::hypotheses::HypothesisSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    ZeroOne,
    Logistic,
    Hinge,
    /// `(1 − y·f)²`.
    SquaredMargin,
}

/// Lipschitz constant in the margin `z = y·f(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lipschitz {
    Constant(f64),
    /// Lipschitz only once scores are bounded.
    Unbounded,
    /// Not continuous.
    None,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::ZeroOne,
        LossKind::Logistic,
        LossKind::Hinge,
        LossKind::SquaredMargin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::ZeroOne => "zero_one",
            LossKind::Logistic => "logistic",
            LossKind::Hinge => "hinge",
            LossKind::SquaredMargin => "squared_margin",
        }
    }

    pub fn lipschitz(self) -> Lipschitz {
        match self {
            LossKind::ZeroOne => Lipschitz::None,
            LossKind::Logistic | LossKind::Hinge => Lipschitz::Constant(1.0),
            LossKind::SquaredMargin => Lipschitz::Unbounded,
        }
    }

    /// Lipschitz constant on `|score| ≤ score_bound`.
    pub fn lipschitz_on(self, score_bound: f64) -> Option<f64> {
        match self.lipschitz() {
            Lipschitz::Constant(l) => Some(l),
            Lipschitz::Unbounded => Some(2.0 * (1.0 + score_bound)),
            Lipschitz::None => None,
        }
    }

    pub fn is_convex(self) -> bool {
        self != LossKind::ZeroOne
    }

    #[inline]
    pub fn eval<T: Float>(self, score: T, label: Label) -> T {
        let one = T::one();
        match self {
            LossKind::ZeroOne => {
                let predicted = if score >= T::zero() { Label::Pos } else { Label::Neg };
                if predicted == label {
                    T::zero()
                } else {
                    one
                }
            }
            _ => {
                let z = if label == Label::Pos { score } else { -score };
                self.margin_loss(z)
            }
        }
    }

    /// `φ(z)` for margin losses; `z` is `y·f(x)`.
    #[inline]
    pub fn margin_loss<T: Float>(self, z: T) -> T {
        let one = T::one();
        match self {
            LossKind::ZeroOne => {
                if z >= T::zero() {
                    T::zero()
                } else {
                    one
                }
            }
            // ln(1 + e^{-z}) without overflow
            LossKind::Logistic => {
                if z > T::zero() {
                    (-z).exp().ln_1p()
                } else {
                    -z + z.exp().ln_1p()
                }
            }
            LossKind::Hinge => (one - z).max(T::zero()),
            LossKind::SquaredMargin => (one - z) * (one - z),
        }
    }

    /// A subgradient `φ'(z)`.
    #[inline]
    pub fn margin_derivative<T: Float>(self, z: T) -> T {
        let one = T::one();
        match self {
            LossKind::ZeroOne => T::zero(),
            LossKind::Logistic => {
                // -1 / (1 + e^z)
                if z > T::zero() {
                    let e = (-z).exp();
                    -e / (one + e)
                } else {
                    -one / (one + z.exp())
                }
            }
            LossKind::Hinge => {
                if z < one {
                    -one
                } else {
                    T::zero()
                }
            }
            LossKind::SquaredMargin => -(one + one) * (one - z),
        }
    }

    /// `(min, max)` of the loss over `|score| ≤ score_bound`.
    pub fn range(self, score_bound: f64) -> (f64, f64) {
        let s = score_bound;
        match self {
            LossKind::ZeroOne => (0.0, 1.0),
            LossKind::Logistic => (self.margin_loss(s), self.margin_loss(-s)),
            LossKind::Hinge => (self.margin_loss(s), 1.0 + s),
            LossKind::SquaredMargin => {
                let lo = if s >= 1.0 { 0.0 } else { (1.0 - s) * (1.0 - s) };
                (lo, (1.0 + s) * (1.0 + s))
            }
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown loss `{s}`")))
    }
}

/// Uniform bound on `|ℓ(f(x), +1) − ℓ(f(x), −1)|` over the space.
///
/// `C = 1` for 0-1 loss on any space. For a Lipschitz margin loss the gap
/// is at most `2·L·|f(x)|`, giving `2·L·X*·W*` on a linear ball, `2·L·R·M`
/// on an RKHS ball and `2·L` on sign tables (scores in `{−1, +1}`).
pub fn gap_constant(loss: LossKind, space: &HypothesisSpace) -> Result<f64> {
    if loss == LossKind::ZeroOne {
        return Ok(1.0);
    }
    let bound = space.score_bound();
    let l = loss
        .lipschitz_on(bound)
        .ok_or(Error::UnboundedLoss(loss.name()))?;
    Ok(2.0 * l * bound)
}
