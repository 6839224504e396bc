//! Hypothesis spaces, fitted hypotheses and the two ERM procedures.
//!
//! The same loss is used whichever label channel is selected; the noisy
//! estimator is plain ERM on corrupted labels.

mod erm;

use serde::{Deserialize, Serialize};

use crate::distributions::{dot, Label};
use crate::error::{Error, Result};

pub use erm::{erm_convex, erm_zero_one_finite, frank_wolfe_gap_linear, SolverConfig};

/// Norm-constrained class of score functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisSpace {
    /// `{x ↦ w·x : ‖w‖₂ ≤ W*}` on the ball `‖x‖₂ ≤ X*`.
    LinearBall {
        dim: usize,
        feature_radius: f64,
        weight_radius: f64,
    },
    /// Norm ball of radius `M` in the RKHS of a unit-diagonal Gaussian
    /// kernel, so `R = 1`.
    RkhsBall { bandwidth: f64, norm_bound: f64 },
    /// All sign tables over a finite domain.
    FiniteSign { domain: Vec<Vec<f64>> },
}

impl HypothesisSpace {
    pub fn linear_ball(dim: usize, feature_radius: f64, weight_radius: f64) -> Result<Self> {
        let s = HypothesisSpace::LinearBall {
            dim,
            feature_radius,
            weight_radius,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn rkhs_ball(bandwidth: f64, norm_bound: f64) -> Result<Self> {
        let s = HypothesisSpace::RkhsBall {
            bandwidth,
            norm_bound,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn finite_sign(domain: Vec<Vec<f64>>) -> Result<Self> {
        let s = HypothesisSpace::FiniteSign { domain };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            HypothesisSpace::LinearBall {
                dim,
                feature_radius,
                weight_radius,
            } => {
                if *dim == 0 {
                    return Err(Error::invalid("linear ball needs dim >= 1"));
                }
                positive(*feature_radius, "X*")?;
                positive(*weight_radius, "W*")
            }
            HypothesisSpace::RkhsBall {
                bandwidth,
                norm_bound,
            } => {
                positive(*bandwidth, "bandwidth")?;
                positive(*norm_bound, "M")
            }
            HypothesisSpace::FiniteSign { domain } => {
                if domain.is_empty() {
                    return Err(Error::invalid("finite domain is empty"));
                }
                Ok(())
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            HypothesisSpace::LinearBall { .. } => "linear_ball",
            HypothesisSpace::RkhsBall { .. } => "rkhs_ball",
            HypothesisSpace::FiniteSign { .. } => "finite_sign",
        }
    }

    /// `sup |f(x)|` over the space and domain.
    pub fn score_bound(&self) -> f64 {
        match self {
            HypothesisSpace::LinearBall {
                feature_radius,
                weight_radius,
                ..
            } => feature_radius * weight_radius,
            HypothesisSpace::RkhsBall { norm_bound, .. } => *norm_bound,
            HypothesisSpace::FiniteSign { .. } => 1.0,
        }
    }

    /// Radius of the norm ball (`W*` or `M`); `None` for sign tables.
    pub fn norm_radius(&self) -> Option<f64> {
        match self {
            HypothesisSpace::LinearBall { weight_radius, .. } => Some(*weight_radius),
            HypothesisSpace::RkhsBall { norm_bound, .. } => Some(*norm_bound),
            HypothesisSpace::FiniteSign { .. } => None,
        }
    }
}

/// Gaussian kernel with `k(x, x) = 1`.
#[inline]
pub fn rbf(a: &[f64], b: &[f64], bandwidth: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    (-d2 / (2.0 * bandwidth * bandwidth)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisParams {
    Linear { weights: Vec<f64> },
    /// `f = Σ αᵢ k(xᵢ, ·)`.
    Kernel {
        anchors: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
    },
    /// One sign per point of the space's domain.
    SignTable { signs: Vec<Label> },
}

/// A fitted score function together with the space it was fitted in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub space: HypothesisSpace,
    pub params: HypothesisParams,
    /// Digest of the solver configuration; `None` for exact solvers.
    pub solver_digest: Option<String>,
    /// Certified upper bound on the empirical-risk suboptimality.
    pub solver_tolerance: f64,
}

impl Hypothesis {
    pub fn linear(space: HypothesisSpace, weights: Vec<f64>) -> Result<Self> {
        match &space {
            HypothesisSpace::LinearBall { dim, .. } if *dim == weights.len() => {}
            HypothesisSpace::LinearBall { dim, .. } => {
                return Err(Error::DimensionMismatch {
                    expected: *dim,
                    got: weights.len(),
                })
            }
            _ => return Err(Error::invalid("linear weights need a linear_ball space")),
        }
        Ok(Hypothesis {
            space,
            params: HypothesisParams::Linear { weights },
            solver_digest: None,
            solver_tolerance: 0.0,
        })
    }

    pub fn kernel(space: HypothesisSpace, anchors: Vec<Vec<f64>>, coefficients: Vec<f64>) -> Result<Self> {
        if !matches!(space, HypothesisSpace::RkhsBall { .. }) {
            return Err(Error::invalid("kernel expansion needs an rkhs_ball space"));
        }
        if anchors.len() != coefficients.len() {
            return Err(Error::invalid("one coefficient per anchor"));
        }
        Ok(Hypothesis {
            space,
            params: HypothesisParams::Kernel {
                anchors,
                coefficients,
            },
            solver_digest: None,
            solver_tolerance: 0.0,
        })
    }

    pub fn sign_table(space: HypothesisSpace, signs: Vec<Label>) -> Result<Self> {
        match &space {
            HypothesisSpace::FiniteSign { domain } if domain.len() == signs.len() => {}
            HypothesisSpace::FiniteSign { domain } => {
                return Err(Error::DimensionMismatch {
                    expected: domain.len(),
                    got: signs.len(),
                })
            }
            _ => return Err(Error::invalid("sign table needs a finite_sign space")),
        }
        Ok(Hypothesis {
            space,
            params: HypothesisParams::SignTable { signs },
            solver_digest: None,
            solver_tolerance: 0.0,
        })
    }

    /// Score `f(x)`; classification is `sgn(f(x))` with `sgn(0) = +1`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match (&self.params, &self.space) {
            (HypothesisParams::Linear { weights }, _) => {
                if weights.len() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: weights.len(),
                        got: x.len(),
                    });
                }
                Ok(dot(weights, x))
            }
            (
                HypothesisParams::Kernel {
                    anchors,
                    coefficients,
                },
                HypothesisSpace::RkhsBall { bandwidth, .. },
            ) => {
                if let Some(a) = anchors.first() {
                    if a.len() != x.len() {
                        return Err(Error::DimensionMismatch {
                            expected: a.len(),
                            got: x.len(),
                        });
                    }
                }
                Ok(anchors
                    .iter()
                    .zip(coefficients)
                    .map(|(a, c)| c * rbf(a, x, *bandwidth))
                    .sum())
            }
            (HypothesisParams::SignTable { signs }, HypothesisSpace::FiniteSign { domain }) => domain
                .iter()
                .position(|p| p.as_slice() == x)
                .map(|i| signs[i].value())
                .ok_or_else(|| Error::UnknownPoint(x.to_vec())),
            _ => Err(Error::invalid("hypothesis parameters do not match their space")),
        }
    }

    pub fn classify(&self, x: &[f64]) -> Result<Label> {
        self.predict(x).map(Label::of_score)
    }

    /// `‖w‖₂` or `sqrt(αᵀKα)`; `None` for sign tables.
    pub fn norm(&self) -> Option<f64> {
        match (&self.params, &self.space) {
            (HypothesisParams::Linear { weights }, _) => Some(dot(weights, weights).sqrt()),
            (
                HypothesisParams::Kernel {
                    anchors,
                    coefficients,
                },
                HypothesisSpace::RkhsBall { bandwidth, .. },
            ) => {
                let mut q = 0.0;
                for (i, a) in anchors.iter().enumerate() {
                    for (j, b) in anchors.iter().enumerate() {
                        q += coefficients[i] * coefficients[j] * rbf(a, b, *bandwidth);
                    }
                }
                Some(q.max(0.0).sqrt())
            }
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let h: Hypothesis = serde_json::from_str(text)?;
        h.space.validate()?;
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_examples() {
        let lin = Hypothesis::linear(HypothesisSpace::linear_ball(2, 5.0, 1.0).unwrap(), vec![1.0, 0.0]).unwrap();
        assert_eq!(lin.predict(&[0.5, 3.0]).unwrap(), 0.5);
        assert!(lin.predict(&[0.5]).is_err());

        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        let table = Hypothesis::sign_table(
            HypothesisSpace::finite_sign(pts).unwrap(),
            vec![Label::Pos, Label::Neg, Label::Neg],
        )
        .unwrap();
        assert_eq!(table.predict(&[1.0]).unwrap(), -1.0);
        assert!(matches!(table.predict(&[3.0]), Err(Error::UnknownPoint(_))));

        let k = Hypothesis::kernel(HypothesisSpace::rkhs_ball(1.0, 2.0).unwrap(), vec![vec![0.3, -0.2]], vec![1.0]).unwrap();
        assert_eq!(k.predict(&[0.3, -0.2]).unwrap(), 1.0);
        assert_eq!(k.norm().unwrap(), 1.0);
    }

    #[test]
    fn json_round_trip() {
        let h = Hypothesis::linear(HypothesisSpace::linear_ball(3, 1.0, 1.0).unwrap(), vec![0.1, -0.2, 0.3]).unwrap();
        let back = Hypothesis::from_json(&h.to_json().unwrap()).unwrap();
        assert_eq!(back, h);
        assert!(h.to_json().unwrap().contains("\"kind\": \"linear_ball\""));
    }

    #[test]
    fn spaces_validate() {
        assert!(HypothesisSpace::linear_ball(0, 1.0, 1.0).is_err());
        assert!(HypothesisSpace::linear_ball(2, 1.0, 0.0).is_err());
        assert!(HypothesisSpace::rkhs_ball(-1.0, 1.0).is_err());
        assert!(HypothesisSpace::finite_sign(vec![]).is_err());
    }
}
