//! Clean data laws, label-noise models and the joint sampler.

mod checks;
mod dataset;
mod noise;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checks::{
    check_anchor, check_margin, check_noise_bound, AnchorReport, MarginReport, NoiseBoundReport,
    NoiseProbe, DEFAULT_ANCHOR_TOL,
};
pub use dataset::{read_dataset, sample_dataset, write_dataset, Dataset, DatasetMeta, GENERATOR_VERSION};
pub use noise::{noisy_posterior, NoiseFamily, NoiseFn, NoiseModel};

/// A binary label. Serialized as `1` / `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    /// Sign of a score with `sgn(0) = +1`.
    #[inline]
    pub fn of_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    #[inline]
    pub fn as_i8(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    pub fn from_i64(v: i64) -> Result<Label> {
        match v {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(Error::invalid(format!("label must be -1 or +1, got {other}"))),
        }
    }

    #[inline]
    pub fn flip(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Label::from_i64(v).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Clean law with finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFinite", into = "RawFinite")]
pub struct FiniteDistribution {
    points: Vec<Vec<f64>>,
    mass: Vec<f64>,
    posterior: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawFinite {
    points: Vec<Vec<f64>>,
    mass: Vec<f64>,
    posterior: Vec<f64>,
}

impl TryFrom<RawFinite> for FiniteDistribution {
    type Error = Error;

    fn try_from(r: RawFinite) -> Result<Self> {
        FiniteDistribution::new(r.points, r.mass, r.posterior)
    }
}

impl From<FiniteDistribution> for RawFinite {
    fn from(d: FiniteDistribution) -> Self {
        RawFinite {
            points: d.points,
            mass: d.mass,
            posterior: d.posterior,
        }
    }
}

impl FiniteDistribution {
    pub fn new(points: Vec<Vec<f64>>, mass: Vec<f64>, posterior: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("finite distribution needs at least one point"));
        }
        if points.len() != mass.len() || points.len() != posterior.len() {
            return Err(Error::invalid(format!(
                "support has {} points but {} masses and {} posteriors",
                points.len(),
                mass.len(),
                posterior.len()
            )));
        }
        let dim = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(Error::invalid(format!("duplicate support point {p:?}")));
            }
        }
        if let Some(m) = mass.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::invalid(format!("mass must be strictly positive, got {m}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("masses sum to {total}, expected 1")));
        }
        if let Some(e) = posterior.iter().find(|e| !(**e >= 0.0 && **e <= 1.0)) {
            return Err(Error::invalid(format!("posterior {e} outside [0, 1]")));
        }
        let cumulative = mass
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        Ok(FiniteDistribution {
            points,
            mass,
            posterior,
            cumulative,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| p.as_slice() == x)
    }

    /// Same marginal, with η replaced pointwise by the noisy posterior.
    pub fn noisy_view(&self, noise: &NoiseModel) -> Result<FiniteDistribution> {
        let posterior = self
            .points
            .iter()
            .zip(&self.posterior)
            .map(|(x, &eta)| {
                let (rp, rm) = noise.rates_checked(x)?;
                noisy_posterior(eta, rp, rm)
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteDistribution::new(self.points.clone(), self.mass.clone(), posterior)
    }

    fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative
            .partition_point(|c| *c <= u)
            .min(self.points.len() - 1)
    }
}

/// Gaussian mixture over ℝ^d, radially clipped to the ball of radius
/// `radius`, with a logistic posterior `η(x) = σ(a·x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDistribution {
    pub means: Vec<Vec<f64>>,
    /// Per-coordinate variances shared by every component.
    pub variances: Vec<f64>,
    pub weights: Vec<f64>,
    pub radius: f64,
    pub posterior_weights: Vec<f64>,
    pub posterior_bias: f64,
}

impl SyntheticDistribution {
    pub fn new(
        means: Vec<Vec<f64>>,
        variances: Vec<f64>,
        weights: Vec<f64>,
        radius: f64,
        posterior_weights: Vec<f64>,
        posterior_bias: f64,
    ) -> Result<Self> {
        let d = SyntheticDistribution {
            means,
            variances,
            weights,
            radius,
            posterior_weights,
            posterior_bias,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.means.is_empty() || self.means.len() != self.weights.len() {
            return Err(Error::invalid("mixture needs one weight per component"));
        }
        let dim = self.variances.len();
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be positive"));
        }
        for m in &self.means {
            if m.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.len(),
                });
            }
        }
        if self.posterior_weights.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.posterior_weights.len(),
            });
        }
        if self.variances.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("variances must be positive"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("mixing weights must be non-negative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("mixing weights sum to {total}")));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid("radius must be positive and finite"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.variances.len()
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        logistic(dot(&self.posterior_weights, x) + self.posterior_bias)
    }

    /// Draws a feature into `out` (length `dim`).
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        let mean = &self.means[k];
        for j in 0..out.len() {
            let z: f64 = rng.sample(StandardNormal);
            out[j] = mean[j] + self.variances[j].sqrt() * z;
        }
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > self.radius {
            let s = self.radius / norm;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Either kind of clean law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassDistribution {
    Finite(FiniteDistribution),
    Synthetic(SyntheticDistribution),
}

impl ClassDistribution {
    pub fn dim(&self) -> usize {
        match self {
            ClassDistribution::Finite(d) => d.dim(),
            ClassDistribution::Synthetic(d) => d.dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ClassDistribution::Finite(_) => "finite",
            ClassDistribution::Synthetic(_) => "synthetic",
        }
    }

    /// Draws a feature into `out` and returns its posterior η(x).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> f64 {
        match self {
            ClassDistribution::Finite(d) => {
                let i = d.draw_index(rng);
                out.copy_from_slice(&d.points[i]);
                d.posterior[i]
            }
            ClassDistribution::Synthetic(d) => {
                d.draw_into(rng, out);
                d.eta(out)
            }
        }
    }

    /// Re-validates after deserialization.
    pub fn validated(self) -> Result<Self> {
        if let ClassDistribution::Synthetic(d) = &self {
            d.validate()?;
        }
        Ok(self)
    }
}

impl From<FiniteDistribution> for ClassDistribution {
    fn from(d: FiniteDistribution) -> Self {
        ClassDistribution::Finite(d)
    }
}

impl From<SyntheticDistribution> for ClassDistribution {
    fn from(d: SyntheticDistribution) -> Self {
        ClassDistribution::Synthetic(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn finite_rejects_bad_masses_and_posteriors() {
        let p = vec![vec![0.0], vec![1.0]];
        assert!(FiniteDistribution::new(p.clone(), vec![0.5, 0.4], vec![0.1, 0.2]).is_err());
        assert!(FiniteDistribution::new(p.clone(), vec![1.0, 0.0], vec![0.1, 0.2]).is_err());
        assert!(FiniteDistribution::new(p.clone(), vec![0.5, 0.5], vec![0.1, 1.2]).is_err());
        assert!(FiniteDistribution::new(p, vec![0.5, 0.5], vec![0.1, 0.2]).is_ok());
    }

    #[test]
    fn sgn_zero_is_positive() {
        assert_eq!(Label::of_score(0.0), Label::Pos);
        assert_eq!(Label::of_score(-0.0), Label::Pos);
        assert_eq!(Label::of_score(-1e-300), Label::Neg);
    }

    #[test]
    fn synthetic_draws_stay_in_ball() {
        let d = SyntheticDistribution::new(
            vec![vec![2.0, 0.0], vec![-2.0, 0.0]],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
            1.0,
            vec![1.0, 0.0],
            0.0,
        )
        .unwrap();
        let mut rng = stream_rng(1, Stream::Clean, 0);
        let mut x = [0.0; 2];
        for _ in 0..10_000 {
            d.draw_into(&mut rng, &mut x);
            assert!((x[0] * x[0] + x[1] * x[1]).sqrt() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn finite_draw_frequencies_follow_mass() {
        let d = FiniteDistribution::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![0.125, 0.75, 0.125],
            vec![1.0, 0.5, 0.0],
        )
        .unwrap();
        let mut rng = stream_rng(3, Stream::Clean, 0);
        let mut counts = [0usize; 3];
        let n = 200_000;
        for _ in 0..n {
            counts[d.draw_index(&mut rng)] += 1;
        }
        let f = counts[1] as f64 / n as f64;
        assert!((f - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt());
    }
}
