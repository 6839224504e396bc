//! Declarative experiment configuration (TOML, or JSON with the same
//! schema).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distributions::{ClassDistribution, FiniteDistribution, NoiseFamily, NoiseFn, NoiseModel, SyntheticDistribution};
use crate::error::{Error, Result};
use crate::hypotheses::{HypothesisSpace, SolverConfig};
use crate::losses::LossKind;
use crate::minimax::{build_construction, Side};
use crate::risk::Evaluation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Synthetic(SyntheticDistribution),
    Finite(FiniteDistribution),
    /// One side of the three-point construction, built at each swept `ρ`;
    /// its own noise tables replace the `[noise]` section.
    Construction { side: Side },
}

/// Noise parametrized by the swept `ρ`, which is always the declared bound.
///
/// `rcn`: both rates `ρ/2`. `ccn`: `split·ρ` and `(1 − split)·ρ`. `pin`:
/// `(ρ/2)·σ(w·x + b)` for both labels. `iln`: `split·ρ·σ(w·x + b)` and
/// `(1 − split)·ρ·σ(w⁻·x + b⁻)`, with `w⁻ = −w`, `b⁻ = −b` unless given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub split: f64,
    pub weights: Option<Vec<f64>>,
    pub bias: f64,
    pub minus_weights: Option<Vec<f64>>,
    pub minus_bias: Option<f64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            family: NoiseFamily::Rcn,
            split: 0.5,
            weights: None,
            bias: 0.0,
            minus_weights: None,
            minus_bias: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HypothesisSpec {
    /// Dimension comes from the distribution.
    LinearBall { feature_radius: f64, weight_radius: f64 },
    RkhsBall { bandwidth: f64, norm_bound: f64 },
    /// Sign tables over the distribution's support.
    FiniteSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    pub kind: LossKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    /// Exact on finite laws, Monte-Carlo otherwise.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

fn default_delta() -> f64 {
    0.05
}

fn default_draws() -> usize {
    Evaluation::DEFAULT_DRAWS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n: Vec<usize>,
    pub rho: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub evaluation: EvaluationMode,
    #[serde(default = "default_draws")]
    pub mc_draws: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    /// Record wall-clock time per cell. Off by default so that output
    /// bytes depend only on the configuration.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub hypothesis: HypothesisSpec,
    pub loss: LossSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// JSON when the extension is `.json`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        if s.n.is_empty() || s.rho.is_empty() || s.seeds.is_empty() {
            return Err(Error::Config("sweep axes n, rho and seeds must be non-empty".into()));
        }
        if s.n.contains(&0) {
            return Err(Error::Config("sample sizes must be positive".into()));
        }
        let mut seeds = s.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if let Some(r) = s.rho.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::Config(format!("rho = {r} outside [0, 1)")));
        }
        if !(s.delta > 0.0 && s.delta <= 1.0) {
            return Err(Error::Config(format!("delta = {} outside (0, 1]", s.delta)));
        }
        if s.mc_draws == 0 {
            return Err(Error::Config("mc_draws must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.noise.split) {
            return Err(Error::Config(format!("noise split {} outside [0, 1]", self.noise.split)));
        }
        self.solver.validate()?;
        match &self.distribution {
            DistributionSpec::Synthetic(d) => d.validate()?,
            DistributionSpec::Finite(_) => {}
            DistributionSpec::Construction { .. } => {
                if let Some(r) = s.rho.iter().find(|r| **r == 0.0) {
                    return Err(Error::Config(format!("construction needs rho in (0, 1), got {r}")));
                }
            }
        }
        if self.hypothesis == HypothesisSpec::FiniteSign && matches!(self.distribution, DistributionSpec::Synthetic(_)) {
            return Err(Error::Config("finite_sign needs a finite or construction distribution".into()));
        }
        let space = self.space()?;
        let probe_rho = s.rho[0];
        self.noise(probe_rho)?;
        if self.loss.kind == LossKind::ZeroOne && !matches!(space, HypothesisSpace::FiniteSign { .. }) {
            return Err(Error::Config("zero_one loss is trained only over finite_sign".into()));
        }
        if self.loss.kind != LossKind::ZeroOne && matches!(space, HypothesisSpace::FiniteSign { .. }) {
            return Err(Error::Config("finite_sign is trained only with zero_one loss".into()));
        }
        Ok(())
    }

    /// The clean law at `rho` (only the construction depends on it).
    pub fn distribution(&self, rho: f64) -> Result<ClassDistribution> {
        match &self.distribution {
            DistributionSpec::Synthetic(d) => Ok(d.clone().into()),
            DistributionSpec::Finite(d) => Ok(d.clone().into()),
            DistributionSpec::Construction { side } => Ok(build_construction(rho)?.clean_distribution(*side)?.into()),
        }
    }

    fn dim(&self) -> usize {
        match &self.distribution {
            DistributionSpec::Synthetic(d) => d.dim(),
            DistributionSpec::Finite(d) => d.dim(),
            DistributionSpec::Construction { .. } => 1,
        }
    }

    fn support(&self) -> Option<Vec<Vec<f64>>> {
        match &self.distribution {
            DistributionSpec::Synthetic(_) => None,
            DistributionSpec::Finite(d) => Some(d.points().to_vec()),
            DistributionSpec::Construction { .. } => Some(vec![vec![0.0], vec![1.0], vec![2.0]]),
        }
    }

    pub fn noise(&self, rho: f64) -> Result<NoiseModel> {
        if let DistributionSpec::Construction { side } = &self.distribution {
            return build_construction(rho)?.noise_model(*side);
        }
        let ns = &self.noise;
        let dim = self.dim();
        let weights = ns.weights.clone().unwrap_or_else(|| vec![0.0; dim]);
        if weights.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: weights.len(),
            });
        }
        let minus_weights = ns
            .minus_weights
            .clone()
            .unwrap_or_else(|| weights.iter().map(|w| -w).collect());
        if minus_weights.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: minus_weights.len(),
            });
        }
        let logistic = |scale: f64, weights: Vec<f64>, bias: f64| NoiseFn::Logistic { scale, weights, bias };
        let model = match ns.family {
            NoiseFamily::Rcn => NoiseModel::rcn(rho / 2.0)?,
            NoiseFamily::Ccn => NoiseModel::ccn(ns.split * rho, (1.0 - ns.split) * rho)?,
            NoiseFamily::Pin => NoiseModel::pin(logistic(rho / 2.0, weights, ns.bias))?,
            NoiseFamily::Iln => NoiseModel::iln(
                logistic(ns.split * rho, weights, ns.bias),
                logistic((1.0 - ns.split) * rho, minus_weights, ns.minus_bias.unwrap_or(-ns.bias)),
            )?,
        };
        model.with_bound(rho)
    }

    pub fn space(&self) -> Result<HypothesisSpace> {
        match &self.hypothesis {
            HypothesisSpec::LinearBall {
                feature_radius,
                weight_radius,
            } => {
                if let DistributionSpec::Synthetic(d) = &self.distribution {
                    if d.radius > *feature_radius {
                        return Err(Error::Config(format!(
                            "distribution radius {} exceeds the feature radius {feature_radius}",
                            d.radius
                        )));
                    }
                }
                HypothesisSpace::linear_ball(self.dim(), *feature_radius, *weight_radius)
            }
            HypothesisSpec::RkhsBall { bandwidth, norm_bound } => HypothesisSpace::rkhs_ball(*bandwidth, *norm_bound),
            HypothesisSpec::FiniteSign => HypothesisSpace::finite_sign(
                self.support()
                    .ok_or_else(|| Error::Config("finite_sign needs a finite support".into()))?,
            ),
        }
    }

    pub fn evaluation(&self, dist: &ClassDistribution) -> Evaluation {
        match self.sweep.evaluation {
            EvaluationMode::Auto => match dist {
                ClassDistribution::Finite(_) => Evaluation::Exact,
                ClassDistribution::Synthetic(_) => Evaluation::MonteCarlo {
                    draws: self.sweep.mc_draws,
                },
            },
            EvaluationMode::Exact => Evaluation::Exact,
            EvaluationMode::MonteCarlo => Evaluation::MonteCarlo {
                draws: self.sweep.mc_draws,
            },
        }
    }
}
