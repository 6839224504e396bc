//! Binary classification under instance- and label-dependent label noise.
//!
//! Clean and noisy data share one generative model: draw `(x, y)` from a
//! clean law, then flip `y` with probability `ρ_y(x)`. The crate samples
//! such data, trains empirical risk minimizers on either label channel,
//! measures the gap between their clean risks, evaluates the matching
//! upper and lower bounds, and realizes the two-point construction that
//! makes the `ρ`-proportional error unavoidable.

pub mod bounds;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod hypotheses;
pub mod losses;
pub mod minimax;
pub mod risk;
pub mod rng;
pub mod scalar;
pub mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bounds::{bound, g_delta, BoundInputs, BoundKind, BoundReport, GSetting};
pub use distributions::{
    noisy_posterior, sample_dataset, ClassDistribution, Dataset, FiniteDistribution, Label, NoiseFamily, NoiseFn,
    NoiseModel, SyntheticDistribution,
};
pub use error::{Error, Result};
pub use harness::{emit_csv, run_sweep, ExperimentConfig, SweepResults};
pub use hypotheses::{erm_convex, erm_zero_one_finite, Hypothesis, HypothesisSpace, SolverConfig};
pub use losses::{gap_constant, LossKind};
pub use minimax::{
    bayes_risk01, build_construction, estimator_excess_sum, verify_indistinguishable, ConstructionPair, Estimator,
    Side,
};
pub use risk::{empirical_risk, exact_risk, mc_risk, Evaluation, GapExperiment, RiskGapResult};
pub use scalar::{Exact, KahanSum, Scalar};

/// The construction in double precision.
pub type Construction = ConstructionPair<f64>;
/// The construction in single precision.
pub type ConstructionF32 = ConstructionPair<f32>;
/// The construction in exact rational arithmetic.
pub type ExactConstruction = ConstructionPair<Exact>;

/// Which labels a procedure reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelChannel {
    Clean,
    Noisy,
}

impl fmt::Display for LabelChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelChannel::Clean => "clean",
            LabelChannel::Noisy => "noisy",
        })
    }
}

impl FromStr for LabelChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clean" => Ok(LabelChannel::Clean),
            "noisy" => Ok(LabelChannel::Noisy),
            _ => Err(Error::InvalidInput(format!("unknown label channel `{s}` (clean, noisy)"))),
        }
    }
}

/// Hex SHA-256 of the value's JSON encoding.
pub fn digest<T: Serialize + ?Sized>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("serializable value");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
