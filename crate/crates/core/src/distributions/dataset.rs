use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ClassDistribution, Label, NoiseModel};
use crate::error::{csv_io, Error, Result};
use crate::rng::{stream_rng, Stream};

pub const GENERATOR_VERSION: &str = concat!("ilnlab-", env!("CARGO_PKG_VERSION"), "/chacha8-rows");

/// Sample of triples `(x, y, ỹ)`. Features are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    clean: Vec<Label>,
    noisy: Vec<Label>,
    pub seed: u64,
    pub config_digest: String,
}

/// Sidecar metadata written next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub config_digest: String,
    pub generator_version: String,
    pub n: usize,
    pub dim: usize,
}

impl Dataset {
    pub fn from_rows(
        dim: usize,
        features: Vec<f64>,
        clean: Vec<Label>,
        noisy: Vec<Label>,
        seed: u64,
        config_digest: String,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be positive"));
        }
        if clean.len() != noisy.len() || features.len() != dim * clean.len() {
            return Err(Error::invalid(format!(
                "inconsistent dataset: {} features for {} clean / {} noisy labels at dim {dim}",
                features.len(),
                clean.len(),
                noisy.len()
            )));
        }
        Ok(Dataset {
            dim,
            features,
            clean,
            noisy,
            seed,
            config_digest,
        })
    }

    pub fn len(&self) -> usize {
        self.clean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn clean_labels(&self) -> &[Label] {
        &self.clean
    }

    pub fn noisy_labels(&self) -> &[Label] {
        &self.noisy
    }

    pub fn labels(&self, channel: crate::LabelChannel) -> &[Label] {
        match channel {
            crate::LabelChannel::Clean => &self.clean,
            crate::LabelChannel::Noisy => &self.noisy,
        }
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            seed: self.seed,
            config_digest: self.config_digest.clone(),
            generator_version: GENERATOR_VERSION.to_string(),
            n: self.len(),
            dim: self.dim,
        }
    }
}

/// Draws `n` i.i.d. triples from the joint law.
///
/// Row `i` reads features and its clean label from the clean stream `i`
/// and its flip decision from the noise stream `i`, so the clean part of a
/// dataset does not depend on the noise model and a dataset of size `n` is
/// a prefix of any larger one drawn with the same seed.
pub fn sample_dataset(
    dist: &ClassDistribution,
    noise: &NoiseModel,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let dim = dist.dim();
    let mut features = vec![0.0; n * dim];
    let mut clean = Vec::with_capacity(n);
    let mut noisy = Vec::with_capacity(n);
    for (i, x) in features.chunks_exact_mut(dim).enumerate() {
        let mut rng = stream_rng(seed, Stream::Clean, i as u64);
        let eta = dist.draw(&mut rng, x);
        let y = if rng.random::<f64>() < eta {
            Label::Pos
        } else {
            Label::Neg
        };
        let (rp, rm) = noise.rates_checked(x)?;
        let flip = match y {
            Label::Pos => rp,
            Label::Neg => rm,
        };
        let u: f64 = stream_rng(seed, Stream::Noise, i as u64).random();
        clean.push(y);
        noisy.push(if u < flip { y.flip() } else { y });
    }
    let digest = crate::digest(&(dist, noise, n));
    Dataset::from_rows(dim, features, clean, noisy, seed, digest)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes `x_1,…,x_d,y,y_tilde` rows plus a `<path>.meta.json` sidecar.
pub fn write_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(e, path))?;
    let mut header: Vec<String> = (1..=data.dim).map(|j| format!("x_{j}")).collect();
    header.push("y".into());
    header.push("y_tilde".into());
    w.write_record(&header)?;
    let mut rec = Vec::with_capacity(data.dim + 2);
    for i in 0..data.len() {
        rec.clear();
        rec.extend(data.x(i).iter().map(|v| v.to_string()));
        rec.push(data.clean[i].as_i8().to_string());
        rec.push(data.noisy[i].as_i8().to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let meta = serde_json::to_string_pretty(&data.meta())?;
    let side = sidecar_path(path);
    std::fs::write(&side, meta + "\n").map_err(|e| Error::io(side, e))
}

/// Reads a dataset CSV; seed and digest come from the sidecar when present.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(e, path))?;
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 3 || &header[cols - 2] != "y" || &header[cols - 1] != "y_tilde" {
        return Err(Error::Parse(format!(
            "{}: header must be x_1,...,x_d,y,y_tilde",
            path.display()
        )));
    }
    let dim = cols - 2;
    let mut features = Vec::new();
    let mut clean = Vec::new();
    let mut noisy = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Parse(format!("{}: row {}: bad {what}", path.display(), line + 1));
        for j in 0..dim {
            features.push(rec[j].trim().parse::<f64>().map_err(|_| bad("feature"))?);
        }
        let label = |s: &str| -> Result<Label> {
            Label::from_i64(s.trim().parse::<i64>().map_err(|_| bad("label"))?)
        };
        clean.push(label(&rec[dim])?);
        noisy.push(label(&rec[dim + 1])?);
    }
    let side = sidecar_path(path);
    let (seed, digest) = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: DatasetMeta = serde_json::from_str(&text)?;
        (meta.seed, meta.config_digest)
    } else {
        (0, String::new())
    };
    Dataset::from_rows(dim, features, clean, noisy, seed, digest)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{FiniteDistribution, NoiseFn, SyntheticDistribution};

    fn synthetic() -> ClassDistribution {
        SyntheticDistribution::new(
            vec![vec![0.3, 0.0], vec![-0.3, 0.1]],
            vec![0.2, 0.2],
            vec![0.5, 0.5],
            1.0,
            vec![3.0, 1.0],
            0.0,
        )
        .unwrap()
        .into()
    }

    #[test]
    fn zero_noise_keeps_labels() {
        let d = sample_dataset(&synthetic(), &NoiseModel::rcn(0.0).unwrap(), 100, 7).unwrap();
        assert_eq!(d.len(), 100);
        assert_eq!(d.clean_labels(), d.noisy_labels());
    }

    #[test]
    fn bitwise_reproducible_and_prefix_stable() {
        let noise = NoiseModel::rcn(0.1).unwrap();
        let a = sample_dataset(&synthetic(), &noise, 500, 11).unwrap();
        let b = sample_dataset(&synthetic(), &noise, 500, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_dataset(&synthetic(), &noise, 200, 11).unwrap();
        assert_eq!(&a.features()[..400], c.features());
        assert_eq!(&a.noisy_labels()[..200], c.noisy_labels());
    }

    #[test]
    fn clean_part_shared_across_noise_levels() {
        let a = sample_dataset(&synthetic(), &NoiseModel::rcn(0.0).unwrap(), 300, 5).unwrap();
        let b = sample_dataset(&synthetic(), &NoiseModel::rcn(0.3).unwrap(), 300, 5).unwrap();
        assert_eq!(a.features(), b.features());
        assert_eq!(a.clean_labels(), b.clean_labels());
        assert_ne!(a.noisy_labels(), b.noisy_labels());
    }

    #[test]
    fn rejects_zero_rows_and_inconsistent_noise() {
        let noise = NoiseModel::rcn(0.1).unwrap();
        assert!(sample_dataset(&synthetic(), &noise, 0, 1).is_err());
        let lying = NoiseModel::rcn(0.2).unwrap().with_bound(0.3).unwrap();
        assert!(matches!(
            sample_dataset(&synthetic(), &lying, 10, 1),
            Err(Error::NoiseBoundViolation { .. })
        ));
    }

    #[test]
    fn class_conditional_flip_rate() {
        // x0 has η = 0.7; flips among y = +1 rows happen at ρ₊ = 0.1
        let dist: ClassDistribution = FiniteDistribution::new(
            vec![vec![0.0], vec![1.0]],
            vec![0.5, 0.5],
            vec![0.7, 0.2],
        )
        .unwrap()
        .into();
        let noise = NoiseModel::ccn(0.1, 0.2).unwrap();
        let n = 1_000_000;
        let d = sample_dataset(&dist, &noise, n, 2).unwrap();
        let (mut pos, mut flipped) = (0usize, 0usize);
        for i in 0..n {
            if d.x(i)[0] == 0.0 && d.clean_labels()[i] == Label::Pos {
                pos += 1;
                flipped += (d.noisy_labels()[i] == Label::Neg) as usize;
            }
        }
        let rate = flipped as f64 / pos as f64;
        assert!((rate - 0.1).abs() < 0.002, "flip rate {rate}");
    }

    #[test]
    fn csv_round_trip() {
        let noise = NoiseModel::iln(
            NoiseFn::Logistic {
                scale: 0.1,
                weights: vec![1.0, -1.0],
                bias: 0.0,
            },
            NoiseFn::Constant { value: 0.05 },
        )
        .unwrap();
        let d = sample_dataset(&synthetic(), &noise, 50, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_dataset(&d, &path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, d);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x_1,x_2,y,y_tilde\n"));
        assert_eq!(text.lines().count(), 51);
    }
}
