//! Supervised data for the allocation network: channel draws labeled by the
//! grid-search oracle.
//!
//! Each sample's features are the natural logs of the five power gains plus
//! the power-splitting factor, z-scored with statistics fitted on the
//! training set. The splitting factor is an input because the oracle's label
//! moves with it through the near-user rate floor.

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::model::{ChannelRealization, ChannelSampler, FadingSampler, PowerSplit, SystemParams};
use crate::optimizer::{oracle_search, ObjectiveConfig};
use crate::rng::{chunks, stream};

/// Five log-gains and the splitting factor.
pub const FEATURE_DIM: usize = 6;

/// Training and test sizes used by the experiments.
pub const DEFAULT_TRAIN_SAMPLES: usize = 30_000;
pub const DEFAULT_TEST_SAMPLES: usize = 6_000;

/// Smallest gain fed to the log; keeps features finite on underflowed draws.
const GAIN_FLOOR: f64 = 1e-300;

pub fn raw_features(ch: &ChannelRealization, split: &PowerSplit) -> [f64; FEATURE_DIM] {
    let g = ch.as_array();
    let mut f = [0.0; FEATURE_DIM];
    for (fi, gi) in f.iter_mut().zip(g) {
        *fi = gi.max(GAIN_FLOOR).ln();
    }
    f[5] = split.rho_n1;
    f
}

/// Where each sample's power-splitting factors come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitSource {
    Fixed(PowerSplit),
    /// All nodes share one factor drawn uniformly from the list.
    EqualFromGrid(Vec<f64>),
}

impl SplitSource {
    fn validate(&self) -> Result<()> {
        match self {
            SplitSource::Fixed(s) => s.validate(),
            SplitSource::EqualFromGrid(g) if g.is_empty() => {
                Err(invalid("rho_grid", "needs at least one value"))
            }
            SplitSource::EqualFromGrid(g) => g.iter().try_for_each(|&r| PowerSplit::uniform(r).map(|_| ())),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PowerSplit {
        match self {
            SplitSource::Fixed(s) => *s,
            SplitSource::EqualFromGrid(g) => {
                PowerSplit::uniform(g[rng.gen_range(0..g.len())]).expect("validated")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub channel: ChannelRealization,
    pub split: PowerSplit,
    pub label: f64,
}

/// Per-feature affine map `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Mean and population standard deviation per column; constant columns
    /// get scale 1.
    pub fn fit(raw: &Array2<f64>) -> Result<Self> {
        let n = raw.nrows();
        if n == 0 {
            return Err(invalid("samples", "cannot fit normalization on zero rows"));
        }
        let mut mean = Vec::with_capacity(raw.ncols());
        let mut scale = Vec::with_capacity(raw.ncols());
        for col in raw.columns() {
            let m = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            mean.push(m);
            scale.push(if sd > 1e-12 { sd } else { 1.0 });
        }
        Ok(Self { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.scale.len() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                got: self.scale.len(),
            });
        }
        if self.mean.iter().any(|v| !v.is_finite()) || self.scale.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("normalization", "needs finite means and positive finite scales"));
        }
        Ok(())
    }

    pub fn apply(&self, raw: &Array2<f64>) -> Result<Array2<f64>> {
        if raw.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: raw.ncols(),
            });
        }
        let mut out = raw.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.mean[j], self.scale[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }
}

pub fn raw_matrix(samples: &[Sample]) -> Array2<f64> {
    let mut m = Array2::zeros((samples.len(), FEATURE_DIM));
    for (mut row, s) in m.rows_mut().into_iter().zip(samples) {
        for (dst, v) in row.iter_mut().zip(raw_features(&s.channel, &s.split)) {
            *dst = v;
        }
    }
    m
}

/// Draws `n` realizations and labels them with the oracle. Infeasible draws
/// are dropped; the second value is how many.
pub fn generate_samples(
    params: &SystemParams,
    splits: &SplitSource,
    cfg: &ObjectiveConfig,
    n: usize,
    seed: u64,
) -> Result<(Vec<Sample>, usize)> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    params.validate()?;
    cfg.validate()?;
    splits.validate()?;
    let sampler = FadingSampler::new(params);
    let per_chunk: Vec<(Vec<Sample>, usize)> = chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(idx, len)| {
            let mut rng = stream(seed, idx);
            let mut kept = Vec::with_capacity(len);
            let mut dropped = 0;
            for _ in 0..len {
                let channel = sampler.sample(&mut rng);
                let split = splits.draw(&mut rng);
                let r = oracle_search(&channel, params, &split, cfg);
                if r.feasible {
                    kept.push(Sample {
                        channel,
                        split,
                        label: r.alpha_f_star,
                    });
                } else {
                    dropped += 1;
                }
            }
            (kept, dropped)
        })
        .collect();
    let excluded = per_chunk.iter().map(|c| c.1).sum();
    let samples = per_chunk.into_iter().flat_map(|c| c.0).collect();
    Ok((samples, excluded))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Normalized, `[n x FEATURE_DIM]`.
    pub features: Array2<f64>,
    pub labels: Array1<f64>,
    pub norm: Normalization,
    pub samples: Vec<Sample>,
    /// Draws dropped because no grid point met the rate floor.
    pub excluded: usize,
}

impl Dataset {
    /// Normalizes with `norm`, or with statistics fitted on these samples.
    pub fn from_samples(samples: Vec<Sample>, excluded: usize, norm: Option<&Normalization>) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("samples", "every draw was infeasible"));
        }
        let raw = raw_matrix(&samples);
        let norm = match norm {
            Some(n) => n.clone(),
            None => Normalization::fit(&raw)?,
        };
        let features = norm.apply(&raw)?;
        let labels = samples.iter().map(|s| s.label).collect();
        Ok(Self {
            features,
            labels,
            norm,
            samples,
            excluded,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Splits off the last `fraction` of rows as a validation set sharing
    /// this set's normalization.
    pub fn split_validation(self, fraction: f64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(invalid("validation_fraction", "must be in [0, 1)"));
        }
        let n_val = (self.len() as f64 * fraction).round() as usize;
        let n_train = self.len() - n_val;
        if n_train == 0 {
            return Err(invalid("validation_fraction", "leaves no training rows"));
        }
        let mut samples = self.samples;
        let val_samples = samples.split_off(n_train);
        let train = Dataset::from_samples(samples, self.excluded, Some(&self.norm))?;
        let val = if val_samples.is_empty() {
            Dataset {
                features: Array2::zeros((0, FEATURE_DIM)),
                labels: Array1::zeros(0),
                norm: self.norm.clone(),
                samples: Vec::new(),
                excluded: 0,
            }
        } else {
            Dataset::from_samples(val_samples, 0, Some(&self.norm))?
        };
        Ok((train, val))
    }
}

/// Samples, labels and normalizes a dataset in one step.
pub fn generate_dataset(
    params: &SystemParams,
    splits: &SplitSource,
    cfg: &ObjectiveConfig,
    n: usize,
    seed: u64,
    norm: Option<&Normalization>,
) -> Result<Dataset> {
    let (samples, excluded) = generate_samples(params, splits, cfg, n, seed)?;
    Dataset::from_samples(samples, excluded, norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::db_to_linear;

    fn params() -> SystemParams {
        SystemParams::uniform(10.0, 1.0, 0.7, 1.0, db_to_linear(5.0)).unwrap()
    }

    fn grid() -> SplitSource {
        SplitSource::EqualFromGrid((1..=9).map(|k| k as f64 / 10.0).collect())
    }

    #[test]
    fn fixed_seed_reproduces() {
        let cfg = ObjectiveConfig::default();
        let a = generate_dataset(&params(), &grid(), &cfg, 3000, 4, None).unwrap();
        let b = generate_dataset(&params(), &grid(), &cfg, 3000, 4, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len() + a.excluded, 3000);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let cfg = ObjectiveConfig::default();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| generate_samples(&params(), &grid(), &cfg, 40_000, 6).unwrap());
        let b = generate_samples(&params(), &grid(), &cfg, 40_000, 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_match_oracle_rerun() {
        let cfg = ObjectiveConfig::default();
        let p = params();
        let d = generate_dataset(&p, &grid(), &cfg, 2000, 7, None).unwrap();
        assert!(d.excluded > 0, "floor should reject some deep fades");
        for s in &d.samples {
            assert!(s.label > 0.5 && s.label < 1.0);
            let r = oracle_search(&s.channel, &p, &s.split, &cfg);
            assert!(r.feasible);
            assert_eq!(r.alpha_f_star, s.label);
        }
        assert!(d.features.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn fitted_features_are_standardized() {
        let d = generate_dataset(&params(), &grid(), &ObjectiveConfig::default(), 5000, 8, None).unwrap();
        for col in d.features.columns() {
            let m = col.mean().unwrap();
            let sd = (col.mapv(|v| (v - m) * (v - m)).mean().unwrap()).sqrt();
            assert!(m.abs() < 1e-10);
            assert!((sd - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn validation_split_keeps_normalization() {
        let d = generate_dataset(&params(), &grid(), &ObjectiveConfig::default(), 1000, 9, None).unwrap();
        let n = d.len();
        let norm = d.norm.clone();
        let (train, val) = d.split_validation(0.1).unwrap();
        assert_eq!(train.len() + val.len(), n);
        assert_eq!(val.len(), (n as f64 * 0.1).round() as usize);
        assert_eq!(train.norm, norm);
        assert_eq!(val.norm, norm);
    }

    #[test]
    fn fixed_split_feature_is_constant() {
        let s = PowerSplit::uniform(0.3).unwrap();
        let d = generate_dataset(&params(), &SplitSource::Fixed(s), &ObjectiveConfig::default(), 500, 1, None).unwrap();
        // constant column keeps scale 1 and centers to zero
        assert_eq!(d.norm.scale[5], 1.0);
        assert!(d.features.column(5).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = ObjectiveConfig::default();
        assert!(generate_samples(&params(), &grid(), &cfg, 0, 1).is_err());
        assert!(generate_samples(&params(), &SplitSource::EqualFromGrid(vec![]), &cfg, 10, 1).is_err());
        assert!(generate_samples(&params(), &SplitSource::EqualFromGrid(vec![1.2]), &cfg, 10, 1).is_err());
    }
}
