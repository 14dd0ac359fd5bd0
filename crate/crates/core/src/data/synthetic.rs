//! Hierarchical block tensors with a known topic tree.
//!
//! Level 0 holds the leaf blocks. Each block names, per mode, a half-open
//! index range; the leaf tensor is the sum of the outer products of those
//! range indicators, scaled by the leaf amplitude on mode 0. Coarser levels
//! group blocks of the level below through `parent` links and must contain
//! their children's ranges in every mode.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::text::MAX_DENSE_ENTRIES;
use crate::tensor::{cp_reconstruct, DenseTensor, FactorSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    /// `[start, end)` per mode.
    pub ranges: Vec<[usize; 2]>,
    /// Index of the enclosing block one level up; `None` on the top level.
    #[serde(default)]
    pub parent: Option<usize>,
}

/// Missing fields take their values from [`SyntheticSpec::default`] when
/// deserializing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub shape: Vec<usize>,
    /// Finest level first.
    pub levels: Vec<Vec<Block>>,
    /// One per leaf block.
    pub amplitudes: Vec<f64>,
    /// Variance of the Gaussian noise; samples are clipped at zero and added.
    pub noise_sigma2: f64,
    pub seed: u64,
}

fn diag(ranges: &[(usize, usize)], parents: &[Option<usize>]) -> Vec<Block> {
    ranges
        .iter()
        .zip(parents)
        .map(|(&(a, b), &parent)| Block {
            ranges: vec![[a, b]; 3],
            parent,
        })
        .collect()
}

impl Default for SyntheticSpec {
    /// 40×40×40 tensor, seven leaf blocks along the diagonal merging into
    /// four and then two groups. Neighbouring leaves overlap.
    fn default() -> Self {
        let leaves = diag(
            &[(0, 8), (4, 12), (8, 16), (14, 22), (18, 30), (26, 34), (32, 40)],
            &[Some(0), Some(0), Some(1), Some(1), Some(2), Some(3), Some(3)],
        );
        let mids = diag(
            &[(0, 12), (8, 22), (18, 30), (26, 40)],
            &[Some(0), Some(0), Some(1), Some(1)],
        );
        let tops = diag(&[(0, 22), (18, 40)], &[None, None]);
        SyntheticSpec {
            shape: vec![40, 40, 40],
            levels: vec![leaves, mids, tops],
            amplitudes: vec![1.0; 7],
            noise_sigma2: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        SyntheticSpec { seed, ..self }
    }

    pub fn with_noise(self, noise_sigma2: f64) -> Self {
        SyntheticSpec {
            noise_sigma2,
            ..self
        }
    }

    /// Block counts per level, finest first.
    pub fn ranks(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.shape.len();
        if k < 2 || self.shape.contains(&0) {
            return Err(Error::arg(format!("invalid synthetic shape {:?}", self.shape)));
        }
        let entries = self.shape.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        if entries.is_none_or(|n| n > MAX_DENSE_ENTRIES) {
            return Err(Error::arg(format!("synthetic shape {:?} is too large", self.shape)));
        }
        if self.levels.is_empty() {
            return Err(Error::arg("synthetic spec needs at least one level"));
        }
        if !(self.noise_sigma2.is_finite() && self.noise_sigma2 >= 0.0) {
            return Err(Error::arg(format!("noise_sigma2 must be ≥ 0, got {}", self.noise_sigma2)));
        }
        if self.amplitudes.len() != self.levels[0].len() {
            return Err(Error::arg(format!(
                "{} amplitudes for {} leaf blocks",
                self.amplitudes.len(),
                self.levels[0].len()
            )));
        }
        if self.amplitudes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::arg("amplitudes must be positive and finite"));
        }
        let depth = self.levels.len();
        for (l, level) in self.levels.iter().enumerate() {
            if level.is_empty() {
                return Err(Error::arg(format!("level {l} has no blocks")));
            }
            for (b, block) in level.iter().enumerate() {
                let at = format!("level {l} block {b}");
                if block.ranges.len() != k {
                    return Err(Error::arg(format!("{at}: {} ranges for order {k}", block.ranges.len())));
                }
                for (i, &[s, e]) in block.ranges.iter().enumerate() {
                    if s >= e || e > self.shape[i] {
                        return Err(Error::arg(format!("{at}: bad range [{s}, {e}) in mode {i}")));
                    }
                }
                match (block.parent, l + 1 < depth) {
                    (None, false) => {}
                    (Some(_), false) => {
                        return Err(Error::arg(format!("{at}: top-level block has a parent")))
                    }
                    (None, true) => return Err(Error::arg(format!("{at}: missing parent"))),
                    (Some(p), true) => {
                        let Some(parent) = self.levels[l + 1].get(p) else {
                            return Err(Error::arg(format!("{at}: parent {p} does not exist")));
                        };
                        let nested = block
                            .ranges
                            .iter()
                            .zip(&parent.ranges)
                            .all(|(c, q)| q[0] <= c[0] && c[1] <= q[1]);
                        if parent.ranges.len() == k && !nested {
                            return Err(Error::arg(format!(
                                "{at}: ranges not contained in parent {p}"
                            )));
                        }
                    }
                }
            }
            if l > 0 {
                for p in 0..level.len() {
                    if !self.levels[l - 1].iter().any(|c| c.parent == Some(p)) {
                        return Err(Error::arg(format!("level {l} block {p} has no children")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub tensor: DenseTensor,
    pub noiseless: DenseTensor,
    /// Ground-truth CP factors per level, finest first.
    pub truth: Vec<FactorSet>,
    /// 0/1 matrices with `truth[l + 1] == truth[l] · membership[l]` in every mode.
    pub membership: Vec<Array2<f64>>,
}

/// Builds the block tensor, adds clipped Gaussian noise drawn from a ChaCha8
/// generator seeded with `spec.seed`, and returns the ground truth alongside.
/// The noiseless part does not depend on the seed.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let leaves = &spec.levels[0];
    let factors: Vec<Array2<f64>> = (0..spec.shape.len())
        .map(|i| {
            let mut f = Array2::zeros((spec.shape[i], leaves.len()));
            for (j, block) in leaves.iter().enumerate() {
                let [s, e] = block.ranges[i];
                let v = if i == 0 { spec.amplitudes[j] } else { 1.0 };
                f.slice_mut(ndarray::s![s..e, j]).fill(v);
            }
            f
        })
        .collect();
    let mut truth = vec![FactorSet::new(factors)?];
    let mut membership = Vec::new();
    for l in 1..spec.levels.len() {
        let mut m = Array2::zeros((spec.levels[l - 1].len(), spec.levels[l].len()));
        for (c, block) in spec.levels[l - 1].iter().enumerate() {
            m[[c, block.parent.expect("validated")]] = 1.0;
        }
        let prev = &truth[l - 1];
        let next = prev.factors().iter().map(|f| f.dot(&m)).collect();
        truth.push(FactorSet::new(next)?);
        membership.push(m);
    }
    let noiseless = cp_reconstruct(&truth[0]);
    let mut values = noiseless.values().to_vec();
    if spec.noise_sigma2 > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma2.sqrt())
            .map_err(|e| Error::arg(format!("noise distribution: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for v in &mut values {
            *v += normal.sample(&mut rng).max(0.0);
        }
    }
    let tensor = DenseTensor::new(spec.shape.clone(), values)?;
    Ok(SyntheticData {
        tensor,
        noiseless,
        truth,
        membership,
    })
}
