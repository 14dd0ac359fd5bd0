//! Hierarchical factorization models.
//!
//! [`multi_hntf`] is the shared-mixing model: an NCPD at rank `r_0`, then for
//! each layer a nonnegative `W` (`r_ℓ × r_{ℓ+1}`) applied to every mode's
//! factor, `X_i^(ℓ+1) = X_i^(ℓ) W^(ℓ)`. The matrix case and the supervised
//! variant live alongside it. [`hnmf`], [`hntf_i`] and [`standard_hncpd`]
//! are the baselines it is compared against.

mod baselines;
mod chain;
mod mixing;
mod multi;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::factorization::FitOptions;

pub use baselines::{
    hnmf, hnmf_supervised, hntf_i, independent_ranks, standard_hncpd,
    standard_hncpd_with_mode_seeds, HncpdResult,
};
pub use chain::{Layer, LayerChain, Method, CHAIN_FORMAT_VERSION};
pub use mixing::{fit_w, fit_w_matrix, MixingFit};
pub use multi::{multi_hntf, multi_hntf_matrix, multi_hntf_supervised};

/// Nonnegative `r_ℓ × r_{ℓ+1}` matrix collecting subtopics into supertopics.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingMatrix(Array2<f64>);

impl MixingMatrix {
    pub fn new(w: Array2<f64>) -> Result<Self> {
        let (from, to) = w.dim();
        if to == 0 || to >= from {
            return Err(Error::arg(format!(
                "a mixing matrix must map to fewer topics, got {from}x{to}"
            )));
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::arg("mixing matrix entries must be finite and ≥ 0"));
        }
        Ok(MixingMatrix(w))
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn from_rank(&self) -> usize {
        self.0.nrows()
    }

    pub fn to_rank(&self) -> usize {
        self.0.ncols()
    }
}

/// Ranks and per-layer fit options for a hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchySpec {
    ranks: Vec<usize>,
    layer_options: Vec<FitOptions>,
}

/// Seed offset between successive layers, so each layer draws a distinct
/// stream from one base seed.
const LAYER_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

pub(crate) fn derive_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(LAYER_SEED_STRIDE))
}

impl HierarchySpec {
    /// Uses `opts` at every layer; layer `ℓ` gets seed
    /// `opts.seed + ℓ · 0x9E3779B97F4A7C15 (mod 2⁶⁴)`.
    pub fn new(ranks: Vec<usize>, opts: FitOptions) -> Result<Self> {
        let layer_options = (0..ranks.len())
            .map(|l| opts.with_seed(derive_seed(opts.seed, l)))
            .collect();
        HierarchySpec::with_layer_options(ranks, layer_options)
    }

    pub fn with_layer_options(ranks: Vec<usize>, layer_options: Vec<FitOptions>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::arg("a hierarchy needs at least one rank"));
        }
        if ranks[ranks.len() - 1] == 0 {
            return Err(Error::arg("ranks must be positive"));
        }
        if ranks.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::arg(format!(
                "ranks must be strictly decreasing, got {ranks:?}"
            )));
        }
        if layer_options.len() != ranks.len() {
            return Err(Error::arg(format!(
                "{} ranks but {} layer option sets",
                ranks.len(),
                layer_options.len()
            )));
        }
        for o in &layer_options {
            o.validate()?;
        }
        Ok(HierarchySpec {
            ranks,
            layer_options,
        })
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn layer_options(&self) -> &[FitOptions] {
        &self.layer_options
    }

    pub fn depth(&self) -> usize {
        self.ranks.len()
    }

    /// The spec for layers `1..`, used by baselines that recurse.
    pub(crate) fn tail(&self) -> Option<HierarchySpec> {
        (self.ranks.len() > 1).then(|| HierarchySpec {
            ranks: self.ranks[1..].to_vec(),
            layer_options: self.layer_options[1..].to_vec(),
        })
    }
}

/// Class-indicator matrix `Y` (`classes × samples`) with class names.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMatrix {
    y: Array2<f64>,
    class_names: Vec<String>,
}

impl LabelMatrix {
    pub fn new(y: Array2<f64>, class_names: Vec<String>) -> Result<Self> {
        if y.nrows() != class_names.len() {
            return Err(Error::arg(format!(
                "{} label rows but {} class names",
                y.nrows(),
                class_names.len()
            )));
        }
        if y.is_empty() {
            return Err(Error::arg("label matrix is empty"));
        }
        if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::arg("label entries must be finite and ≥ 0"));
        }
        Ok(LabelMatrix { y, class_names })
    }

    /// One-hot labels from per-sample class indices.
    pub fn one_hot(classes: &[usize], class_names: Vec<String>) -> Result<Self> {
        let c = class_names.len();
        let mut y = Array2::zeros((c, classes.len()));
        for (j, &k) in classes.iter().enumerate() {
            if k >= c {
                return Err(Error::arg(format!("class index {k} out of range for {c} classes")));
            }
            y[[k, j]] = 1.0;
        }
        LabelMatrix::new(y, class_names)
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.y
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.y.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.y.ncols()
    }

    /// Per-sample class: the row of the largest entry, lowest index on ties.
    pub fn classes(&self) -> Vec<usize> {
        crate::eval::column_argmax(&self.y)
    }
}
