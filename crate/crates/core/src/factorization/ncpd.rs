use ndarray::Array2;

use super::{converged, mu_update, random_matrix, squared_residual, FitOptions};
use crate::error::{Error, Result};
use crate::tensor::{khatri_rao_except, DenseTensor, FactorSet};

/// Every mode unfolding of a tensor, computed once and reused across
/// iterations.
#[derive(Clone, Debug)]
pub struct TensorUnfoldings {
    shape: Vec<usize>,
    mats: Vec<Array2<f64>>,
    norm_sq: f64,
}

impl TensorUnfoldings {
    pub fn new(t: &DenseTensor) -> Self {
        let mats = (0..t.order())
            .map(|i| t.unfold(i).expect("mode in range"))
            .collect();
        let norm_sq = t.values().iter().map(|v| v * v).sum();
        TensorUnfoldings {
            shape: t.shape().to_vec(),
            mats,
            norm_sq,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn mode(&self, i: usize) -> &Array2<f64> {
        &self.mats[i]
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// `‖T − [[factors]]‖_F²`, evaluated on the mode-0 unfolding.
    pub fn squared_loss(&self, factors: &[Array2<f64>]) -> f64 {
        let k = khatri_rao_except(factors, 0).expect("factor columns agree");
        squared_residual(&self.mats[0], &factors[0].dot(&k.t()))
    }

    /// `T_(i) · K_i`, the matricized tensor times Khatri–Rao product.
    pub fn mttkrp(&self, factors: &[Array2<f64>], i: usize) -> Array2<f64> {
        let k = khatri_rao_except(factors, i).expect("factor columns agree");
        self.mats[i].dot(&k)
    }
}

/// `K_iᵀK_i` computed as the Hadamard product of the other factors' Grams.
pub(crate) fn gram_except(factors: &[Array2<f64>], skip: usize) -> Array2<f64> {
    let r = factors[0].ncols();
    let mut g = Array2::<f64>::ones((r, r));
    for (j, f) in factors.iter().enumerate() {
        if j != skip {
            g *= &f.t().dot(f);
        }
    }
    g
}

/// Result of [`ncpd`].
#[derive(Clone, Debug)]
pub struct NcpdResult {
    pub factors: FactorSet,
    /// `‖T − [[X_1..X_k]]‖_F²` at initialization, then once per sweep.
    pub loss_history: Vec<f64>,
}

impl NcpdResult {
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("history starts at init")
    }
}

/// Nonnegative CP decomposition by cyclic multiplicative updates.
///
/// Factor matrices are initialized in mode order, each `n_i × r`.
pub fn ncpd(t: &DenseTensor, r: usize, opts: &FitOptions) -> Result<NcpdResult> {
    ncpd_unfolded(&TensorUnfoldings::new(t), r, opts)
}

pub(crate) fn ncpd_unfolded(
    t: &TensorUnfoldings,
    r: usize,
    opts: &FitOptions,
) -> Result<NcpdResult> {
    opts.validate()?;
    if r == 0 {
        return Err(Error::arg("ncpd rank must be at least 1"));
    }
    let mut rng = opts.rng();
    let mut factors: Vec<Array2<f64>> = t
        .shape()
        .iter()
        .map(|&n| random_matrix(n, r, &mut rng))
        .collect();

    let mut history = vec![t.squared_loss(&factors)];
    for _ in 0..opts.max_iters {
        for i in 0..factors.len() {
            let numer = t.mttkrp(&factors, i);
            let denom = factors[i].dot(&gram_except(&factors, i));
            mu_update(&mut factors[i], &numer, &denom, opts.epsilon);
        }
        let cur = t.squared_loss(&factors);
        let prev = *history.last().expect("non-empty");
        history.push(cur);
        if converged(prev, cur, opts.tol) {
            break;
        }
    }
    Ok(NcpdResult {
        factors: FactorSet::from_parts_unchecked(factors),
        loss_history: history,
    })
}
