//! Single-layer nonnegative factorizations solved by multiplicative updates.
//!
//! Every solver initializes its factors with i.i.d. samples from the open
//! interval (0, 1), drawn from a ChaCha8 generator seeded with
//! `FitOptions::seed` via `SeedableRng::seed_from_u64`. Factors are filled
//! in row-major order, one matrix after another, in the order documented on
//! each solver. The same seed therefore reproduces a fit exactly.
//!
//! Denominators carry an additive `epsilon` guard. Factors are never
//! rescaled between iterations.

mod ncpd;
mod nmf;
mod supervised;

use ndarray::{Array2, Zip};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ncpd::{ncpd, NcpdResult, TensorUnfoldings};
pub(crate) use ncpd::{gram_except, ncpd_unfolded};
pub use nmf::{nmf, NmfResult};
pub use supervised::{
    fit_label_dictionary, supervised_nmf, supervised_nmf_step, SupervisedFactors,
    SupervisedNmfResult,
};

/// Iteration controls shared by every solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Stop once the relative objective improvement of an iteration drops
    /// below this value.
    pub tol: f64,
    pub seed: u64,
    pub epsilon: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 500,
            tol: 1e-6,
            seed: 0,
            epsilon: 1e-12,
        }
    }
}

impl FitOptions {
    pub fn with_seed(self, seed: u64) -> Self {
        FitOptions { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::arg("max_iters must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::arg(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::arg(format!("tol must be nonnegative, got {}", self.tol)));
        }
        Ok(())
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// `rows × cols` matrix of Open01 samples, filled row-major.
pub(crate) fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(Open01))
}

/// `base ← base ∘ numer ⊘ (denom + eps)`.
pub(crate) fn mu_update(base: &mut Array2<f64>, numer: &Array2<f64>, denom: &Array2<f64>, eps: f64) {
    Zip::from(base)
        .and(numer)
        .and(denom)
        .for_each(|b, &n, &d| *b *= n / (d + eps));
}

/// True when the step from `prev` to `cur` improved the objective by less
/// than `tol` relative to `prev`.
pub(crate) fn converged(prev: f64, cur: f64, tol: f64) -> bool {
    prev <= 0.0 || (prev - cur) / prev < tol
}

pub(crate) fn squared_residual(x: &Array2<f64>, approx: &Array2<f64>) -> f64 {
    Zip::from(x)
        .and(approx)
        .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
}

pub(crate) fn check_nonnegative(name: &str, m: &Array2<f64>) -> Result<()> {
    if m.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::arg(format!(
            "{name} must be finite and entrywise nonnegative"
        )));
    }
    Ok(())
}
