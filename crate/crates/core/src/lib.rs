//! Hierarchical nonnegative matrix and tensor factorization.
//!
//! The central model fits a nonnegative CP decomposition at a fine rank and
//! then learns, layer by layer, a nonnegative mixing matrix `W` that collects
//! the current topics into fewer supertopics. The same `W` multiplies every
//! mode's factor matrix, so each coarser layer is itself a CP model of the
//! data. On matrices this reduces to `A' = AW`, `S' = WᵀS`.
//!
//! Modules:
//! * [`tensor`]: dense tensors, unfoldings, Khatri–Rao products, CP algebra.
//! * [`factorization`]: NMF, NCPD and supervised NMF by multiplicative updates.
//! * [`hierarchy`]: the shared-mixing hierarchy, its supervised variant, and
//!   the HNMF, HNTF-i and standard HNCPD baselines.
//! * [`data`]: synthetic hierarchical tensors and file loaders.
//! * [`eval`]: losses, classification accuracy, keywords, heatmaps, reports.

pub mod data;
pub mod error;
pub mod eval;
pub mod factorization;
pub mod hierarchy;
pub mod tensor;

mod matrix_serde;

pub use error::{Error, Result};
pub use factorization::FitOptions;
pub use hierarchy::{HierarchySpec, LayerChain, Method};
pub use tensor::{DenseTensor, FactorSet};

#[cfg(test)]
pub(crate) mod test_util {
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::tensor::FactorSet;

    pub fn random_nonneg(m: usize, n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        Array2::from_shape_simple_fn((m, n), || rng.random::<f64>())
    }

    /// Factor set with entries `offset + U[0,1)`.
    pub fn random_factor_set(shape: &[usize], r: usize, seed: u64, offset: f64) -> FactorSet {
        let factors = shape
            .iter()
            .enumerate()
            .map(|(i, &n)| random_nonneg(n, r, seed * 31 + i as u64) + offset)
            .collect();
        FactorSet::new(factors).unwrap()
    }
}
