//! Dense nonnegative tensors, CP factor sets, and the algebra that connects
//! them (mode unfolding, Khatri–Rao products, CP reconstruction).
//!
//! Modes are indexed from zero throughout the library. Tensor storage is
//! row-major: the last mode varies fastest in the flat value array.
//!
//! The mode-`i` unfolding places `i_mode` on the rows. Its columns enumerate
//! the remaining modes with the *first* remaining mode varying fastest, so
//! that for any CP model
//!
//! ```text
//! unfold([[F_0, .., F_{k-1}]], i) == F_i * khatri_rao(F_{k-1}, .., F_{i+1}, F_{i-1}, .., F_0)^T
//! ```
//!
//! where `khatri_rao` lets the index of its *last* argument vary fastest.

mod ops;
pub mod text;

use ndarray::Array2;

use crate::error::{Error, Result};

pub use ops::{
    cp_reconstruct, frobenius_distance, khatri_rao, khatri_rao_except, relative_loss,
    squared_distance,
};

/// An order-k (k ≥ 2) dense tensor with nonnegative finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    /// Builds a tensor from a shape and row-major values, validating every
    /// invariant (order ≥ 2, positive dims, matching length, entries ≥ 0).
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let len = checked_len(&shape)?;
        if values.len() != len {
            return Err(Error::arg(format!(
                "tensor of shape {shape:?} needs {len} values, got {}",
                values.len()
            )));
        }
        if let Some((idx, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::arg(format!(
                "tensor entry {idx} is {v}; entries must be finite and nonnegative"
            )));
        }
        Ok(DenseTensor { shape, values })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = checked_len(&shape)?;
        Ok(DenseTensor {
            shape,
            values: vec![0.0; len],
        })
    }

    /// Wraps a nonnegative matrix as an order-2 tensor.
    pub fn from_matrix(m: &Array2<f64>) -> Result<Self> {
        let (r, c) = m.dim();
        DenseTensor::new(vec![r, c], m.iter().copied().collect())
    }

    pub(crate) fn from_parts_unchecked(shape: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        DenseTensor { shape, values }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Row-major flat offset of a multi-index, or `None` when out of range.
    pub fn offset(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.shape.len() {
            return None;
        }
        let mut off = 0usize;
        for (&i, &n) in index.iter().zip(&self.shape) {
            if i >= n {
                return None;
            }
            off = off * n + i;
        }
        Some(off)
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        self.offset(index).map(|o| self.values[o])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The order-2 tensor as a matrix; `None` for higher orders.
    pub fn to_matrix(&self) -> Option<Array2<f64>> {
        match self.shape[..] {
            [r, c] => Array2::from_shape_vec((r, c), self.values.clone()).ok(),
            _ => None,
        }
    }

    /// Reorders the modes: axis `a` of the result is axis `perm[a]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<DenseTensor> {
        let k = self.order();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::arg(format!(
                "{perm:?} is not a permutation of 0..{k}"
            )));
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let old_strides = row_major_strides(&self.shape);
        let strides: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let mut values = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; k];
        let mut src = 0usize;
        for _ in 0..self.len() {
            values.push(self.values[src]);
            // odometer increment, last axis fastest
            for a in (0..k).rev() {
                idx[a] += 1;
                src += strides[a];
                if idx[a] < new_shape[a] {
                    break;
                }
                src -= strides[a] * new_shape[a];
                idx[a] = 0;
            }
        }
        Ok(DenseTensor::from_parts_unchecked(new_shape, values))
    }

    /// Mode-`mode` unfolding (`n_mode × ∏_{j≠mode} n_j`).
    pub fn unfold(&self, mode: usize) -> Result<Array2<f64>> {
        let k = self.order();
        if mode >= k {
            return Err(Error::arg(format!(
                "mode {mode} out of range for an order-{k} tensor"
            )));
        }
        let rows = self.shape[mode];
        let cols = self.len() / rows;
        let col_strides = unfold_column_strides(&self.shape, mode);
        let mut out = Array2::<f64>::zeros((rows, cols));
        let mut idx = vec![0usize; k];
        let mut col = 0usize;
        for &v in &self.values {
            out[[idx[mode], col]] = v;
            for a in (0..k).rev() {
                idx[a] += 1;
                col += col_strides[a];
                if idx[a] < self.shape[a] {
                    break;
                }
                col -= col_strides[a] * self.shape[a];
                idx[a] = 0;
            }
        }
        Ok(out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &Array2<f64>, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
        let len = checked_len(shape)?;
        let k = shape.len();
        if mode >= k {
            return Err(Error::arg(format!(
                "mode {mode} out of range for an order-{k} tensor"
            )));
        }
        if m.nrows() != shape[mode] || m.nrows() * m.ncols() != len {
            return Err(Error::arg(format!(
                "a {}x{} matrix is not a mode-{mode} unfolding of shape {shape:?}",
                m.nrows(),
                m.ncols()
            )));
        }
        let col_strides = unfold_column_strides(shape, mode);
        let mut values = Vec::with_capacity(len);
        let mut idx = vec![0usize; k];
        let mut col = 0usize;
        for _ in 0..len {
            values.push(m[[idx[mode], col]]);
            for a in (0..k).rev() {
                idx[a] += 1;
                col += col_strides[a];
                if idx[a] < shape[a] {
                    break;
                }
                col -= col_strides[a] * shape[a];
                idx[a] = 0;
            }
        }
        DenseTensor::new(shape.to_vec(), values)
    }
}

/// Product of the shape, rejecting orders below 2, zero dims, and overflow.
fn checked_len(shape: &[usize]) -> Result<usize> {
    if shape.len() < 2 {
        return Err(Error::arg(format!(
            "tensor order must be at least 2, got {}",
            shape.len()
        )));
    }
    if shape.contains(&0) {
        return Err(Error::arg(format!("tensor dims must be positive: {shape:?}")));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::arg(format!("tensor shape {shape:?} overflows")))
}

fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    strides
}

/// Column stride of each axis in the mode-`mode` unfolding; zero for `mode`.
fn unfold_column_strides(shape: &[usize], mode: usize) -> Vec<usize> {
    let mut strides = vec![0usize; shape.len()];
    let mut acc = 1usize;
    for (a, &n) in shape.iter().enumerate() {
        if a != mode {
            strides[a] = acc;
            acc *= n;
        }
    }
    strides
}

/// The k nonnegative factor matrices of a rank-r CP model; factor `i` is
/// `n_i × r`. For order-2 models the factors are `(A, Sᵀ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorSet {
    rank: usize,
    factors: Vec<Array2<f64>>,
}

impl FactorSet {
    pub fn new(factors: Vec<Array2<f64>>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::arg(format!(
                "a factor set needs at least 2 factors, got {}",
                factors.len()
            )));
        }
        let rank = factors[0].ncols();
        if rank == 0 {
            return Err(Error::arg("factor rank must be positive"));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.ncols() != rank {
                return Err(Error::arg(format!(
                    "factor {i} has {} columns, expected {rank}",
                    f.ncols()
                )));
            }
            if f.nrows() == 0 {
                return Err(Error::arg(format!("factor {i} has no rows")));
            }
            if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::arg(format!(
                    "factor {i} has a negative or non-finite entry"
                )));
            }
        }
        Ok(FactorSet { rank, factors })
    }

    pub(crate) fn from_parts_unchecked(factors: Vec<Array2<f64>>) -> Self {
        let rank = factors[0].ncols();
        FactorSet { rank, factors }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Array2<f64>] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &Array2<f64> {
        &self.factors[mode]
    }

    pub fn into_factors(self) -> Vec<Array2<f64>> {
        self.factors
    }

    /// Mode sizes `n_i`.
    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_bad_tensors() {
        assert!(DenseTensor::new(vec![2], vec![1.0, 2.0]).is_err());
        assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
        assert!(DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0]).is_err());
        assert!(DenseTensor::new(vec![1, 2], vec![1.0, -1.0]).is_err());
        assert!(DenseTensor::new(vec![1, 2], vec![1.0, f64::NAN]).is_err());
        assert!(DenseTensor::new(vec![usize::MAX, 4], vec![]).is_err());
    }

    #[test]
    fn unfold_of_matrix_mode0_is_identity() {
        let m = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let t = DenseTensor::from_matrix(&m).unwrap();
        assert_eq!(t.unfold(0).unwrap(), m);
        assert_eq!(t.unfold(1).unwrap(), m.t());
    }

    #[test]
    fn unfold_one_hot_placement() {
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        let t = DenseTensor::new(vec![2, 2, 2], v).unwrap();
        let u = t.unfold(1).unwrap();
        assert_eq!(u.dim(), (2, 4));
        assert_eq!(u[[0, 0]], 1.0);
        assert_eq!(u.sum(), 1.0);
    }

    #[test]
    fn unfold_mode_out_of_range() {
        let t = DenseTensor::zeros(vec![2, 2]).unwrap();
        assert!(matches!(t.unfold(2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn permute_swaps_axes() {
        let m = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let t = DenseTensor::from_matrix(&m).unwrap();
        let p = t.permute(&[1, 0]).unwrap();
        assert_eq!(p.to_matrix().unwrap(), m.t());
        assert!(t.permute(&[0, 0]).is_err());
    }

    #[test]
    fn factor_set_validation() {
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let b = array![[1.0], [1.0]];
        assert!(FactorSet::new(vec![a.clone(), b]).is_err());
        assert!(FactorSet::new(vec![a.clone()]).is_err());
        assert!(FactorSet::new(vec![a.clone(), -a.clone()]).is_err());
        let f = FactorSet::new(vec![a.clone(), a]).unwrap();
        assert_eq!(f.rank(), 2);
        assert_eq!(f.shape(), vec![2, 2]);
    }
}
