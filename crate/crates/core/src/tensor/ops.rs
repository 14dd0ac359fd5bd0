use ndarray::Array2;

use super::{DenseTensor, FactorSet};
use crate::error::{Error, Result};

/// Column-wise Kronecker product. Row `(i_0, .., i_{p-1})` of the result sits
/// at offset `i_0 * n_1 * .. * n_{p-1} + .. + i_{p-1}`, so the index of the
/// last matrix varies fastest.
pub fn khatri_rao(ms: &[&Array2<f64>]) -> Result<Array2<f64>> {
    let (first, rest) = ms
        .split_first()
        .ok_or_else(|| Error::arg("khatri_rao needs at least one matrix"))?;
    let r = first.ncols();
    if let Some(bad) = rest.iter().find(|m| m.ncols() != r) {
        return Err(Error::arg(format!(
            "khatri_rao column mismatch: {} vs {r}",
            bad.ncols()
        )));
    }
    let mut acc = (*first).clone();
    for m in rest {
        let (ra, rb) = (acc.nrows(), m.nrows());
        let mut next = Array2::<f64>::zeros((ra * rb, r));
        for a in 0..ra {
            for b in 0..rb {
                let row = a * rb + b;
                for j in 0..r {
                    next[[row, j]] = acc[[a, j]] * m[[b, j]];
                }
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Khatri–Rao product of every factor except `skip`, in reverse mode order.
/// This is the matrix `K` with `unfold(cp, skip) == factors[skip] · Kᵀ`.
pub fn khatri_rao_except(factors: &[Array2<f64>], skip: usize) -> Result<Array2<f64>> {
    let others: Vec<&Array2<f64>> = factors
        .iter()
        .enumerate()
        .rev()
        .filter(|(j, _)| *j != skip)
        .map(|(_, f)| f)
        .collect();
    khatri_rao(&others)
}

/// Dense tensor of a CP model: entry `(i_0..i_{k-1}) = Σ_j ∏_m F_m[i_m, j]`.
pub fn cp_reconstruct(f: &FactorSet) -> DenseTensor {
    let factors = f.factors();
    let k = factors.len();
    let head: Vec<&Array2<f64>> = factors[..k - 1].iter().collect();
    let kr = khatri_rao(&head).expect("factor set columns agree");
    let flat = kr.dot(&factors[k - 1].t());
    // `flat` is freshly allocated in standard layout, so its iteration order is row-major
    let values: Vec<f64> = flat.iter().copied().collect();
    DenseTensor::from_parts_unchecked(f.shape(), values)
}

/// `‖x − xhat‖_F²`.
pub fn squared_distance(x: &DenseTensor, xhat: &DenseTensor) -> Result<f64> {
    if x.shape() != xhat.shape() {
        return Err(Error::arg(format!(
            "shape mismatch: {:?} vs {:?}",
            x.shape(),
            xhat.shape()
        )));
    }
    Ok(x.values()
        .iter()
        .zip(xhat.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// `‖x − xhat‖_F`.
pub fn frobenius_distance(x: &DenseTensor, xhat: &DenseTensor) -> Result<f64> {
    squared_distance(x, xhat).map(f64::sqrt)
}

/// `‖x − xhat‖_F / ‖x‖_F`.
pub fn relative_loss(x: &DenseTensor, xhat: &DenseTensor) -> Result<f64> {
    let dist = frobenius_distance(x, xhat)?;
    let norm = x.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::arg("relative loss is undefined for a zero tensor"));
    }
    Ok(dist / norm)
}
