use ndarray::{concatenate, Array2, Axis};

use super::chain::{Layer, LayerChain, Method};
use super::mixing::{fit_w_matrix, fit_w_unfolded};
use super::{HierarchySpec, LabelMatrix};
use crate::error::{Error, Result};
use crate::factorization::{
    fit_label_dictionary, ncpd_unfolded, nmf, supervised_nmf, TensorUnfoldings,
};
use crate::tensor::{DenseTensor, FactorSet};

/// Shared-mixing hierarchy on a tensor of any order ≥ 2.
///
/// Layer 0 is an NCPD at `r_0`. Each following layer is
/// `X_i^(ℓ+1) = X_i^(ℓ) W^(ℓ)` for every mode `i`, with one `W^(ℓ)` fitted by
/// [`super::fit_w`] and stored on layer `ℓ`.
pub fn multi_hntf(t: &DenseTensor, spec: &HierarchySpec) -> Result<LayerChain> {
    let u = TensorUnfoldings::new(t);
    let ranks = spec.ranks();
    let opts = spec.layer_options();
    let min_dim = t.shape().iter().copied().min().unwrap_or(0);
    if ranks[0] > min_dim {
        log::warn!(
            "initial rank {} exceeds the smallest mode size {min_dim}",
            ranks[0]
        );
    }
    let mut chain = LayerChain::new(Method::MultiHntf, spec);
    let mut factors = ncpd_unfolded(&u, ranks[0], &opts[0])?.factors;
    for l in 0..spec.depth() {
        let mut layer = Layer::evaluate(t, ranks[l], factors.clone())?;
        if l + 1 < spec.depth() {
            let fit = fit_w_unfolded(&u, &factors, ranks[l + 1], &opts[l + 1])?;
            let w = fit.w.as_array();
            let next = factors.factors().iter().map(|x| x.dot(w)).collect();
            layer.mixing = Some(fit.w);
            factors = FactorSet::from_parts_unchecked(next);
        }
        chain.layers.push(layer);
    }
    Ok(chain)
}

/// The matrix model written directly in terms of `(A, S, W)`:
/// `X ≈ A^(0)S^(0)` by NMF, then `A^(ℓ+1) = A^(ℓ)W^(ℓ)` and
/// `S^(ℓ+1) = (W^(ℓ))ᵀS^(ℓ)`. Layer factors are stored as `(A, Sᵀ)`.
pub fn multi_hntf_matrix(x: &Array2<f64>, spec: &HierarchySpec) -> Result<LayerChain> {
    let t = DenseTensor::from_matrix(x)?;
    let ranks = spec.ranks();
    let opts = spec.layer_options();
    let base = nmf(x, ranks[0], &opts[0])?;
    let (mut a, mut s) = (base.a, base.s);
    let mut chain = LayerChain::new(Method::MultiHntf, spec);
    for l in 0..spec.depth() {
        let factors = FactorSet::from_parts_unchecked(vec![a.clone(), s.t().to_owned()]);
        let mut layer = Layer::evaluate(&t, ranks[l], factors)?;
        if l + 1 < spec.depth() {
            let fit = fit_w_matrix(x, &a, &s, ranks[l + 1], &opts[l + 1])?;
            let w = fit.w.as_array();
            a = a.dot(w);
            s = w.t().dot(&s);
            layer.mixing = Some(fit.w);
        }
        chain.layers.push(layer);
    }
    Ok(chain)
}

pub(crate) fn require_matrix(t: &DenseTensor, what: &str) -> Result<Array2<f64>> {
    t.to_matrix().ok_or_else(|| {
        Error::Unsupported(format!(
            "{what} needs order-2 input, got order {}",
            t.order()
        ))
    })
}

pub(crate) fn check_labels(x: &Array2<f64>, labels: &LabelMatrix, lambda: f64) -> Result<()> {
    if labels.num_samples() != x.ncols() {
        return Err(Error::arg(format!(
            "labels cover {} samples but the data has {} columns",
            labels.num_samples(),
            x.ncols()
        )));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::arg(format!("lambda must be finite and ≥ 0, got {lambda}")));
    }
    Ok(())
}

/// Supervised shared-mixing hierarchy on a matrix (samples are columns).
///
/// Layer 0 minimizes `‖X − AS‖² + λ‖Y − BS‖²`. Each `W` is fitted on the
/// stacked problem `[X; √λ·Y] ≈ [A; √λ·B]·S`, so the labels shape the
/// merge. After `A ← AW`, `S ← WᵀS`, the label dictionary is refitted
/// against the new `S`.
pub fn multi_hntf_supervised(
    t: &DenseTensor,
    labels: &LabelMatrix,
    lambda: f64,
    spec: &HierarchySpec,
) -> Result<LayerChain> {
    let x = require_matrix(t, "supervision")?;
    check_labels(&x, labels, lambda)?;
    let y = labels.matrix();
    let ranks = spec.ranks();
    let opts = spec.layer_options();
    let root = lambda.sqrt();

    let base = supervised_nmf(&x, y, ranks[0], lambda, &opts[0])?.factors;
    let (mut a, mut b, mut s) = (base.a, base.b, base.s);
    let mut chain = LayerChain::new(Method::MultiHntf, spec);
    chain.supervision_lambda = Some(lambda);
    for l in 0..spec.depth() {
        let factors = FactorSet::from_parts_unchecked(vec![a.clone(), s.t().to_owned()]);
        let mut layer = Layer::evaluate(t, ranks[l], factors)?;
        chain.label_dictionaries.push(b.clone());
        if l + 1 < spec.depth() {
            let x_aug = concatenate(Axis(0), &[x.view(), (y * root).view()])
                .expect("column counts checked");
            let a_aug = concatenate(Axis(0), &[a.view(), (&b * root).view()])
                .expect("ranks agree");
            let fit = fit_w_matrix(&x_aug, &a_aug, &s, ranks[l + 1], &opts[l + 1])?;
            let w = fit.w.as_array();
            a = a.dot(w);
            s = w.t().dot(&s);
            b = fit_label_dictionary(y, &s, &opts[l + 1])?;
            layer.mixing = Some(fit.w);
        }
        chain.layers.push(layer);
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::{ncpd, FitOptions};
    use crate::test_util::random_nonneg;

    #[test]
    fn single_rank_is_plain_ncpd() {
        let t = DenseTensor::new(vec![4, 3, 5], random_nonneg(4, 15, 1).into_raw_vec_and_offset().0)
            .unwrap();
        let opts = FitOptions::default().with_seed(3);
        let spec = HierarchySpec::new(vec![2], opts).unwrap();
        let chain = multi_hntf(&t, &spec).unwrap();
        let direct = ncpd(&t, 2, &opts).unwrap();
        assert_eq!(chain.layers.len(), 1);
        assert_eq!(chain.layers[0].factors, direct.factors);
        assert!(chain.layers[0].mixing.is_none());
    }

    #[test]
    fn shared_w_identity_is_bitwise() {
        let t = DenseTensor::new(vec![5, 4, 6], random_nonneg(5, 24, 2).into_raw_vec_and_offset().0)
            .unwrap();
        let spec = HierarchySpec::new(vec![4, 2, 1], FitOptions::default()).unwrap();
        let chain = multi_hntf(&t, &spec).unwrap();
        for pair in chain.layers.windows(2) {
            let w = pair[0].mixing.as_ref().unwrap().as_array();
            for (x, next) in pair[0].factors.factors().iter().zip(pair[1].factors.factors()) {
                assert_eq!(&x.dot(w), next);
            }
        }
    }

    #[test]
    fn matrix_model_propagates_a_and_s() {
        let x = random_nonneg(20, 15, 4);
        let spec = HierarchySpec::new(vec![5, 3], FitOptions::default()).unwrap();
        let chain = multi_hntf_matrix(&x, &spec).unwrap();
        let w = chain.layers[0].mixing.as_ref().unwrap().as_array();
        let a0 = chain.layers[0].factors.factor(0);
        let st0 = chain.layers[0].factors.factor(1);
        assert_eq!(&a0.dot(w), chain.layers[1].factors.factor(0));
        assert_eq!(w.t().dot(&st0.t()).t(), chain.layers[1].factors.factor(1));
    }

    #[test]
    fn supervision_requires_matrices() {
        let t = DenseTensor::zeros(vec![2, 2, 2]).unwrap();
        let labels = LabelMatrix::one_hot(&[0, 1], vec!["a".into(), "b".into()]).unwrap();
        let spec = HierarchySpec::new(vec![2, 1], FitOptions::default()).unwrap();
        assert!(matches!(
            multi_hntf_supervised(&t, &labels, 1.0, &spec),
            Err(Error::Unsupported(_))
        ));
    }
}
