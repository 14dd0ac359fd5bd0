//! Baseline hierarchies: HNMF, HNTF-i and standard HNCPD.

use ndarray::Array2;

use super::chain::{Layer, LayerChain, Method};
use super::multi::{check_labels, require_matrix};
use super::{derive_seed, HierarchySpec, LabelMatrix, MixingMatrix};
use crate::error::{Error, Result};
use crate::factorization::{ncpd, ncpd_unfolded, nmf, supervised_nmf, TensorUnfoldings};
use crate::tensor::{cp_reconstruct, DenseTensor, FactorSet};

/// Hierarchical NMF: `X ≈ A^(0)S^(0)`, then each `S^(ℓ) ≈ A^(ℓ+1)S^(ℓ+1)` by
/// a fresh NMF. Layer `ℓ` stores the cascaded model
/// `(A^(0)···A^(ℓ), S^(ℓ)ᵀ)` and its loss against `X`; `A^(ℓ+1)` is
/// recorded as the layer's mixing matrix.
pub fn hnmf(t: &DenseTensor, spec: &HierarchySpec) -> Result<LayerChain> {
    let x = require_matrix(t, "hnmf")?;
    hnmf_matrix(&x, spec)
}

fn hnmf_matrix(x: &Array2<f64>, spec: &HierarchySpec) -> Result<LayerChain> {
    let t = DenseTensor::from_matrix(x)?;
    let ranks = spec.ranks();
    let opts = spec.layer_options();
    let mut chain = LayerChain::new(Method::Hnmf, spec);
    let base = nmf(x, ranks[0], &opts[0])?;
    let (mut a_eff, mut s) = (base.a, base.s);
    for l in 0..spec.depth() {
        let factors = FactorSet::from_parts_unchecked(vec![a_eff.clone(), s.t().to_owned()]);
        chain.layers.push(Layer::evaluate(&t, ranks[l], factors)?);
        if l + 1 < spec.depth() {
            let next = nmf(&s, ranks[l + 1], &opts[l + 1])?;
            a_eff = a_eff.dot(&next.a);
            s = next.s;
            chain.layers[l].mixing = Some(MixingMatrix::new(next.a)?);
        }
    }
    Ok(chain)
}

/// HNMF where every layer is a supervised NMF sharing `S^(ℓ)` with the
/// labels: `S^(ℓ) ≈ A^(ℓ+1)S^(ℓ+1)` and `Y ≈ B^(ℓ+1)S^(ℓ+1)`.
pub fn hnmf_supervised(
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
    let mut chain = LayerChain::new(Method::Hnmf, spec);
    chain.supervision_lambda = Some(lambda);
    let base = supervised_nmf(&x, y, ranks[0], lambda, &opts[0])?.factors;
    let (mut a_eff, mut s) = (base.a, base.s);
    chain.label_dictionaries.push(base.b);
    for l in 0..spec.depth() {
        let factors = FactorSet::from_parts_unchecked(vec![a_eff.clone(), s.t().to_owned()]);
        chain.layers.push(Layer::evaluate(t, ranks[l], factors)?);
        if l + 1 < spec.depth() {
            let next = supervised_nmf(&s, y, ranks[l + 1], lambda, &opts[l + 1])?.factors;
            a_eff = a_eff.dot(&next.a);
            s = next.s;
            chain.label_dictionaries.push(next.b);
            chain.layers[l].mixing = Some(MixingMatrix::new(next.a)?);
        }
    }
    Ok(chain)
}

/// HNTF with mode `lead_mode` (zero-based) moved to the front.
///
/// With the lead factor `X_1` held aside, each layer decomposes
/// `Y^(ℓ) = [[I_{r_ℓ}, X_2^(ℓ), …, X_k^(ℓ)]]` as `[[W, Z_2, …, Z_k]]` at rank
/// `r_{ℓ+1}` and sets `X_1^(ℓ+1) = X_1^(ℓ)W`, `X_j^(ℓ+1) = Z_j`. Stored
/// factors are returned to the original mode order.
pub fn hntf_i(t: &DenseTensor, spec: &HierarchySpec, lead_mode: usize) -> Result<LayerChain> {
    let k = t.order();
    if lead_mode >= k {
        return Err(Error::arg(format!(
            "lead mode {lead_mode} out of range for an order-{k} tensor"
        )));
    }
    let perm: Vec<usize> = std::iter::once(lead_mode)
        .chain((0..k).filter(|&m| m != lead_mode))
        .collect();
    let tp = t.permute(&perm)?;
    let ranks = spec.ranks();
    let opts = spec.layer_options();

    let mut chain = LayerChain::new(Method::HntfI, spec);
    chain.lead_mode = Some(lead_mode);
    let mut factors = ncpd_unfolded(&TensorUnfoldings::new(&tp), ranks[0], &opts[0])?
        .factors
        .into_factors();
    for l in 0..spec.depth() {
        let mut original = vec![Array2::zeros((0, 0)); k];
        for (a, &m) in perm.iter().enumerate() {
            original[m] = factors[a].clone();
        }
        chain.layers.push(Layer::evaluate(
            t,
            ranks[l],
            FactorSet::from_parts_unchecked(original),
        )?);
        if l + 1 < spec.depth() {
            let mut core = factors.clone();
            core[0] = Array2::eye(ranks[l]);
            let y = cp_reconstruct(&FactorSet::from_parts_unchecked(core));
            let inner = ncpd(&y, ranks[l + 1], &opts[l + 1])?.factors.into_factors();
            let w = &inner[0];
            let mut next = inner.clone();
            next[0] = factors[0].dot(w);
            chain.layers[l].mixing = Some(MixingMatrix::new(w.clone())?);
            factors = next;
        }
    }
    Ok(chain)
}

/// Independent single-layer fits at every rank of `spec`: NCPD for
/// [`Method::Ncpd`], NMF for [`Method::Nmf`]. Layers carry no mixing
/// matrices; they share nothing but the data.
pub fn independent_ranks(t: &DenseTensor, spec: &HierarchySpec, method: Method) -> Result<LayerChain> {
    let mut chain = LayerChain::new(method, spec);
    let matrix = match method {
        Method::Nmf => Some(require_matrix(t, "nmf")?),
        Method::Ncpd => None,
        other => {
            return Err(Error::arg(format!(
                "{other} is a hierarchical method, not a single-layer one"
            )))
        }
    };
    let u = TensorUnfoldings::new(t);
    for (&r, opts) in spec.ranks().iter().zip(spec.layer_options()) {
        let factors = match &matrix {
            Some(x) => {
                let fit = nmf(x, r, opts)?;
                FactorSet::from_parts_unchecked(vec![fit.a, fit.s.t().to_owned()])
            }
            None => ncpd_unfolded(&u, r, opts)?.factors,
        };
        chain.layers.push(Layer::evaluate(t, r, factors)?);
    }
    Ok(chain)
}

/// Standard HNCPD output: the tensor-level chain plus one HNMF chain per
/// mode.
#[derive(Clone, Debug)]
pub struct HncpdResult {
    /// Layer 0 is the NCPD. Layer `ℓ ≥ 1` replaces every factor
    /// `X_i^(0)` by its depth-`ℓ` HNMF approximation (still `n_i × r_0`).
    pub chain: LayerChain,
    /// HNMF of `X_i^(0)` at ranks `r_1, r_2, …`, one per mode.
    pub mode_chains: Vec<LayerChain>,
}

/// Standard HNCPD: NCPD at `r_0`, then an independent HNMF of each factor
/// matrix. Mode `i`'s HNMF seeds derive from the layer-1 seed and `i`.
pub fn standard_hncpd(t: &DenseTensor, spec: &HierarchySpec) -> Result<HncpdResult> {
    let base = spec
        .layer_options()
        .get(1)
        .map_or(spec.layer_options()[0].seed, |o| o.seed);
    let seeds: Vec<u64> = (0..t.order()).map(|i| derive_seed(base, i + 1)).collect();
    standard_hncpd_with_mode_seeds(t, spec, &seeds)
}

/// [`standard_hncpd`] with an explicit base seed for each mode's HNMF.
pub fn standard_hncpd_with_mode_seeds(
    t: &DenseTensor,
    spec: &HierarchySpec,
    mode_seeds: &[u64],
) -> Result<HncpdResult> {
    if mode_seeds.len() != t.order() {
        return Err(Error::arg(format!(
            "{} mode seeds for an order-{} tensor",
            mode_seeds.len(),
            t.order()
        )));
    }
    let ranks = spec.ranks();
    let opts = spec.layer_options();
    let base = ncpd(t, ranks[0], &opts[0])?.factors;

    let mut chain = LayerChain::new(Method::Hncpd, spec);
    chain.layers.push(Layer::evaluate(t, ranks[0], base.clone())?);
    let Some(tail) = spec.tail() else {
        return Ok(HncpdResult {
            chain,
            mode_chains: Vec::new(),
        });
    };

    let mut mode_chains = Vec::with_capacity(t.order());
    for (factor, &seed) in base.factors().iter().zip(mode_seeds) {
        let layer_opts = tail
            .layer_options()
            .iter()
            .enumerate()
            .map(|(l, o)| o.with_seed(derive_seed(seed, l)))
            .collect();
        let mode_spec = HierarchySpec::with_layer_options(tail.ranks().to_vec(), layer_opts)?;
        mode_chains.push(hnmf_matrix(factor, &mode_spec)?);
    }
    for l in 1..spec.depth() {
        let approx: Vec<Array2<f64>> = mode_chains
            .iter()
            .map(|mc| {
                let f = &mc.layers[l - 1].factors;
                f.factor(0).dot(&f.factor(1).t())
            })
            .collect();
        chain.layers.push(Layer::evaluate(
            t,
            ranks[l],
            FactorSet::from_parts_unchecked(approx),
        )?);
    }
    Ok(HncpdResult { chain, mode_chains })
}
