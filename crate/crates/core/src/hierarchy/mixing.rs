//! Fitting the mixing matrix `W` that maps layer `ℓ` onto layer `ℓ + 1`.
//!
//! The objective `‖X − [[X_1W, …, X_kW]]‖²` has `W` in every mode. Holding
//! all but the `i`-th occurrence fixed gives a linear least-squares problem
//! in `W` with the Lee–Seung update
//!
//! ```text
//! W_i = W ∘ (X_iᵀ T_(i) K_i) ⊘ (X_iᵀX_i · W · K_iᵀK_i + ε),   K_i = ⊙_{j≠i} X_jW
//! ```
//!
//! Each iteration computes all `k` candidates from the same `W` and takes
//! their arithmetic mean. The mean is accepted when the full objective does
//! not increase; otherwise the best single candidate is tried. Neither is
//! guaranteed to descend, because each candidate replaces every occurrence of
//! `W`. The last resort is the update built from the summed numerators and
//! denominators, `W ∘ Σ_i numer_i ⊘ Σ_i denom_i`, which is a positively
//! scaled step along the full negative gradient; its step is halved until the
//! objective decreases. Failing that, the mean or best candidate is still
//! taken if it raises the objective by at most `1e-12`; otherwise the fit
//! stops where it is.

use ndarray::Array2;

use super::MixingMatrix;
use crate::error::{Error, Result};
use crate::factorization::{FitOptions, TensorUnfoldings};
use crate::factorization::{gram_except, mu_update, random_matrix, squared_residual};
use crate::tensor::{DenseTensor, FactorSet};

/// Increase of the objective tolerated when accepting a step.
const ACCEPT_SLACK: f64 = 1e-12;
const MAX_HALVINGS: usize = 30;

#[derive(Clone, Debug)]
pub struct MixingFit {
    pub w: MixingMatrix,
    /// Shared-`W` objective at initialization, then once per accepted step.
    pub loss_history: Vec<f64>,
}

/// Fits `W ≥ 0` (`r_ℓ × r_next`) so that `[[X_1W, …, X_kW]]` approximates `t`.
/// `W` starts from seeded Open01 samples.
pub fn fit_w(t: &DenseTensor, f: &FactorSet, r_next: usize, opts: &FitOptions) -> Result<MixingFit> {
    if t.shape() != f.shape().as_slice() {
        return Err(Error::arg(format!(
            "factor shapes {:?} do not match tensor {:?}",
            f.shape(),
            t.shape()
        )));
    }
    fit_w_unfolded(&TensorUnfoldings::new(t), f, r_next, opts)
}

fn check_ranks(r: usize, r_next: usize) -> Result<()> {
    if r_next == 0 || r_next >= r {
        return Err(Error::arg(format!(
            "next rank {r_next} must be in 1..{r}"
        )));
    }
    Ok(())
}

pub(crate) fn fit_w_unfolded(
    t: &TensorUnfoldings,
    f: &FactorSet,
    r_next: usize,
    opts: &FitOptions,
) -> Result<MixingFit> {
    opts.validate()?;
    check_ranks(f.rank(), r_next)?;
    let xs = f.factors();
    let grams: Vec<Array2<f64>> = xs.iter().map(|x| x.t().dot(x)).collect();
    let mixed = |w: &Array2<f64>| -> Vec<Array2<f64>> { xs.iter().map(|x| x.dot(w)).collect() };

    let objective = |w: &Array2<f64>| t.squared_loss(&mixed(w));
    let ratios = |w: &Array2<f64>| -> Vec<Ratio> {
        let g = mixed(w);
        (0..xs.len())
            .map(|i| Ratio {
                numer: xs[i].t().dot(&t.mttkrp(&g, i)),
                denom: grams[i].dot(w).dot(&gram_except(&g, i)),
            })
            .collect()
    };
    let w0 = random_matrix(f.rank(), r_next, &mut opts.rng());
    let (w, loss_history) = mixing_descent(w0, opts, objective, ratios);
    Ok(MixingFit {
        w: MixingMatrix(w),
        loss_history,
    })
}

/// Matrix form of [`fit_w`]: fits `W` so that `X ≈ (AW)(WᵀS)`, with the
/// dictionary-side and coefficient-side updates as the two candidates.
pub fn fit_w_matrix(
    x: &Array2<f64>,
    a: &Array2<f64>,
    s: &Array2<f64>,
    r_next: usize,
    opts: &FitOptions,
) -> Result<MixingFit> {
    opts.validate()?;
    let r = a.ncols();
    if s.nrows() != r || a.nrows() != x.nrows() || s.ncols() != x.ncols() {
        return Err(Error::arg(format!(
            "A {:?} and S {:?} do not factor X {:?}",
            a.dim(),
            s.dim(),
            x.dim()
        )));
    }
    check_ranks(r, r_next)?;
    let ata = a.t().dot(a);
    let sst = s.dot(&s.t());
    // AᵀXSᵀ, shared by both candidates
    let axs = a.t().dot(x).dot(&s.t());

    let objective = |w: &Array2<f64>| squared_residual(x, &a.dot(w).dot(&w.t().dot(s)));
    let ratios = |w: &Array2<f64>| -> Vec<Ratio> {
        let a_side = Ratio {
            numer: axs.dot(w),
            denom: ata.dot(w).dot(&w.t().dot(&sst).dot(w)),
        };
        let s_side = Ratio {
            numer: axs.t().dot(w),
            denom: sst.dot(w).dot(&w.t().dot(&ata).dot(w)),
        };
        vec![a_side, s_side]
    };
    let w0 = random_matrix(r, r_next, &mut opts.rng());
    let (w, loss_history) = mixing_descent(w0, opts, objective, ratios);
    Ok(MixingFit {
        w: MixingMatrix(w),
        loss_history,
    })
}

/// Numerator and denominator of one mode's multiplicative update.
struct Ratio {
    numer: Array2<f64>,
    denom: Array2<f64>,
}

fn mixing_descent(
    mut w: Array2<f64>,
    opts: &FitOptions,
    objective: impl Fn(&Array2<f64>) -> f64,
    ratios: impl Fn(&Array2<f64>) -> Vec<Ratio>,
) -> (Array2<f64>, Vec<f64>) {
    let mut cur = objective(&w);
    let mut history = vec![cur];
    for _ in 0..opts.max_iters {
        let Some((next, f_next)) = choose_step(&w, cur, ratios(&w), opts.epsilon, &objective)
        else {
            break;
        };
        history.push(f_next);
        let done = crate::factorization::converged(cur, f_next, opts.tol);
        w = next;
        cur = f_next;
        if done {
            break;
        }
    }
    (w, history)
}

fn choose_step(
    w: &Array2<f64>,
    cur: f64,
    ratios: Vec<Ratio>,
    eps: f64,
    objective: &impl Fn(&Array2<f64>) -> f64,
) -> Option<(Array2<f64>, f64)> {
    let cands: Vec<Array2<f64>> = ratios
        .iter()
        .map(|r| {
            let mut c = w.clone();
            mu_update(&mut c, &r.numer, &r.denom, eps);
            c
        })
        .collect();
    let mut avg = Array2::<f64>::zeros(w.raw_dim());
    for c in &cands {
        avg += c;
    }
    avg /= cands.len() as f64;
    let f_avg = objective(&avg);
    if f_avg <= cur {
        return Some((avg, f_avg));
    }
    let best = cands
        .into_iter()
        .map(|c| {
            let v = objective(&c);
            (c, v)
        })
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("at least one candidate");
    if best.1 <= cur {
        return Some(best);
    }
    let mut numer = Array2::<f64>::zeros(w.raw_dim());
    let mut denom = Array2::<f64>::zeros(w.raw_dim());
    for r in &ratios {
        numer += &r.numer;
        denom += &r.denom;
    }
    let mut full = w.clone();
    mu_update(&mut full, &numer, &denom, eps);
    let dir = &full - w;
    let mut step = 1.0;
    for _ in 0..MAX_HALVINGS {
        let trial = w + &(&dir * step);
        let v = objective(&trial);
        if v < cur {
            return Some((trial, v));
        }
        step *= 0.5;
    }
    if f_avg <= cur + ACCEPT_SLACK {
        return Some((avg, f_avg));
    }
    (best.1 <= cur + ACCEPT_SLACK).then_some(best)
}
