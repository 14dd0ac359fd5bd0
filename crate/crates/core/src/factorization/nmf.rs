use ndarray::Array2;

use super::{
    check_nonnegative, converged, mu_update, random_matrix, squared_residual, FitOptions,
};
use crate::error::{Error, Result};

/// Result of [`nmf`].
#[derive(Clone, Debug)]
pub struct NmfResult {
    /// Dictionary, `m × r`.
    pub a: Array2<f64>,
    /// Coefficients, `r × n`.
    pub s: Array2<f64>,
    /// `‖X − AS‖_F²` at initialization followed by one value per iteration.
    pub loss_history: Vec<f64>,
}

impl NmfResult {
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("history starts at init")
    }

    pub fn iterations(&self) -> usize {
        self.loss_history.len() - 1
    }
}

/// Frobenius NMF `X ≈ AS` by Lee–Seung multiplicative updates.
///
/// Initialization draws `A` (`m × r`) and then `Sᵀ` (`n × r`), so an NMF and
/// an order-2 NCPD with the same seed start from the same point.
pub fn nmf(x: &Array2<f64>, r: usize, opts: &FitOptions) -> Result<NmfResult> {
    opts.validate()?;
    check_nonnegative("nmf input", x)?;
    let (m, n) = x.dim();
    validate_rank(r, m, n)?;

    let mut rng = opts.rng();
    let mut a = random_matrix(m, r, &mut rng);
    let mut s = random_matrix(n, r, &mut rng).reversed_axes();

    let mut history = vec![squared_residual(x, &a.dot(&s))];
    for _ in 0..opts.max_iters {
        nmf_step(x, &mut a, &mut s, opts.epsilon);
        let cur = squared_residual(x, &a.dot(&s));
        let prev = *history.last().expect("non-empty");
        history.push(cur);
        if converged(prev, cur, opts.tol) {
            break;
        }
    }
    Ok(NmfResult {
        a,
        s,
        loss_history: history,
    })
}

/// One alternating update: `A` first, then `S` against the new `A`.
pub(crate) fn nmf_step(x: &Array2<f64>, a: &mut Array2<f64>, s: &mut Array2<f64>, eps: f64) {
    let numer = x.dot(&s.t());
    let denom = a.dot(&s.dot(&s.t()));
    mu_update(a, &numer, &denom, eps);
    let numer = a.t().dot(x);
    let denom = a.t().dot(a).dot(s);
    mu_update(s, &numer, &denom, eps);
}

pub(crate) fn validate_rank(r: usize, m: usize, n: usize) -> Result<()> {
    if r == 0 || r > m.min(n) {
        return Err(Error::arg(format!(
            "rank {r} is outside 1..={} for a {m}x{n} matrix",
            m.min(n)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::random_nonneg;
    use ndarray::{array, Array1};

    fn rel(x: &Array2<f64>, res: &NmfResult) -> f64 {
        squared_residual(x, &res.a.dot(&res.s)).sqrt() / x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn recovers_rank_one() {
        let u = Array1::from(vec![1.0, 2.0, 0.5, 3.0]);
        let v = Array1::from(vec![0.2, 1.0, 4.0]);
        let x = Array2::from_shape_fn((4, 3), |(i, j)| u[i] * v[j]);
        let opts = FitOptions {
            max_iters: 2000,
            tol: 0.0,
            ..Default::default()
        };
        let res = nmf(&x, 1, &opts).unwrap();
        assert!(rel(&x, &res) < 1e-4, "{}", rel(&x, &res));
    }

    #[test]
    fn identity_rank_two() {
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        let opts = FitOptions {
            max_iters: 5000,
            tol: 0.0,
            ..Default::default()
        };
        let res = nmf(&x, 2, &opts).unwrap();
        assert!(rel(&x, &res) < 1e-3, "{}", rel(&x, &res));
    }

    #[test]
    fn history_is_monotone() {
        let x = random_nonneg(20, 15, 3);
        let res = nmf(&x, 5, &FitOptions::default()).unwrap();
        for w in res.loss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "{} -> {}", w[0], w[1]);
        }
        // the tracked value is the true objective of the returned factors
        let recomputed = squared_residual(&x, &res.a.dot(&res.s));
        assert_eq!(recomputed, res.final_loss());
    }

    #[test]
    fn rejects_bad_input() {
        let x = array![[1.0, -1.0], [0.0, 1.0]];
        assert!(nmf(&x, 1, &FitOptions::default()).is_err());
        let x = array![[1.0, 1.0], [0.0, 1.0]];
        assert!(nmf(&x, 3, &FitOptions::default()).is_err());
        assert!(nmf(&x, 0, &FitOptions::default()).is_err());
    }

    #[test]
    fn zero_row_stays_finite() {
        let mut x = random_nonneg(8, 6, 11);
        x.row_mut(2).fill(0.0);
        let res = nmf(&x, 3, &FitOptions::default()).unwrap();
        assert!(res.a.iter().chain(res.s.iter()).all(|v| v.is_finite() && *v >= 0.0));
        assert!(res.loss_history.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn deterministic() {
        let x = random_nonneg(10, 9, 5);
        let a = nmf(&x, 3, &FitOptions::default()).unwrap();
        let b = nmf(&x, 3, &FitOptions::default()).unwrap();
        assert_eq!(a.a, b.a);
        assert_eq!(a.s, b.s);
        assert_eq!(a.loss_history, b.loss_history);
    }
}
