//! Joint factorization of data `X ≈ AS` and labels `Y ≈ BS` sharing the
//! coefficient matrix `S`, minimizing `‖X − AS‖² + λ‖Y − BS‖²`.

use ndarray::Array2;

use super::nmf::validate_rank;
use super::{
    check_nonnegative, converged, mu_update, random_matrix, squared_residual, FitOptions,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SupervisedFactors {
    /// Data dictionary, `m × r`.
    pub a: Array2<f64>,
    /// Label dictionary, `c × r`.
    pub b: Array2<f64>,
    /// Shared coefficients, `r × n`.
    pub s: Array2<f64>,
}

impl SupervisedFactors {
    pub fn joint_loss(&self, x: &Array2<f64>, y: &Array2<f64>, lambda: f64) -> f64 {
        squared_residual(x, &self.a.dot(&self.s)) + lambda * squared_residual(y, &self.b.dot(&self.s))
    }
}

#[derive(Clone, Debug)]
pub struct SupervisedNmfResult {
    pub factors: SupervisedFactors,
    /// Joint objective at initialization, then once per iteration.
    pub loss_history: Vec<f64>,
}

fn check_shapes(
    x: &Array2<f64>,
    y: &Array2<f64>,
    a: &Array2<f64>,
    b: &Array2<f64>,
    s: &Array2<f64>,
    lambda: f64,
) -> Result<()> {
    let r = s.nrows();
    let n = x.ncols();
    if y.ncols() != n || s.ncols() != n {
        return Err(Error::arg(format!(
            "sample counts disagree: X has {n}, Y has {}, S has {}",
            y.ncols(),
            s.ncols()
        )));
    }
    if a.dim() != (x.nrows(), r) || b.dim() != (y.nrows(), r) {
        return Err(Error::arg(format!(
            "dictionary shapes {:?} and {:?} do not fit X {:?}, Y {:?} at rank {r}",
            a.dim(),
            b.dim(),
            x.dim(),
            y.dim()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::arg(format!("lambda must be finite and ≥ 0, got {lambda}")));
    }
    Ok(())
}

/// One multiplicative step on the joint objective. `A` and `B` are updated
/// against their own residuals with the incoming `S`; `S` is then updated
/// against the new dictionaries.
pub fn supervised_nmf_step(
    x: &Array2<f64>,
    y: &Array2<f64>,
    a: &Array2<f64>,
    b: &Array2<f64>,
    s: &Array2<f64>,
    lambda: f64,
    epsilon: f64,
) -> Result<SupervisedFactors> {
    check_shapes(x, y, a, b, s, lambda)?;
    if !(epsilon > 0.0) {
        return Err(Error::arg("epsilon must be positive"));
    }
    let mut f = SupervisedFactors {
        a: a.clone(),
        b: b.clone(),
        s: s.clone(),
    };
    step_in_place(x, y, &mut f, lambda, epsilon);
    Ok(f)
}

fn step_in_place(
    x: &Array2<f64>,
    y: &Array2<f64>,
    f: &mut SupervisedFactors,
    lambda: f64,
    eps: f64,
) {
    let sst = f.s.dot(&f.s.t());
    let numer = x.dot(&f.s.t());
    let denom = f.a.dot(&sst);
    mu_update(&mut f.a, &numer, &denom, eps);
    let numer = y.dot(&f.s.t());
    let denom = f.b.dot(&sst);
    mu_update(&mut f.b, &numer, &denom, eps);

    let numer = f.a.t().dot(x) + lambda * f.b.t().dot(y);
    let denom = f.a.t().dot(&f.a).dot(&f.s) + lambda * f.b.t().dot(&f.b).dot(&f.s);
    mu_update(&mut f.s, &numer, &denom, eps);
}

/// Supervised NMF. Initialization draws `A`, then `Sᵀ`, then `B`, so at
/// `lambda = 0` the `(A, S)` trajectory matches [`super::nmf`] with the same
/// options.
pub fn supervised_nmf(
    x: &Array2<f64>,
    y: &Array2<f64>,
    r: usize,
    lambda: f64,
    opts: &FitOptions,
) -> Result<SupervisedNmfResult> {
    opts.validate()?;
    check_nonnegative("data matrix", x)?;
    check_nonnegative("label matrix", y)?;
    let (m, n) = x.dim();
    validate_rank(r, m, n)?;
    let mut rng = opts.rng();
    let a = random_matrix(m, r, &mut rng);
    let s = random_matrix(n, r, &mut rng).reversed_axes();
    let b = random_matrix(y.nrows(), r, &mut rng);
    check_shapes(x, y, &a, &b, &s, lambda)?;

    let mut f = SupervisedFactors { a, b, s };
    let mut history = vec![f.joint_loss(x, y, lambda)];
    for _ in 0..opts.max_iters {
        step_in_place(x, y, &mut f, lambda, opts.epsilon);
        let cur = f.joint_loss(x, y, lambda);
        let prev = *history.last().expect("non-empty");
        history.push(cur);
        if converged(prev, cur, opts.tol) {
            break;
        }
    }
    Ok(SupervisedNmfResult {
        factors: f,
        loss_history: history,
    })
}

/// Fits a label dictionary `B ≥ 0` minimizing `‖Y − BS‖²` with `S` held
/// fixed, starting from a seeded random `B`.
pub fn fit_label_dictionary(
    y: &Array2<f64>,
    s: &Array2<f64>,
    opts: &FitOptions,
) -> Result<Array2<f64>> {
    opts.validate()?;
    check_nonnegative("label matrix", y)?;
    if y.ncols() != s.ncols() {
        return Err(Error::arg(format!(
            "labels cover {} samples but S has {}",
            y.ncols(),
            s.ncols()
        )));
    }
    let mut b = random_matrix(y.nrows(), s.nrows(), &mut opts.rng());
    let numer = y.dot(&s.t());
    let sst = s.dot(&s.t());
    let mut prev = squared_residual(y, &b.dot(s));
    for _ in 0..opts.max_iters {
        let denom = b.dot(&sst);
        mu_update(&mut b, &numer, &denom, opts.epsilon);
        let cur = squared_residual(y, &b.dot(s));
        if converged(prev, cur, opts.tol) {
            break;
        }
        prev = cur;
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::nmf::nmf_step;
    use crate::test_util::random_nonneg;

    fn one_hot(classes: &[usize], c: usize) -> Array2<f64> {
        let mut y = Array2::zeros((c, classes.len()));
        for (j, &k) in classes.iter().enumerate() {
            y[[k, j]] = 1.0;
        }
        y
    }

    #[test]
    fn lambda_zero_decouples() {
        let x = random_nonneg(10, 8, 1);
        let y = one_hot(&[0, 1, 2, 0, 1, 2, 0, 1], 3);
        let a = random_nonneg(10, 3, 2);
        let b = random_nonneg(3, 3, 3);
        let s = random_nonneg(3, 8, 4);
        let got = supervised_nmf_step(&x, &y, &a, &b, &s, 0.0, 1e-12).unwrap();

        let (mut a2, mut s2) = (a.clone(), s.clone());
        nmf_step(&x, &mut a2, &mut s2, 1e-12);
        let mut b2 = b.clone();
        mu_update(&mut b2, &y.dot(&s.t()), &b.dot(&s.dot(&s.t())), 1e-12);
        assert_eq!(got.a, a2);
        assert_eq!(got.s, s2);
        assert_eq!(got.b, b2);
    }

    #[test]
    fn exact_factorization_is_stationary() {
        let a = random_nonneg(6, 2, 5) + 0.1;
        let b = random_nonneg(3, 2, 6) + 0.1;
        let s = random_nonneg(2, 7, 7) + 0.1;
        let x = a.dot(&s);
        let y = b.dot(&s);
        let next = supervised_nmf_step(&x, &y, &a, &b, &s, 1.0, 1e-12).unwrap();
        let rel = |p: &Array2<f64>, q: &Array2<f64>| {
            squared_residual(p, q).sqrt() / p.iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        assert!(rel(&a, &next.a) < 1e-8);
        assert!(rel(&b, &next.b) < 1e-8);
        assert!(rel(&s, &next.s) < 1e-8);
    }

    #[test]
    fn joint_objective_monotone_over_steps() {
        let x = random_nonneg(10, 8, 9);
        let y = one_hot(&[0, 1, 2, 2, 1, 0, 0, 1], 3);
        let mut f = SupervisedFactors {
            a: random_nonneg(10, 3, 10),
            b: random_nonneg(3, 3, 11),
            s: random_nonneg(3, 8, 12),
        };
        let mut prev = f.joint_loss(&x, &y, 1.0);
        for _ in 0..50 {
            f = supervised_nmf_step(&x, &y, &f.a, &f.b, &f.s, 1.0, 1e-12).unwrap();
            let cur = f.joint_loss(&x, &y, 1.0);
            assert!(cur <= prev + 1e-10, "{prev} -> {cur}");
            prev = cur;
        }
    }

    #[test]
    fn shape_errors() {
        let x = random_nonneg(4, 5, 1);
        let y = one_hot(&[0, 1, 0, 1], 2);
        let a = random_nonneg(4, 2, 1);
        let b = random_nonneg(2, 2, 1);
        let s = random_nonneg(2, 5, 1);
        assert!(supervised_nmf_step(&x, &y, &a, &b, &s, 1.0, 1e-12).is_err());
        let y = one_hot(&[0, 1, 0, 1, 1], 2);
        assert!(supervised_nmf_step(&x, &y, &a, &b, &s, -1.0, 1e-12).is_err());
        assert!(supervised_nmf_step(&x, &y, &a, &b, &s, 1.0, 1e-12).is_ok());
    }

    #[test]
    fn label_dictionary_fits_separable_codes() {
        let s = one_hot(&[0, 1, 2, 0, 1, 2], 3) * 2.0;
        let y = one_hot(&[2, 0, 1, 2, 0, 1], 3);
        let opts = FitOptions {
            max_iters: 2000,
            tol: 0.0,
            ..Default::default()
        };
        let b = fit_label_dictionary(&y, &s, &opts).unwrap();
        assert!(squared_residual(&y, &b.dot(&s)) < 1e-6);
    }
}
