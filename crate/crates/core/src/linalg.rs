//! Dense solves and ordinary least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest eigenvalue ratio accepted before a symmetric system is treated
/// as singular.
const RANK_TOL: f64 = 1e-12;

/// Solves `m x = rhs` for symmetric positive definite `m`, failing with a
/// rank error when `m` is numerically singular.
pub fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    check_rank(m, what)?;
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Rank(format!("{what}: normal equations are not positive definite")))?;
    Ok(chol.solve(rhs))
}

/// Inverse of a symmetric positive definite matrix.
pub fn inverse_spd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    check_rank(m, what)?;
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Rank(format!("{what}: normal equations are not positive definite")))
}

fn check_rank(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Rank(format!("{what}: non-finite normal equations")));
    }
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if max == 0.0 || min <= RANK_TOL * max {
        return Err(Error::Rank(format!(
            "{what}: design is rank deficient (eigenvalue ratio {:.3e})",
            if max == 0.0 { 0.0 } else { min / max }
        )));
    }
    Ok(())
}

/// Ordinary least squares fit with coefficient standard errors.
#[derive(Debug, Clone)]
pub struct Ols {
    pub coefficients: DVector<f64>,
    pub std_errors: DVector<f64>,
    pub rss: f64,
    pub df_residual: usize,
    pub fitted: DVector<f64>,
}

/// Fits `y ~ design` (include an intercept column yourself).
pub fn ols(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<Ols> {
    let (n, k) = design.shape();
    if n <= k {
        return Err(Error::Rank(format!("ols: {n} rows cannot identify {k} coefficients")));
    }
    let xtx = design.transpose() * design;
    let inv = inverse_spd(&xtx, "ols")?;
    let coefficients = &inv * (design.transpose() * y);
    let fitted = design * &coefficients;
    let rss = (y - &fitted).norm_squared();
    let df_residual = n - k;
    let sigma2 = rss / df_residual as f64;
    let std_errors = DVector::from_iterator(k, (0..k).map(|i| (sigma2 * inv[(i, i)]).max(0.0).sqrt()));
    Ok(Ols { coefficients, std_errors, rss, df_residual, fitted })
}

/// `[1 | X]` for a row-major `n x p` matrix.
pub fn design_with_intercept(x: &[f64], p: usize) -> DMatrix<f64> {
    let n = x.len() / p;
    DMatrix::from_fn(n, p + 1, |i, c| if c == 0 { 1.0 } else { x[i * p + c - 1] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let design = design_with_intercept(&x, 1);
        let y = DVector::from_vec(vec![3.0, 5.0, 7.0, 9.0]);
        let fit = ols(&design, &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn singular_design_is_a_rank_error() {
        let design = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(ols(&design, &y), Err(Error::Rank(_))));
    }
}
