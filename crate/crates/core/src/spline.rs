//! Cubic regression splines and penalized smoothing.
//!
//! The basis is parameterized by the function values at `q` knots. The
//! spline is natural (zero second derivative at the boundary knots), so its
//! second derivatives at the knots are a linear map `F` of the knot values,
//! and the roughness penalty `int s''(t)^2 dt` is `theta' P theta` with
//! `P = D' B^-1 D`. Outside the boundary knots the spline continues linearly.
//!
//! A centered basis has each column's sample mean subtracted. Because the
//! uncentered basis functions sum to one, the centered columns sum to zero:
//! shifting every coefficient by the same constant leaves the fit unchanged.
//! Fits resolve that direction by returning the coefficient vector with zero
//! sum, and carry the level in an explicit intercept.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Cubic regression spline basis of dimension `q = knots.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    knots: Vec<f64>,
    /// Per-column means subtracted on evaluation, when centered.
    centers: Option<Vec<f64>>,
    /// Knot values -> knot second derivatives (`q x q`, zero first/last rows).
    second_deriv: DMatrix<f64>,
    penalty: DMatrix<f64>,
}

/// Builds a basis with knots at evenly spaced quantiles of `sample`;
/// the boundary knots are the sample minimum and maximum.
pub fn make_basis(sample: &[f64], q: usize) -> Result<SplineBasis> {
    if q < 3 {
        return Err(Error::InvalidConfig(format!("spline basis needs q >= 3, got {q}")));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("spline sample contains non-finite values".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut unique = sorted.clone();
    unique.dedup();
    if unique.len() < q {
        return Err(Error::Rank(format!(
            "{} distinct values cannot support a basis of dimension {q}",
            unique.len()
        )));
    }
    let mut knots = quantile_knots(&sorted, q);
    if knots.windows(2).any(|w| w[1] <= w[0]) {
        knots = quantile_knots(&unique, q);
    }
    SplineBasis::from_knots(knots)
}

fn quantile_knots(sorted: &[f64], q: usize) -> Vec<f64> {
    (0..q).map(|l| quantile_sorted(sorted, l as f64 / (q - 1) as f64)).collect()
}

/// Linear-interpolation sample quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl SplineBasis {
    /// Builds an uncentered basis from strictly increasing knots.
    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        let q = knots.len();
        if q < 3 {
            return Err(Error::InvalidConfig("need at least 3 knots".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let m = q - 2;
        let mut d = DMatrix::<f64>::zeros(m, q);
        let mut b = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            d[(i, i)] = 1.0 / h[i];
            d[(i, i + 1)] = -1.0 / h[i] - 1.0 / h[i + 1];
            d[(i, i + 2)] = 1.0 / h[i + 1];
            b[(i, i)] = (h[i] + h[i + 1]) / 3.0;
            if i + 1 < m {
                b[(i, i + 1)] = h[i + 1] / 6.0;
                b[(i + 1, i)] = h[i + 1] / 6.0;
            }
        }
        let b_inv = b
            .cholesky()
            .ok_or_else(|| Error::Decomposition("knot-spacing matrix not positive definite".into()))?
            .inverse();
        let interior = &b_inv * &d;
        let mut second_deriv = DMatrix::<f64>::zeros(q, q);
        second_deriv.rows_mut(1, m).copy_from(&interior);
        let mut penalty = d.transpose() * &interior;
        penalty = (&penalty + penalty.transpose()) * 0.5;
        Ok(Self { knots, centers: None, second_deriv, penalty })
    }

    /// Copy whose columns are mean-centered over `sample`.
    pub fn centered_on(&self, sample: &[f64]) -> Self {
        let mut uncentered = self.clone();
        uncentered.centers = None;
        let mut means = vec![0.0; self.dim()];
        for &t in sample {
            for (m, v) in means.iter_mut().zip(uncentered.evaluate(t)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= sample.len() as f64);
        uncentered.centers = Some(means);
        uncentered
    }

    pub fn dim(&self) -> usize {
        self.knots.len()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn is_centered(&self) -> bool {
        self.centers.is_some()
    }

    pub fn centers(&self) -> Option<&[f64]> {
        self.centers.as_deref()
    }

    /// Roughness penalty matrix: `theta' P theta = int s''(t)^2 dt`.
    pub fn penalty(&self) -> &DMatrix<f64> {
        &self.penalty
    }

    /// Maps knot values to knot second derivatives.
    pub fn second_derivative_map(&self) -> &DMatrix<f64> {
        &self.second_deriv
    }

    /// True when `t` lies outside the boundary knots.
    pub fn is_outside(&self, t: f64) -> bool {
        t < self.knots[0] || t > self.knots[self.dim() - 1]
    }

    /// Basis row at `t`, centered if the basis is.
    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        let mut row = vec![0.0; self.dim()];
        self.evaluate_into(t, &mut row);
        row
    }

    pub fn evaluate_into(&self, t: f64, row: &mut [f64]) {
        let q = self.dim();
        let k = &self.knots;
        row.fill(0.0);
        if t < k[0] || t > k[q - 1] {
            let (at, slope) = if t < k[0] { (0, self.slope_row(0)) } else { (q - 1, self.slope_row(q - 1)) };
            let dt = t - k[at];
            for (r, s) in row.iter_mut().zip(&slope) {
                *r = dt * s;
            }
            row[at] += 1.0;
        } else {
            let j = self.interval(t);
            let h = k[j + 1] - k[j];
            let am = (k[j + 1] - t) / h;
            let ap = (t - k[j]) / h;
            let cm = ((k[j + 1] - t).powi(3) / h - h * (k[j + 1] - t)) / 6.0;
            let cp = ((t - k[j]).powi(3) / h - h * (t - k[j])) / 6.0;
            row[j] += am;
            row[j + 1] += ap;
            for (l, r) in row.iter_mut().enumerate() {
                *r += cm * self.second_deriv[(j, l)] + cp * self.second_deriv[(j + 1, l)];
            }
        }
        if let Some(c) = &self.centers {
            for (r, m) in row.iter_mut().zip(c) {
                *r -= m;
            }
        }
    }

    /// Design matrix with one row per value.
    pub fn design(&self, ts: &[f64]) -> DMatrix<f64> {
        let q = self.dim();
        let mut out = DMatrix::<f64>::zeros(ts.len(), q);
        let mut row = vec![0.0; q];
        for (i, &t) in ts.iter().enumerate() {
            self.evaluate_into(t, &mut row);
            for (l, v) in row.iter().enumerate() {
                out[(i, l)] = *v;
            }
        }
        out
    }

    /// Index of the knot interval containing `t` (clamped to the last).
    fn interval(&self, t: f64) -> usize {
        let q = self.dim();
        match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i.min(q - 2),
            Err(i) => i.saturating_sub(1).min(q - 2),
        }
    }

    /// Coefficients of `s'` at boundary knot `at` (0 or q-1).
    fn slope_row(&self, at: usize) -> Vec<f64> {
        let q = self.dim();
        let k = &self.knots;
        let mut row = vec![0.0; q];
        let f = &self.second_deriv;
        if at == 0 {
            let h = k[1] - k[0];
            row[0] -= 1.0 / h;
            row[1] += 1.0 / h;
            for (l, r) in row.iter_mut().enumerate() {
                *r -= h * f[(0, l)] / 3.0 + h * f[(1, l)] / 6.0;
            }
        } else {
            let h = k[q - 1] - k[q - 2];
            row[q - 2] -= 1.0 / h;
            row[q - 1] += 1.0 / h;
            for (l, r) in row.iter_mut().enumerate() {
                *r += h * f[(q - 2, l)] / 6.0 + h * f[(q - 1, l)] / 3.0;
            }
        }
        row
    }
}

/// A penalized spline fit `s(t) = intercept + b(t)' theta` on a centered basis.
#[derive(Debug, Clone)]
pub struct SmoothFit {
    pub basis: SplineBasis,
    pub theta: Vec<f64>,
    /// Level of the response; not part of `theta`.
    pub intercept: f64,
    pub penalty_lambda: f64,
    pub rss: f64,
    /// Effective degrees of freedom including the intercept.
    pub edf: f64,
}

impl SmoothFit {
    /// Smooth component at `t`, without the intercept.
    pub fn component(&self, t: f64) -> f64 {
        self.basis.evaluate(t).iter().zip(&self.theta).map(|(b, c)| b * c).sum()
    }

    pub fn predict(&self, t: f64) -> f64 {
        self.intercept + self.component(t)
    }

    /// `theta' P theta`, the integrated squared second derivative.
    pub fn roughness(&self) -> f64 {
        let th = DVector::from_column_slice(&self.theta);
        (th.transpose() * self.basis.penalty() * &th)[(0, 0)]
    }

    /// Second derivatives of the fit at the knots.
    pub fn knot_curvatures(&self) -> Vec<f64> {
        let th = DVector::from_column_slice(&self.theta);
        (self.basis.second_derivative_map() * th).iter().copied().collect()
    }

    /// `int |s''(t)| dt` over the knot range (exact for the piecewise-linear `s''`).
    pub fn integrated_abs_curvature(&self) -> f64 {
        let c = self.knot_curvatures();
        self.basis
            .knots()
            .windows(2)
            .zip(c.windows(2))
            .map(|(k, d)| {
                let h = k[1] - k[0];
                let (a, b) = (d[0], d[1]);
                if a * b >= 0.0 {
                    h * (a.abs() + b.abs()) / 2.0
                } else {
                    h * (a * a + b * b) / (2.0 * (a.abs() + b.abs()))
                }
            })
            .sum()
    }

    /// `||r - intercept - B theta||^2 + lambda theta' P theta` for arbitrary `theta`.
    pub fn objective(&self, t: &[f64], r: &[f64], theta: &[f64]) -> f64 {
        let th = DVector::from_column_slice(theta);
        let design = self.basis.design(t);
        let fitted = &design * &th;
        let rss: f64 = r.iter().zip(fitted.iter()).map(|(ri, fi)| (ri - self.intercept - fi).powi(2)).sum();
        rss + self.penalty_lambda * (th.transpose() * self.basis.penalty() * &th)[(0, 0)]
    }
}

/// How the smoothing parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "policy", content = "lambda", rename_all = "lowercase")]
pub enum Smoothing {
    /// Generalized cross-validation over a fixed 20-point log grid.
    Gcv,
    /// A constant penalty.
    Fixed(f64),
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::Gcv
    }
}

pub const GCV_GRID_POINTS: usize = 20;

/// Log-spaced penalty grid spanning twelve decades around the ratio of the
/// design scale to the penalty scale.
pub fn lambda_grid(design_scale: f64, penalty_scale: f64) -> Vec<f64> {
    let center = if penalty_scale > 0.0 { design_scale / penalty_scale } else { 1.0 };
    (0..GCV_GRID_POINTS)
        .map(|i| center * 10f64.powf(-6.0 + 12.0 * i as f64 / (GCV_GRID_POINTS - 1) as f64))
        .collect()
}

/// Fits a `q`-dimensional smooth of `r` on `t` with a fixed penalty.
pub fn fit_smooth(t: &[f64], r: &[f64], q: usize, penalty_lambda: f64) -> Result<SmoothFit> {
    let basis = make_basis(t, q)?.centered_on(t);
    fit_smooth_with_basis(&basis, t, r, penalty_lambda)
}

/// Fits with the penalty chosen by generalized cross-validation.
pub fn fit_smooth_gcv(t: &[f64], r: &[f64], q: usize) -> Result<SmoothFit> {
    let basis = make_basis(t, q)?.centered_on(t);
    fit_smooth_with_basis_gcv(&basis, t, r)
}

pub fn fit_smooth_with_policy(basis: &SplineBasis, t: &[f64], r: &[f64], policy: Smoothing) -> Result<SmoothFit> {
    match policy {
        Smoothing::Gcv => fit_smooth_with_basis_gcv(basis, t, r),
        Smoothing::Fixed(lambda) => fit_smooth_with_basis(basis, t, r, lambda),
    }
}

struct SmoothSystem {
    design: DMatrix<f64>,
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    /// Gram matrix plus the constant-direction fix.
    anchored: DMatrix<f64>,
    intercept: f64,
    centered_r: Vec<f64>,
}

fn smooth_system(basis: &SplineBasis, t: &[f64], r: &[f64]) -> Result<SmoothSystem> {
    if !basis.is_centered() {
        return Err(Error::InvalidInput("smooth fits need a centered basis".into()));
    }
    if t.len() != r.len() {
        return Err(Error::Shape(format!("{} abscissae for {} responses", t.len(), r.len())));
    }
    let q = basis.dim();
    if t.len() <= q {
        return Err(Error::InvalidInput(format!("smooth of dimension {q} needs more than {q} points")));
    }
    let intercept = crate::data::mean(r);
    let centered_r: Vec<f64> = r.iter().map(|v| v - intercept).collect();
    let design = basis.design(t);
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * DVector::from_column_slice(&centered_r);
    let anchor = gram.trace() / q as f64;
    let anchored = &gram + DMatrix::from_element(q, q, anchor.max(1e-12));
    Ok(SmoothSystem { design, gram, rhs, anchored, intercept, centered_r })
}

fn solve_smooth(basis: &SplineBasis, sys: &SmoothSystem, lambda: f64) -> Result<SmoothFit> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("penalty lambda must be nonnegative, got {lambda}")));
    }
    let m = &sys.anchored + basis.penalty() * lambda;
    let inv = linalg::inverse_spd(&m, "spline smooth").map_err(|e| match e {
        Error::Rank(msg) if lambda == 0.0 => Error::Rank(format!("{msg}; try a positive penalty lambda")),
        other => other,
    })?;
    let theta = &inv * &sys.rhs;
    let fitted = &sys.design * &theta;
    let rss: f64 = sys.centered_r.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let edf = 1.0 + (&inv * &sys.gram).trace();
    Ok(SmoothFit {
        basis: basis.clone(),
        theta: theta.iter().copied().collect(),
        intercept: sys.intercept,
        penalty_lambda: lambda,
        rss,
        edf,
    })
}

pub fn fit_smooth_with_basis(basis: &SplineBasis, t: &[f64], r: &[f64], penalty_lambda: f64) -> Result<SmoothFit> {
    let sys = smooth_system(basis, t, r)?;
    solve_smooth(basis, &sys, penalty_lambda)
}

pub fn fit_smooth_with_basis_gcv(basis: &SplineBasis, t: &[f64], r: &[f64]) -> Result<SmoothFit> {
    let sys = smooth_system(basis, t, r)?;
    let n = t.len() as f64;
    let mut best: Option<(f64, SmoothFit)> = None;
    for lambda in lambda_grid(sys.gram.trace(), basis.penalty().trace()) {
        let fit = solve_smooth(basis, &sys, lambda)?;
        let score = gcv_score(n, fit.rss, fit.edf);
        if best.as_ref().map_or(true, |(s, _)| score < *s) {
            best = Some((score, fit));
        }
    }
    Ok(best.expect("grid is nonempty").1)
}

pub(crate) fn gcv_score(n: f64, rss: f64, edf: f64) -> f64 {
    let denom = (n - edf).max(1e-8);
    n * rss / (denom * denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn quantile_knots_on_uniform_grid() {
        let sample = grid(100, 0.0, 1.0);
        let b = make_basis(&sample, 4).unwrap();
        assert_eq!(b.dim(), 4);
        let k = b.knots();
        assert_eq!(k[0], 0.0);
        assert_eq!(k[3], 1.0);
        assert_abs_diff_eq!(k[1], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k[2], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_distinct_values() {
        let sample = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        assert!(matches!(make_basis(&sample, 4), Err(Error::Rank(_))));
        assert!(make_basis(&sample, 2).is_err());
    }

    #[test]
    fn basis_interpolates_knot_values_and_sums_to_one() {
        let b = make_basis(&grid(50, -2.0, 3.0), 6).unwrap();
        for (l, &k) in b.knots().iter().enumerate() {
            let row = b.evaluate(k);
            for (m, v) in row.iter().enumerate() {
                assert_abs_diff_eq!(*v, if m == l { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
        for t in [-5.0, -1.3, 0.2, 2.9, 7.0] {
            assert_abs_diff_eq!(b.evaluate(t).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn basis_is_continuous_at_knots() {
        let b = make_basis(&grid(80, 0.0, 4.0), 7).unwrap();
        let eps = 1e-9;
        for &k in b.knots() {
            let left = b.evaluate(k - eps);
            let right = b.evaluate(k + eps);
            for (l, r) in left.iter().zip(&right) {
                assert!((l - r).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn centered_columns_have_zero_mean() {
        let t = grid(60, -1.0, 1.0);
        let b = make_basis(&t, 5).unwrap().centered_on(&t);
        let d = b.design(&t);
        for c in 0..5 {
            assert_abs_diff_eq!(d.column(c).sum(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn penalty_matches_numeric_curvature() {
        let t = grid(40, 0.0, 2.0);
        let b = make_basis(&t, 6).unwrap();
        let theta = [0.3, -1.0, 0.5, 2.0, -0.4, 1.1];
        let fit = SmoothFit {
            basis: b.clone(),
            theta: theta.to_vec(),
            intercept: 0.0,
            penalty_lambda: 0.0,
            rss: 0.0,
            edf: 0.0,
        };
        // Simpson integration of s''^2 using the exact piecewise-linear s''.
        let curv = fit.knot_curvatures();
        let mut numeric = 0.0;
        for (k, c) in b.knots().windows(2).zip(curv.windows(2)) {
            let h = k[1] - k[0];
            numeric += h / 3.0 * (c[0] * c[0] + c[0] * c[1] + c[1] * c[1]);
        }
        assert_abs_diff_eq!(fit.roughness(), numeric, epsilon = 1e-9 * numeric.abs().max(1.0));
    }

    #[test]
    fn zero_response_gives_zero_theta() {
        let t = grid(50, 0.0, 1.0);
        let fit = fit_smooth(&t, &vec![0.0; 50], 10, 0.0).unwrap();
        assert!(fit.theta.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn lambda_zero_residuals_are_orthogonal_to_basis() {
        let t: Vec<f64> = grid(120, -2.0, 2.0);
        let r: Vec<f64> = t.iter().map(|v| (1.7 * v).sin() + 0.2 * v * v).collect();
        let fit = fit_smooth(&t, &r, 8, 0.0).unwrap();
        let design = fit.basis.design(&t);
        let resid = DVector::from_iterator(
            t.len(),
            t.iter().zip(&r).map(|(tt, rr)| rr - fit.predict(*tt)),
        );
        let cross = design.transpose() * resid;
        assert!(cross.iter().all(|c| c.abs() < 1e-6), "{cross}");
        assert_abs_diff_eq!(fit.theta.iter().sum::<f64>(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn huge_penalty_collapses_to_a_line() {
        let t = grid(200, -2.0, 2.0);
        let r: Vec<f64> = t.iter().map(|v| v.powi(3) - 0.5 * v).collect();
        let fit = fit_smooth(&t, &r, 10, 1e9).unwrap();
        assert!(fit.integrated_abs_curvature() < 1e-3, "{}", fit.integrated_abs_curvature());
    }

    #[test]
    fn linear_extrapolation_outside_knots() {
        let t = grid(30, 0.0, 1.0);
        let r: Vec<f64> = t.iter().map(|v| (3.0 * v).sin()).collect();
        let fit = fit_smooth(&t, &r, 6, 0.0).unwrap();
        let f = |x: f64| fit.predict(x);
        // second difference vanishes beyond the boundary
        assert_abs_diff_eq!(f(1.5) - 2.0 * f(1.25) + f(1.0), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f(-0.5) - 2.0 * f(-0.25) + f(0.0), 0.0, epsilon = 1e-10);
        // and the continuation matches the boundary slope
        let h = 1e-6;
        let inner = (f(1.0) - f(1.0 - h)) / h;
        let outer = (f(1.0 + h) - f(1.0)) / h;
        assert!((inner - outer).abs() < 1e-4);
    }

    #[test]
    fn singular_at_zero_penalty_suggests_lambda() {
        // 12 points but only 4 distinct values: rank 3 < q - 1 after centering
        let t: Vec<f64> = (0..12).map(|i| (i % 4) as f64).collect();
        let basis = make_basis(&[0.0, 1.0, 2.0, 3.0, 0.5, 1.5, 2.5], 6).unwrap().centered_on(&t);
        let err = fit_smooth_with_basis(&basis, &t, &t, 0.0).unwrap_err();
        assert!(err.to_string().contains("positive penalty"), "{err}");
    }

    #[test]
    fn gcv_picks_from_the_grid() {
        let t = grid(100, 0.0, 3.0);
        let r: Vec<f64> = t.iter().map(|v| (2.0 * v).sin()).collect();
        let fit = fit_smooth_gcv(&t, &r, 10).unwrap();
        let b = make_basis(&t, 10).unwrap().centered_on(&t);
        let d = b.design(&t);
        let grid = lambda_grid((d.transpose() * &d).trace(), b.penalty().trace());
        assert!(grid.iter().any(|l| (l - fit.penalty_lambda).abs() <= 1e-12 * l));
    }
}
