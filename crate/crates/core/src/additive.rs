//! Additive model with one feature restricted to a linear term:
//! `y = a + beta_j x_j + sum_{k != j} s_k(x_k) + e`.
//!
//! All terms are estimated jointly by penalized least squares on the stacked
//! design `[1 | x_j | B_1 | ... ]`, one centered cubic regression spline block
//! per smooth feature, all blocks sharing one smoothing parameter.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::spline::{self, make_basis, SmoothFit, Smoothing, SplineBasis};

#[derive(Debug, Clone)]
pub struct AdditiveFit {
    pub linear_index: usize,
    pub linear_coef: f64,
    pub intercept: f64,
    /// `(feature, smooth)` for every feature except `linear_index`.
    /// Component intercepts are zero; the level lives in `intercept`.
    pub smooth_components: Vec<(usize, SmoothFit)>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub penalty_lambda: f64,
    pub edf: f64,
    n_features: usize,
}

/// Predictions plus a count of rows that needed linear extrapolation.
#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub values: Vec<f64>,
    pub extrapolated_rows: usize,
}

impl AdditiveFit {
    pub fn sse(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

struct AdditiveSystem {
    design: DMatrix<f64>,
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    anchored: DMatrix<f64>,
    penalty: DMatrix<f64>,
    bases: Vec<(usize, SplineBasis)>,
}

fn additive_system(data: &Dataset, j: usize, q: usize) -> Result<AdditiveSystem> {
    data.check_feature(j)?;
    if data.has_binary_outcome() {
        return Err(Error::UnsupportedOutcome(
            "the additive model supports continuous outcomes only".into(),
        ));
    }
    let (n, p) = (data.n_rows(), data.n_features());
    if n <= p * q {
        return Err(Error::Rank(format!(
            "additive model with {p} features and q = {q} needs more than {} rows, got {n}",
            p * q
        )));
    }
    let mut bases = Vec::with_capacity(p - 1);
    for k in (0..p).filter(|&k| k != j) {
        let col = data.column(k);
        bases.push((k, make_basis(&col, q)?.centered_on(&col)));
    }
    let width = 2 + bases.len() * q;
    let mut design = DMatrix::<f64>::zeros(n, width);
    let xj = data.column(j);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        design[(i, 1)] = xj[i];
    }
    let mut row = vec![0.0; q];
    for (b, (k, basis)) in bases.iter().enumerate() {
        for (i, r) in data.rows().enumerate() {
            basis.evaluate_into(r[*k], &mut row);
            for (l, v) in row.iter().enumerate() {
                design[(i, 2 + b * q + l)] = *v;
            }
        }
    }
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * DVector::from_column_slice(data.y());
    let mut penalty = DMatrix::<f64>::zeros(width, width);
    let mut anchored = gram.clone();
    for (b, (_, basis)) in bases.iter().enumerate() {
        let at = 2 + b * q;
        penalty.view_mut((at, at), (q, q)).copy_from(basis.penalty());
        let anchor = gram.view((at, at), (q, q)).trace() / q as f64;
        anchored.view_mut((at, at), (q, q)).add_scalar_mut(anchor.max(1e-12));
    }
    Ok(AdditiveSystem { design, gram, rhs, anchored, penalty, bases })
}

fn solve_additive(data: &Dataset, j: usize, q: usize, sys: &AdditiveSystem, lambda: f64) -> Result<AdditiveFit> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("penalty lambda must be nonnegative, got {lambda}")));
    }
    let m = &sys.anchored + &sys.penalty * lambda;
    let inv = linalg::inverse_spd(&m, "additive model")?;
    let coef = &inv * &sys.rhs;
    let fitted_v = &sys.design * &coef;
    let fitted: Vec<f64> = fitted_v.iter().copied().collect();
    let residuals: Vec<f64> = data.y().iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let edf = (&inv * &sys.gram).trace();
    let smooth_components = sys
        .bases
        .iter()
        .enumerate()
        .map(|(b, (k, basis))| {
            let theta: Vec<f64> = coef.rows(2 + b * q, q).iter().copied().collect();
            (
                *k,
                SmoothFit {
                    basis: basis.clone(),
                    theta,
                    intercept: 0.0,
                    penalty_lambda: lambda,
                    rss: f64::NAN,
                    edf: f64::NAN,
                },
            )
        })
        .collect();
    Ok(AdditiveFit {
        linear_index: j,
        linear_coef: coef[1],
        intercept: coef[0],
        smooth_components,
        fitted,
        residuals,
        penalty_lambda: lambda,
        edf,
        n_features: data.n_features(),
    })
}

/// Fits the additive model with feature `j` entering linearly.
pub fn fit_additive(data: &Dataset, j: usize, q: usize, penalty_lambda: f64) -> Result<AdditiveFit> {
    let sys = additive_system(data, j, q)?;
    solve_additive(data, j, q, &sys, penalty_lambda)
}

/// Fits the additive model choosing the shared penalty by GCV.
pub fn fit_additive_gcv(data: &Dataset, j: usize, q: usize) -> Result<AdditiveFit> {
    let sys = additive_system(data, j, q)?;
    if sys.bases.is_empty() {
        return solve_additive(data, j, q, &sys, 0.0);
    }
    let n = data.n_rows() as f64;
    let smooth_scale: f64 = sys.gram.view((2, 2), (sys.gram.nrows() - 2, sys.gram.nrows() - 2)).trace();
    let mut best: Option<(f64, AdditiveFit)> = None;
    for lambda in spline::lambda_grid(smooth_scale, sys.penalty.trace()) {
        let fit = solve_additive(data, j, q, &sys, lambda)?;
        let score = spline::gcv_score(n, fit.sse(), fit.edf);
        if best.as_ref().map_or(true, |(s, _)| score < *s) {
            best = Some((score, fit));
        }
    }
    Ok(best.expect("grid is nonempty").1)
}

pub fn fit_additive_with_policy(data: &Dataset, j: usize, q: usize, policy: Smoothing) -> Result<AdditiveFit> {
    match policy {
        Smoothing::Gcv => fit_additive_gcv(data, j, q),
        Smoothing::Fixed(lambda) => fit_additive(data, j, q, lambda),
    }
}

/// Evaluates the fitted additive function on the rows of `x` (row-major,
/// same column count as the training data).
pub fn predict_additive(fit: &AdditiveFit, x: &[f64]) -> Result<Prediction> {
    let p = fit.n_features;
    if x.len() % p != 0 {
        return Err(Error::Shape(format!("{} values do not form rows of {p} features", x.len())));
    }
    let mut extrapolated_rows = 0;
    let values = x
        .chunks_exact(p)
        .map(|row| {
            let mut outside = false;
            let mut v = fit.intercept + fit.linear_coef * row[fit.linear_index];
            for (k, s) in &fit.smooth_components {
                outside |= s.basis.is_outside(row[*k]);
                v += s.component(row[*k]);
            }
            extrapolated_rows += usize::from(outside);
            v
        })
        .collect();
    Ok(Prediction { values, extrapolated_rows })
}
