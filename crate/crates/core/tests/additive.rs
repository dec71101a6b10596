mod common;

use common::{dataset_from, normal_columns};
use gradperm::additive::{fit_additive, fit_additive_gcv, predict_additive};
use gradperm::linalg;
use gradperm::simgen::gen_nonlin5;
use gradperm::Dataset;
use nalgebra::DVector;
use proptest::prelude::*;

fn ols_sse(data: &Dataset) -> f64 {
    let design = linalg::design_with_intercept(data.x(), data.n_features());
    linalg::ols(&design, &DVector::from_column_slice(data.y())).unwrap().rss
}

#[test]
fn linear_data_matches_multiple_regression() {
    let data = dataset_from(400, 3, 0.3, 11, |r| 0.3 * r[0] - 0.5 * r[1] + 0.2 * r[2]);
    let fit = fit_additive_gcv(&data, 0, 10).unwrap();
    let ols = ols_sse(&data);
    assert!((fit.sse() - ols).abs() / ols < 0.01, "additive {} vs ols {ols}", fit.sse());
    for (k, s) in &fit.smooth_components {
        let values: Vec<f64> = data.column(*k).iter().map(|&x| s.component(x)).collect();
        let var = gradperm::data::mean_sd(&values).1.powi(2);
        assert!(s.roughness() < 1e-2 * var, "feature {k}: roughness {} vs variance {var}", s.roughness());
    }
}

#[test]
fn single_feature_reduces_to_simple_regression() {
    let data = dataset_from(150, 1, 0.5, 12, |r| 1.0 + 2.5 * r[0]);
    let fit = fit_additive(&data, 0, 10, 3.0).unwrap();
    let x = data.column(0);
    let y = data.y();
    let (mx, my) = (gradperm::data::mean(&x), gradperm::data::mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    assert!((fit.linear_coef - sxy / sxx).abs() < 1e-8);
    assert!((fit.intercept - (my - sxy / sxx * mx)).abs() < 1e-8);
}

#[test]
fn quadratic_signal_beats_the_linear_model() {
    let data = gen_nonlin5(500, 3).unwrap();
    let fit = fit_additive_gcv(&data, 0, 10).unwrap();
    assert!(fit.sse() < ols_sse(&data));
}

#[test]
fn residuals_and_predictions_are_consistent() {
    let data = gen_nonlin5(300, 4).unwrap();
    let fit = fit_additive_gcv(&data, 2, 8).unwrap();
    for ((f, r), y) in fit.fitted.iter().zip(&fit.residuals).zip(data.y()) {
        assert!((f + r - y).abs() < 1e-10);
    }
    let pred = predict_additive(&fit, data.x()).unwrap();
    assert_eq!(pred.extrapolated_rows, 0);
    for (a, b) in pred.values.iter().zip(&fit.fitted) {
        assert!((a - b).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn additive_fit_nests_the_linear_fit(s in any::<u64>(), lambda in 1e-4f64..1e4, p in 2usize..4) {
        let cols = normal_columns(150, p, s);
        let y: Vec<f64> = (0..150).map(|i| cols[0][i].sin() + cols[p - 1][i].abs() + cols[1][i] * cols[0][i]).collect();
        let data = Dataset::from_columns(&cols, y).unwrap();
        let fit = fit_additive(&data, 0, 6, lambda).unwrap();
        prop_assert!(fit.sse() <= ols_sse(&data) + 1e-6);
    }
}
