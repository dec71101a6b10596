mod common;

use common::dataset_from;
use gradperm::nn::{NetworkConfig, OutputActivation};
use gradperm::permtest::{self, p_value, PValueRule, TestKind};
use gradperm::{Smoothing, TestConfig, Verdict};

fn desk_config(b: usize, seed: u64) -> TestConfig {
    TestConfig { permutations: b, master_seed: seed, ..TestConfig::default() }
}

#[test]
fn duplicated_feature_gives_zero_p_value() {
    let data = dataset_from(200, 3, 0.0, 1, |r| r[1]);
    let res = permtest::association_test(&data, 1, &desk_config(99, 1)).unwrap();
    assert_eq!(res.p_value, 0.0);
    assert!(res.t_null.iter().all(|t| *t < res.t_observed));
}

#[test]
fn results_satisfy_their_invariants() {
    let data = dataset_from(150, 2, 0.3, 2, |r| r[0] + 0.5 * r[1].powi(2));
    let cfg = desk_config(39, 2);
    for res in [
        permtest::association_test(&data, 1, &cfg).unwrap(),
        permtest::nonlinearity_test(&data, 1, &cfg).unwrap(),
    ] {
        assert_eq!(res.t_null.len(), 39);
        assert_eq!(res.p_value, p_value(res.t_observed, &res.t_null));
        assert!((res.p_value * 39.0 - (res.p_value * 39.0).round()).abs() < 1e-12);
        assert!(res.t_observed >= 0.0 && res.t_null.iter().all(|t| *t >= 0.0));
        assert_eq!(res.diagnostics.observed_gradients.len(), 150);
        assert_eq!(res.diagnostics.replicate_final_losses.len(), 39);
        assert_eq!(res.feature.name, "x2");
    }
}

#[test]
fn add_one_rule_is_available() {
    let data = dataset_from(100, 2, 0.0, 3, |r| r[0]);
    let cfg = TestConfig { p_value_rule: PValueRule::AddOne, ..desk_config(19, 3) };
    let res = permtest::association_test(&data, 0, &cfg).unwrap();
    assert_eq!(res.p_value, 1.0 / 20.0);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let data = dataset_from(120, 3, 0.2, 4, |r| r[0].sin() + r[1]);
    let base = desk_config(16, 4);
    let run = |w| {
        let cfg = TestConfig { workers: Some(w), ..base.clone() };
        (
            permtest::association_test(&data, 0, &cfg).unwrap(),
            permtest::nonlinearity_test(&data, 0, &cfg).unwrap(),
        )
    };
    let one = run(1);
    for w in [2, 3, 4] {
        assert_eq!(run(w), one);
    }
}

#[test]
fn combined_protocol_sorts_features_into_verdicts() {
    let noise = dataset_from(200, 2, 1.0, 5, |_| 0.0);
    let none = permtest::combined_protocol(&noise, 0, &desk_config(99, 5)).unwrap();
    assert_eq!(none.verdict, Verdict::None);
    assert!(none.nonlinearity.is_none());

    let line = dataset_from(200, 2, 0.1, 6, |r| r[0]);
    let linear = permtest::combined_protocol(&line, 0, &desk_config(99, 6)).unwrap();
    assert_eq!(linear.verdict, Verdict::Linear, "nonlinearity p = {:?}", linear.nonlinearity.map(|r| r.p_value));

    let square = dataset_from(200, 2, 0.1, 7, |r| r[0] * r[0]);
    let nonlinear = permtest::combined_protocol(&square, 0, &desk_config(99, 7)).unwrap();
    assert_eq!(nonlinear.verdict, Verdict::Nonlinear);
    assert_eq!(nonlinear.nonlinearity.unwrap().kind, TestKind::Nonlinearity);
}

#[test]
fn separate_observed_fits_are_supported() {
    let data = dataset_from(150, 2, 0.1, 8, |r| r[0] * r[0]);
    let cfg = TestConfig { share_observed_fit: false, ..desk_config(19, 8) };
    let res = permtest::combined_protocol(&data, 0, &cfg).unwrap();
    let shared = permtest::combined_protocol(&data, 0, &desk_config(19, 8)).unwrap();
    assert_eq!(res.association.t_observed, shared.association.t_observed);
    assert_eq!(res.association.t_null, shared.association.t_null);
    assert_ne!(
        res.nonlinearity.unwrap().diagnostics.observed_gradients,
        shared.nonlinearity.unwrap().diagnostics.observed_gradients
    );
}

#[test]
fn fixed_smoothing_is_reported() {
    let data = dataset_from(150, 2, 0.2, 9, |r| r[0]);
    let cfg = TestConfig { smoothing: Smoothing::Fixed(2.5), ..desk_config(9, 9) };
    let res = permtest::nonlinearity_test(&data, 0, &cfg).unwrap();
    assert_eq!(res.diagnostics.smoothing_lambda, Some(2.5));
}

#[test]
fn correlated_features_trigger_a_warning() {
    let data = dataset_from(200, 2, 0.2, 10, |r| r[1]);
    let mixed: Vec<f64> = data.column(0).iter().zip(data.column(1)).map(|(a, b)| a + b).collect();
    let data = data.with_column(1, &mixed).unwrap();
    let res = permtest::association_test(&data, 0, &desk_config(5, 10)).unwrap();
    assert_eq!(res.diagnostics.warnings.len(), 1);
    assert!(res.diagnostics.warnings[0].contains("x2"));
}

#[test]
fn binary_outcomes_support_the_association_test_only() {
    let base = dataset_from(200, 2, 0.0, 11, |r| r[0]);
    let y = base.y().iter().map(|v| f64::from(u8::from(*v > 0.0))).collect();
    let data = base.with_outcome(y).unwrap();
    let network = NetworkConfig { output_activation: OutputActivation::Sigmoid, ..NetworkConfig::default() };
    let cfg = TestConfig { network, ..desk_config(19, 11) };
    let res = permtest::association_test(&data, 0, &cfg).unwrap();
    assert_eq!(res.p_value, 0.0);
    assert!(permtest::nonlinearity_test(&data, 0, &cfg).is_err());
}

#[test]
fn divergent_training_is_an_error() {
    let data = dataset_from(50, 2, 0.1, 12, |r| 1e6 * r[0]);
    let network = NetworkConfig { initial_learning_rate: 1e6, ..NetworkConfig::default() };
    let cfg = TestConfig { network, ..desk_config(5, 12) };
    let err = permtest::association_test(&data, 0, &cfg).unwrap_err();
    assert!(err.is_divergence(), "{err}");
}
