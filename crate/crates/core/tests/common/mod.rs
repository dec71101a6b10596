#![allow(dead_code)]

use gradperm::nn::{self, Network, NetworkConfig, OutputActivation};
use gradperm::seed;
use gradperm::Dataset;
use rand::Rng;
use rand_distr::StandardNormal;

/// Random network with nonzero biases; weights uniform on [-1.5, 1.5].
pub fn random_network(p: usize, hidden: &[usize], act: OutputActivation, seed_value: u64) -> Network {
    let cfg = NetworkConfig {
        hidden_sizes: hidden.to_vec(),
        output_activation: act,
        init_scale: Some(1.5),
        seed: seed_value,
        ..NetworkConfig::default()
    };
    let mut net = nn::init_network(p, &cfg).unwrap();
    let mut rng = seed::rng(seed_value ^ 0x5eed);
    for layer in &mut net.hidden {
        for b in &mut layer.biases {
            *b = rng.random_range(-1.0..1.0);
        }
    }
    net.output_bias = rng.random_range(-1.0..1.0);
    net
}

pub fn normal_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn normal_columns(n: usize, p: usize, seed_value: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(seed_value);
    (0..p).map(|_| normal_vec(&mut rng, n)).collect()
}

/// Dataset from columns and an outcome computed row-wise plus N(0, sd) noise.
pub fn dataset_from<F: Fn(&[f64]) -> f64>(n: usize, p: usize, sd: f64, seed_value: u64, f: F) -> Dataset {
    let cols = normal_columns(n, p, seed_value);
    let mut rng = seed::rng(seed_value.wrapping_add(1));
    let y = (0..n)
        .map(|i| {
            let row: Vec<f64> = cols.iter().map(|c| c[i]).collect();
            f(&row) + sd * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    Dataset::from_columns(&cols, y).unwrap()
}

/// Kolmogorov-Smirnov distance between a sample and U(0, 1).
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let v = v.clamp(0.0, 1.0);
            ((i as f64 + 1.0) / n - v).abs().max((v - i as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}
