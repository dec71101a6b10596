//! Train a small network and check its input gradients against central
//! finite differences, both through the closed form (one hidden layer) and
//! reverse-mode differentiation.

use gradperm::nn::{self, NetworkConfig};
use gradperm::{seed, Dataset};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> gradperm::Result<()> {
    let mut rng = seed::rng(7);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..3).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let y = rows.iter().map(|r: &Vec<f64>| r[0] + r[1] * r[1] + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
    let data = Dataset::from_rows(&rows, y)?;

    let trained = nn::fit(&data, &NetworkConfig { hidden_sizes: vec![12], epochs: 80, ..Default::default() })?;
    let net = &trained.network;
    println!("final training loss {:.4}", trained.final_loss().unwrap_or(f64::NAN));

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for x in rows.iter().take(5) {
        for j in 0..3 {
            let (mut up, mut down) = (x.clone(), x.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (net.forward(&up)? - net.forward(&down)?) / (2.0 * h);
            let closed = nn::input_gradient_closed_form(net, x, j)?;
            let backprop = nn::input_gradient_backprop(net, x, j)?;
            worst = worst.max((backprop - fd).abs());
            println!("x{} at row {:>6.3?}: closed {closed:>9.5}  backprop {backprop:>9.5}  fd {fd:>9.5}", j + 1, x);
        }
    }
    println!("largest |analytic - fd| = {worst:.2e}");

    // The derivative with respect to x2 should track 2 * x2.
    let g = nn::feature_gradients(net, &data, 1)?;
    for (r, gi) in rows.iter().zip(&g).take(5) {
        println!("x2 = {:>6.3}: dμ/dx2 = {gi:>6.3} (truth {:>6.3})", r[1], 2.0 * r[1]);
    }
    Ok(())
}
