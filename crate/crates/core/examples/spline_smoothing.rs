//! Penalized cubic regression spline with the penalty chosen by GCV, and
//! what a fixed penalty does at the extremes.

use gradperm::{seed, spline};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> gradperm::Result<()> {
    let mut rng = seed::rng(4);
    let t: Vec<f64> = (0..500).map(|_| rng.random_range(-2.0..2.0)).collect();
    let r: Vec<f64> = t.iter().map(|v| (2.0 * v).sin() + 0.2 * rng.sample::<f64, _>(StandardNormal)).collect();

    let gcv = spline::fit_smooth_gcv(&t, &r, 10)?;
    println!("GCV: λ = {:.3e}, edf = {:.2}, knots {:.2?}", gcv.penalty_lambda, gcv.edf, gcv.basis.knots());
    for lambda in [0.0, 1e3, 1e9] {
        let fit = spline::fit_smooth(&t, &r, 10, lambda)?;
        println!("λ = {lambda:.0e}: edf = {:.2}, roughness = {:.3e}", fit.edf, fit.roughness());
    }

    println!("{:>6} {:>9} {:>9}", "t", "sin(2t)", "fit");
    for i in 0..=8 {
        let x = -2.0 + 0.5 * i as f64;
        println!("{x:>6.2} {:>9.4} {:>9.4}", (2.0 * x).sin(), gcv.predict(x));
    }
    // The nonlinearity statistic is the mean squared coefficient.
    println!("mean squared θ = {:.4}", gradperm::permtest::nonlin_statistic(&gcv));
    Ok(())
}
