//! Association test: is each feature related to the outcome at all?
//!
//! y = x1 + sin(2 x2) + noise; x3 is irrelevant.

use gradperm::permtest::association_test;
use gradperm::{seed, Dataset, TestConfig};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> gradperm::Result<()> {
    let mut rng = seed::rng(1);
    let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let y = rows.iter().map(|r| r[0] + (2.0 * r[1]).sin() + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
    let data = Dataset::from_rows(&rows, y)?;

    let cfg = TestConfig { permutations: 99, master_seed: 11, ..TestConfig::default() };
    for j in 0..3 {
        let r = association_test(&data, j, &cfg)?;
        println!(
            "{}: T = {:.4}, p = {:.3} ({} replicates, {} failed)",
            r.feature.name, r.t_observed, r.p_value, r.permutations, r.diagnostics.failed_replicates
        );
        for w in &r.diagnostics.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
