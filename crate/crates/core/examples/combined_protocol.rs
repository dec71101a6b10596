//! Two-step protocol: association first, nonlinearity only for associated
//! features. One network fitted to the observed data serves both steps.

use gradperm::permtest::combined_protocol;
use gradperm::{seed, Dataset, TestConfig};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> gradperm::Result<()> {
    let mut rng = seed::rng(3);
    let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rng.sample(StandardNormal)).collect()).collect();
    // x1 linear, x2 quadratic, x3 noise.
    let y = rows.iter().map(|r| r[0] + r[1] * r[1] + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
    let data = Dataset::from_rows(&rows, y)?.with_feature_names(vec!["dose".into(), "age".into(), "noise".into()])?;

    let cfg = TestConfig { permutations: 99, master_seed: 17, ..TestConfig::default() };
    for j in 0..3 {
        let r = combined_protocol(&data, j, &cfg)?;
        let nonlin = r.nonlinearity.as_ref().map_or("skipped".to_string(), |t| format!("{:.3}", t.p_value));
        println!(
            "{:>6}: association p = {:.3}, nonlinearity p = {nonlin:>7} -> {:?}",
            data.feature_names()[j],
            r.association.p_value,
            r.verdict
        );
    }
    Ok(())
}
