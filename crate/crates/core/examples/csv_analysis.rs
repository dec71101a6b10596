//! End-to-end analysis of a CSV file, the library equivalent of
//! `gradperm test data.csv --outcome y --feature ... --test both`.
//! Pass a CSV path and an outcome column, or run without arguments to
//! analyse a generated file.

use std::fs::File;
use std::path::PathBuf;

use gradperm::permtest::combined_protocol;
use gradperm::{seed, Dataset, TestConfig};
use rand::Rng;
use rand_distr::StandardNormal;

fn demo_csv() -> std::io::Result<PathBuf> {
    let path = std::env::temp_dir().join("gradperm_demo.csv");
    let mut rng = seed::rng(9);
    let mut text = String::from("age,dose,batch,response\n");
    for _ in 0..200 {
        let (age, dose, batch): (f64, f64, f64) = (rng.random_range(20.0..80.0), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let response = 0.05 * age + (dose.abs() - 0.8).max(0.0) * 2.0 + 0.3 * rng.sample::<f64, _>(StandardNormal);
        text.push_str(&format!("{age},{dose},{batch},{response}\n"));
    }
    std::fs::write(&path, text)?;
    Ok(path)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (path, outcome) = match (args.next(), args.next()) {
        (Some(p), Some(o)) => (PathBuf::from(p), o),
        _ => (demo_csv()?, "response".to_string()),
    };
    // Features on very different scales train better standardized.
    let data = Dataset::from_csv_reader(File::open(&path)?, &outcome)?.standardized();
    println!("{}: {} rows, features {:?}", path.display(), data.n_rows(), data.feature_names());

    let cfg = TestConfig { permutations: 99, master_seed: 1, ..TestConfig::default() };
    for j in 0..data.n_features() {
        let r = combined_protocol(&data, j, &cfg)?;
        println!("{}", serde_json::json!({
            "feature": data.feature_names()[j],
            "verdict": r.verdict,
            "association_p": r.association.p_value,
            "nonlinearity_p": r.nonlinearity.as_ref().map(|t| t.p_value),
        }));
    }
    Ok(())
}
