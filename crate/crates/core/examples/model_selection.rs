//! Pick network hyperparameters by holdout loss before testing, as the
//! tests assume a network that fits the data well.

use gradperm::simgen::{gen_nonlin5, select_network};
use gradperm::NetworkConfig;

fn main() -> gradperm::Result<()> {
    let data = gen_nonlin5(300, 12)?;
    let mut candidates = Vec::new();
    for hidden in [5, 20, 40] {
        for lr in [0.01, 0.05] {
            candidates.push(NetworkConfig { hidden_sizes: vec![hidden], initial_learning_rate: lr, ..Default::default() });
        }
    }
    candidates.push(NetworkConfig { hidden_sizes: vec![20, 10], ..Default::default() });

    let (best, losses) = select_network(&data, &candidates, 0.25, 3)?;
    for (c, loss) in candidates.iter().zip(&losses) {
        let mark = if std::ptr::eq(c, &candidates[best]) { "*" } else { " " };
        println!("{mark} hidden {:<8} lr {:<5} holdout MSE {loss:.4}", format!("{:?}", c.hidden_sizes), c.initial_learning_rate);
    }
    Ok(())
}
