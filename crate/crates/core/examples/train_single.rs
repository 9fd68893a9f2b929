//! One proximal SGD run on a synthetic graph, printing the learning curve.

use lpgcn::io::make_synthetic;
use lpgcn::sgd::train;
use lpgcn::{ActivationKind, FilterKind, LossKind, Result, TrainConfig};

fn main() -> Result<()> {
    let mut dataset = make_synthetic(300, 16, 3, 0.04, 0.85, 1)?;
    dataset.normalize_rows();
    let config = TrainConfig {
        p: 1.32,
        lambda: 1e-4,
        eta: 0.5,
        epochs: 40,
        record_every: 5,
        loss: LossKind::SoftmaxCrossEntropy,
        activation: ActivationKind::Identity,
        filter_kind: FilterKind::AugmentedNormalized,
        ..TrainConfig::default()
    };
    let (params, trajectory, metrics) = train(&dataset, &config)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>9}", "epoch", "train_err", "test_err", "gap", "sparsity");
    for m in metrics.rows.iter().filter(|m| m.epoch % config.record_every == 0) {
        println!(
            "{:>6} {:>10.4} {:>10.4} {:>10.4} {:>8.2}%",
            m.epoch, m.train_error, m.test_error, m.gen_gap, m.sparsity_pct
        );
    }
    println!(
        "{} steps, {} snapshots, final |W| = {:.4}",
        trajectory.index_sequence.len(),
        trajectory.snapshots.len(),
        params.l2_norm()
    );
    Ok(())
}
