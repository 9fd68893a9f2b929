//! Runs a small p x filter sweep from a config string, then prints the final
//! generalization gap per cell and renders the sparsity table.

use std::path::Path;

use lpgcn::io::{render_plotdata, run_experiment_config, ExperimentConfig, PlotKind};
use lpgcn::Result;

const CONFIG: &str = "
synth_n = 200
synth_d = 16
synth_informative = 8
synth_nuisance_noise = 0.001
normalize_features = true
mode = theory
activation = identity
lambda = 0.0003
eta = 1.0
epochs = 30
record_every = 10
p_grid = 1.001, 1.516, 2
filter_grid = unnormalized, augmented_normalized
repeats = 3
";

fn main() -> Result<()> {
    let out = std::env::temp_dir().join("lpgcn-sweep-example");
    let mut config = ExperimentConfig::parse(CONFIG, Path::new("<inline>"), Path::new("."))?;
    config.output_dir = out.clone();
    let (outputs, table) = run_experiment_config(&config)?;

    let last = config.train.epochs;
    for cell in table.summarize().iter().filter(|c| c.epoch == last) {
        println!(
            "{:<22} p={:<6} gap {:.4} ± {:.4}  distance {:.3e}",
            cell.filter.name(),
            cell.p,
            cell.gen_gap.0,
            cell.gen_gap.1,
            cell.param_distance.0
        );
    }
    println!("\n{}", render_plotdata(&table.rows(), PlotKind::SparsityTable));
    println!("metrics in {}", outputs.metrics.display());
    Ok(())
}
