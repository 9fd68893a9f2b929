//! Generates a stochastic block model dataset, writes it in the on-disk
//! format, and loads it back.

use lpgcn::io::{load_dataset, write_dataset, SyntheticSpec};
use lpgcn::{Error, Result};

fn main() -> Result<()> {
    let spec = SyntheticSpec {
        informative: 6,
        signal: 1.5,
        ..SyntheticSpec::new(150, 10, 3, 0.06, 0.9, 5)
    };
    let dataset = spec.generate()?;
    let dir = std::env::temp_dir().join("lpgcn-synthetic-example");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_dataset(&dir, &dataset)?;
    let (loaded, manifest) = load_dataset(&dir, false)?;
    println!("wrote and reloaded {}", dir.display());
    println!("{manifest:#?}");
    let same = intra_class_fraction(&loaded);
    println!("intra-class edge fraction: {same:.3}");
    Ok(())
}

fn intra_class_fraction(dataset: &lpgcn::Dataset) -> f64 {
    let (mut same, mut total) = (0usize, 0usize);
    for i in 0..dataset.n() {
        let (cols, _) = dataset.graph.row(i);
        for &j in cols {
            total += 1;
            same += usize::from(dataset.labels[i] == dataset.labels[j]);
        }
    }
    same as f64 / total.max(1) as f64
}
