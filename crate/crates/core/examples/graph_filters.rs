//! Builds the four graph filters on a small random graph and compares their
//! spectral radius and aggregated feature norm g_e.

use lpgcn::graph::{build_filter, compute_ge, dense_max_abs_eigenvalue, spectral_radius};
use lpgcn::io::make_synthetic;
use lpgcn::{FilterKind, Result};

fn main() -> Result<()> {
    let mut dataset = make_synthetic(120, 8, 2, 0.08, 0.7, 3)?;
    dataset.normalize_rows();
    println!(
        "graph: {} nodes, {} undirected edges",
        dataset.n(),
        dataset.graph.nnz() / 2
    );
    println!("{:<22} {:>10} {:>10} {:>10} {:>6} {:>8}", "filter", "power", "dense", "lambda_min", "iters", "g_e");
    for kind in FilterKind::ALL {
        let g = build_filter(&dataset.graph, kind);
        let est = spectral_radius(&g, 1e-10, 10_000, 0)?;
        let dense = dense_max_abs_eigenvalue(&g)?;
        let ge = compute_ge(&g, dataset.features.view())?;
        println!(
            "{:<22} {:>10.6} {:>10.6} {:>10.6} {:>6} {:>8.4}",
            kind.name(),
            est.lambda_max_abs,
            dense,
            est.lambda_min,
            est.iterations_used,
            ge
        );
    }
    Ok(())
}
