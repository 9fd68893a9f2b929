use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lpgcn::graph::{build_filter, compute_ge, spectral_radius, DEFAULT_SPECTRAL_MAX_ITER};
use lpgcn::io::{
    bounds_table, emit_plotdata, run_experiment_config, write_bounds_csv, write_dataset,
    ExperimentConfig, PlotKind, SyntheticSpec,
};
use lpgcn::lab::{pick_perturbed_node, twin_train, write_metrics_csv, SweepRun, SweepTable};
use lpgcn::sgd::train;
use lpgcn::{Error, FilterKind, Result};

#[derive(Parser)]
#[command(name = "lpgcn", version, about = "lp-regularized GCN training and stability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Scale every feature row to unit norm.
    #[arg(long)]
    normalize_features: bool,
    /// Magnitude at or below which a weight counts as zero.
    #[arg(long)]
    eps_sparsity: Option<f64>,
    /// Worker threads for parallel runs.
    #[arg(long, env = "LPGCN_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Single training run; writes train_metrics.csv.
    Train(Common),
    /// Twin runs on D and a perturbed copy; writes twin_metrics.csv.
    Twin {
        #[command(flatten)]
        common: Common,
        /// Training node to perturb (default: drawn from the seed).
        #[arg(long)]
        node: Option<usize>,
    },
    /// Full p × filter sweep; writes metrics.csv, bounds.csv, manifest.json.
    Sweep(Common),
    /// Evaluates the theoretical bounds for every grid cell; writes bounds.csv.
    Bounds(Common),
    /// Prints the spectral radius and g_e for every filter.
    Spectral(Common),
    /// Writes a synthetic stochastic-block-model dataset directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 0.05)]
        edge_prob: f64,
        #[arg(long, default_value_t = 0.8)]
        homophily: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Turns a metrics.csv into plot data.
    Plotdata {
        #[arg(long)]
        metrics: PathBuf,
        /// gap, distance or sparsity.
        #[arg(long)]
        kind: PlotKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    if let Some(t) = common.threads {
        // Fails only if the pool was already built.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let mut config = ExperimentConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        config.train.seed = seed;
    }
    if let Some(eps) = common.eps_sparsity {
        config.train.eps_sparsity = eps;
    }
    config.normalize_features |= common.normalize_features;
    config.validate()?;
    Ok(config)
}

fn write_table(dir: &Path, name: &str, table: &SweepTable) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_metrics_csv(&table.rows(), file)?;
    Ok(path)
}

fn single_run_table(config: &ExperimentConfig, metrics: lpgcn::lab::RunMetrics, node: usize) -> SweepTable {
    SweepTable {
        runs: vec![SweepRun {
            run_id: 0,
            p: config.train.p,
            filter: config.train.filter_kind,
            repeat: 0,
            seed: config.train.seed,
            perturbed_index: node,
            metrics,
        }],
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let config = load_config(&common)?;
            let (dataset, _) = config.load_data()?;
            let (params, _, metrics) = train(&dataset, &config.train)?;
            let last = metrics.last().cloned();
            let path = write_table(&config.output_dir, "train_metrics.csv", &single_run_table(&config, metrics, 0))?;
            if let Some(m) = last {
                println!(
                    "epoch {}: train {:.6} test {:.6} gap {:.6} sparsity {:.2}% |w| {:.6}",
                    m.epoch, m.train_error, m.test_error, m.gen_gap, m.sparsity_pct, params.l2_norm()
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Twin { common, node } => {
            let config = load_config(&common)?;
            let (dataset, _) = config.load_data()?;
            let node = match node {
                Some(i) => i,
                None => pick_perturbed_node(&dataset, config.train.seed)?,
            };
            let twin = twin_train(&dataset, &config.train, node)?;
            if let Some(m) = twin.run_a.metrics.last() {
                println!(
                    "perturbed node {node} (copied from {}): final distance {:.6e}",
                    twin.replacement.source_node,
                    m.param_distance.unwrap_or(f64::NAN)
                );
            }
            let path = write_table(&config.output_dir, "twin_metrics.csv", &single_run_table(&config, twin.run_a.metrics, node))?;
            println!("wrote {}", path.display());
        }
        Command::Sweep(common) => {
            let config = load_config(&common)?;
            let (out, table) = run_experiment_config(&config)?;
            println!("{} runs", table.runs.len());
            for p in [&out.metrics, &out.bounds, &out.manifest] {
                println!("wrote {}", p.display());
            }
        }
        Command::Bounds(common) => {
            let config = load_config(&common)?;
            let (dataset, _) = config.load_data()?;
            let rows = bounds_table(&dataset, &config.train, &config.p_grid, &config.filter_grid, config.delta)?;
            for r in &rows {
                println!(
                    "{:<22} p={:<6} lambda_G={:.6} g_e={:.6} C={:.4e} ln_beta={:.4} gen_bound={:.4e}",
                    r.filter.name(), r.p, r.lambda_g_max, r.g_e, r.c_p_lambda, r.ln_beta_n, r.gen_bound
                );
            }
            fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
            let path = config.output_dir.join("bounds.csv");
            write_bounds_csv(&path, &rows)?;
            println!("wrote {}", path.display());
        }
        Command::Spectral(common) => {
            let config = load_config(&common)?;
            let (dataset, _) = config.load_data()?;
            println!("filter,lambda_max_abs,lambda_max,lambda_min,iterations,residual,g_e");
            for kind in FilterKind::ALL {
                let g = build_filter(&dataset.graph, kind);
                let s = spectral_radius(&g, 1e-10, DEFAULT_SPECTRAL_MAX_ITER, config.train.seed)?;
                let ge = compute_ge(&g, dataset.features.view())?;
                println!(
                    "{},{},{},{},{},{:e},{}",
                    kind, s.lambda_max_abs, s.lambda_max, s.lambda_min, s.iterations_used, s.residual, ge
                );
            }
        }
        Command::Synth { out, n, d, classes, edge_prob, homophily, seed } => {
            let ds = SyntheticSpec::new(n, d, classes, edge_prob, homophily, seed).generate()?;
            write_dataset(&out, &ds)?;
            println!("wrote {} nodes, {} edges to {}", ds.n(), ds.graph.nnz() / 2, out.display());
        }
        Command::Plotdata { metrics, kind, out } => {
            let path = emit_plotdata(&metrics, kind, out.as_deref())?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
