//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use lpgcn::bounds::{check_strong_convexity, minimizer_radius, stability_beta, BoundInputs};
use lpgcn::graph::{
    build_adjacency, build_filter, compute_ge, dense_max_abs_eigenvalue, ego_eigen_check,
    spectral_radius, SparseMatrix,
};
use lpgcn::io::{load_dataset, ExperimentConfig, SyntheticSpec};
use lpgcn::lab::{sweep, twin_train, twin_train_pair, SweepTable};
use lpgcn::model::{
    grad_sample, loss_bound, loss_eval, predict, propagate, ActivationKind, LossKind, Mode,
    ModelParams, Target,
};
use lpgcn::prox::{prox_lp, DEFAULT_PROX_TOL};
use lpgcn::sgd::{train, TrainConfig};
use lpgcn::{Dataset, FilterKind, P_GRID};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, prob: f64) -> SparseMatrix {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }
    build_adjacency(&edges, n).unwrap()
}

fn unit_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    let mut x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    for mut row in x.rows_mut() {
        let norm = row.dot(&row).sqrt();
        row /= norm;
    }
    x
}

// ---------------------------------------------------------------------------

fn prox_objective(w: f64, v: f64, lam: f64, p: f64) -> f64 {
    0.5 * (w - v) * (w - v) + lam * w.abs().powf(p)
}

fn grid_oracle(v: f64, lam: f64, p: f64) -> f64 {
    let step = 1e-4;
    let steps = (2.0 * v.abs() / step).ceil() as usize;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=steps {
        let w = (-v.abs() + k as f64 * step).min(v.abs());
        let h = prox_objective(w, v, lam, p);
        if h < best.0 {
            best = (h, w);
        }
    }
    best.1
}

fn criterion_prox() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_grid: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    let mut prox_time = Duration::ZERO;
    for &p in &P_GRID {
        for _ in 0..1000 {
            let v = Array1::from_shape_fn(2, |_| rng.random_range(-2.0..2.0));
            let lam = 10f64.powf(rng.random_range(-3.0..0.0));
            let t = Instant::now();
            let w = prox_lp(v.view(), lam, p, DEFAULT_PROX_TOL).map_err(|e| e.to_string())?;
            prox_time += t.elapsed();
            for (&wj, &vj) in w.iter().zip(&v) {
                let oracle = grid_oracle(vj, lam, p);
                worst_grid = worst_grid.max((wj - oracle).abs());
                let bound = vj.abs().min((vj.abs() / (lam * p)).powf(1.0 / (p - 1.0)));
                ensure!(
                    wj.abs() <= bound && wj * vj >= 0.0,
                    "contraction violated: v={vj} lam={lam} p={p} w={wj}"
                );
                if p == 2.0 {
                    worst_closed = worst_closed.max((wj - vj / (1.0 + 2.0 * lam)).abs());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(worst_grid <= 2e-4, "max deviation from grid oracle {worst_grid:.3e}");
    ensure!(worst_closed <= 1e-10, "p=2 closed form deviation {worst_closed:.3e}");
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "grid dev {worst_grid:.2e}, p=2 dev {worst_closed:.1e}, prox {prox_time:.2?}, total {elapsed:.1?}"
    ))
}

// ---------------------------------------------------------------------------

fn criterion_iterate_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_ratio: f64 = 0.0;
    let mut snapshots = 0;
    for run in 0..10u64 {
        let mut spec = SyntheticSpec::new(200, 8, 2, 0.05, 0.8, 100 + run);
        spec.signal = 2.0;
        let ds = spec.generate().map_err(|e| e.to_string())?;
        let (loss, act) = [
            (LossKind::Logistic, ActivationKind::Identity),
            (LossKind::Logistic, ActivationKind::Tanh),
            (LossKind::Square, ActivationKind::Tanh),
            (LossKind::Square, ActivationKind::Sigmoid),
        ][run as usize % 4];
        let config = TrainConfig {
            p: P_GRID[rng.random_range(0..P_GRID.len())],
            lambda: 10f64.powf(rng.random_range(-2.0..0.0)),
            eta: rng.random_range(0.5..5.0),
            epochs: 20,
            loss,
            activation: act,
            filter_kind: FilterKind::ALL[run as usize % 4],
            seed: run,
            record_every: 1,
            ..TrainConfig::default()
        };
        let (_, traj, _) = train(&ds, &config).map_err(|e| e.to_string())?;
        let b = loss_bound(loss, act, &ds).map_err(|e| e.to_string())?;
        let radius = minimizer_radius(b, config.lambda, config.p);
        for s in &traj.snapshots {
            let norm = s.weights.dot(&s.weights).sqrt();
            ensure!(
                norm <= radius,
                "run {run} epoch {}: |w| = {norm:e} > {radius:e}",
                s.epoch
            );
            max_ratio = max_ratio.max(norm / radius);
            snapshots += 1;
        }
    }
    Ok(format!("{snapshots} iterates, max |w|/radius = {max_ratio:.6}"))
}

// ---------------------------------------------------------------------------

fn criterion_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs = [
        (LossKind::Square, ActivationKind::Sigmoid),
        (LossKind::Square, ActivationKind::Tanh),
        (LossKind::Square, ActivationKind::Identity),
        (LossKind::Logistic, ActivationKind::Sigmoid),
        (LossKind::Logistic, ActivationKind::Tanh),
        (LossKind::Logistic, ActivationKind::Identity),
        (LossKind::SoftmaxCrossEntropy, ActivationKind::Identity),
        (LossKind::SoftmaxCrossEntropy, ActivationKind::Sigmoid),
        (LossKind::SoftmaxCrossEntropy, ActivationKind::Tanh),
    ];
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (loss, act) in pairs {
        for _ in 0..100 {
            let d = 5;
            let z = Array1::from_shape_fn(d, |_| rng.sample::<f64, _>(StandardNormal));
            let (params, y) = match loss.mode() {
                Mode::Theory => {
                    let w = Array1::from_shape_fn(d, |_| 0.5 * rng.sample::<f64, _>(StandardNormal));
                    let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    (ModelParams::from_vector(w), Target::Signed(y))
                }
                Mode::Experiment => {
                    let c = 3;
                    let w = Array2::from_shape_fn((d, c), |_| 0.5 * rng.sample::<f64, _>(StandardNormal));
                    (ModelParams::from_matrix(w), Target::Class(rng.random_range(0..c)))
                }
            };
            let g = grad_sample(z.view(), &params, y, loss, act).map_err(|e| e.to_string())?;
            let objective = |w: &ModelParams| {
                loss_eval(loss, y, &predict(z.view(), w, act).unwrap()).unwrap()
            };
            let mut fd = Array1::zeros(g.len());
            for k in 0..g.len() {
                let mut plus = params.clone();
                plus.weights_mut()[k] += h;
                let mut minus = params.clone();
                minus.weights_mut()[k] -= h;
                fd[k] = (objective(&plus) - objective(&minus)) / (2.0 * h);
            }
            let diff = (&g - &fd).mapv(|v| v * v).sum().sqrt();
            let scale = g.dot(&g).sqrt().max(fd.dot(&fd).sqrt()).max(1e-8);
            let rel = diff / scale;
            ensure!(rel < 1e-5, "{loss}/{act}: relative error {rel:.3e}");
            worst = worst.max(rel);
        }
    }
    Ok(format!("900 points, worst relative error {worst:.2e}"))
}

// ---------------------------------------------------------------------------

fn criterion_spectral() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_err: f64 = 0.0;
    let mut worst_ego: f64 = f64::INFINITY;
    let mut worst_ge: f64 = f64::INFINITY;
    for g in 0..20 {
        let n = rng.random_range(10..=100);
        let prob = rng.random_range(0.02..0.3);
        let adj = random_graph(&mut rng, n, prob);
        let x = unit_rows(&mut rng, n, 16);
        for kind in FilterKind::ALL {
            let filter = build_filter(&adj, kind);
            let est = spectral_radius(&filter, 1e-10, 100_000, g).map_err(|e| e.to_string())?;
            let dense = dense_max_abs_eigenvalue(&filter).map_err(|e| e.to_string())?;
            let err = (est.lambda_max_abs - dense).abs();
            ensure!(err <= 1e-6, "graph {g} {kind}: power {} vs dense {dense}", est.lambda_max_abs);
            worst_err = worst_err.max(err);

            let z = propagate(&filter, x.view()).map_err(|e| e.to_string())?;
            for node in 0..n {
                let (ego, full) = ego_eigen_check(&adj, kind, node).map_err(|e| e.to_string())?;
                ensure!(full - ego >= -1e-9, "graph {g} {kind} node {node}: ego {ego} > full {full}");
                worst_ego = worst_ego.min(full - ego);
                let row = z.row(node);
                let slack = dense - row.dot(&row).sqrt();
                ensure!(slack >= -1e-9, "graph {g} {kind} node {node}: aggregated norm exceeds radius by {}", -slack);
                worst_ge = worst_ge.min(slack);
            }
            let ge = compute_ge(&filter, x.view()).map_err(|e| e.to_string())?;
            ensure!(dense - ge >= -1e-9, "graph {g} {kind}: g_e {ge} > {dense}");
        }
        let un = dense_max_abs_eigenvalue(&build_filter(&adj, FilterKind::Unnormalized)).unwrap();
        let aug = dense_max_abs_eigenvalue(&build_filter(&adj, FilterKind::AugmentedNormalized)).unwrap();
        ensure!(adj.nnz() == 0 || un > aug, "graph {g}: unnormalized {un} <= augmented {aug}");
    }
    Ok(format!(
        "max |power - dense| {worst_err:.1e}, min ego slack {worst_ego:.2e}, min g_e slack {worst_ge:.2e}"
    ))
}

// ---------------------------------------------------------------------------

fn criterion_strong_convexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    for _ in 0..100_000 {
        let a = rng.random_range(-10.0..10.0);
        let b = rng.random_range(-10.0..10.0);
        let p = rng.random_range(1.0..=2.0f64).max(1.0 + 1e-9);
        let slack = check_strong_convexity(a, b, p);
        ensure!(slack >= -1e-12, "a={a} b={b} p={p}: slack {slack:e}");
        worst = worst.min(slack);
    }
    Ok(format!("100000 samples, min slack {worst:.3e}"))
}

// ---------------------------------------------------------------------------

fn criterion_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for s in 0..100 {
        let b_bound = rng.random_range(0.1..5.0);
        let base = BoundInputs {
            a_l: rng.random_range(0.1..3.0),
            a_sigma: rng.random_range(0.1..2.0),
            lambda_g_max: rng.random_range(0.5..20.0),
            g_e: rng.random_range(0.1..5.0),
            eta: 10f64.powf(rng.random_range(-3.0..0.0)),
            n: rng.random_range(10..5000),
            t: rng.random_range(1..10_000),
            p: 2.0,
            // The (B/λ)^{(3-p)/p} factor only decreases in p when B ≥ λ.
            lambda: b_bound * 10f64.powf(rng.random_range(-4.0..0.0)),
            lambda_t: 10f64.powf(rng.random_range(-5.0..0.0)),
            b_bound,
            delta: rng.random_range(0.01..0.5),
        };
        let mut prev = f64::INFINITY;
        for &p in &P_GRID {
            let beta = stability_beta(&BoundInputs { p, ..base }).map_err(|e| e.to_string())?;
            ensure!(beta.ln_value <= prev, "setting {s}: ln β rises at p={p}");
            prev = beta.ln_value;
        }
        let lo = stability_beta(&base).map_err(|e| e.to_string())?;
        let hi = stability_beta(&BoundInputs {
            lambda_g_max: base.lambda_g_max * 1.5,
            ..base
        })
        .map_err(|e| e.to_string())?;
        ensure!(hi.ln_value > lo.ln_value, "setting {s}: β not increasing in λ_G^max");
    }
    Ok("100 settings".into())
}

// ---------------------------------------------------------------------------

fn criterion_twin_determinism() -> Outcome {
    let ds = SyntheticSpec::new(150, 6, 2, 0.05, 0.8, 7)
        .generate()
        .map_err(|e| e.to_string())?;
    let config = TrainConfig {
        p: 1.32,
        lambda: 0.01,
        eta: 0.5,
        epochs: 200,
        activation: ActivationKind::Identity,
        record_every: 1,
        seed: 99,
        ..TrainConfig::default()
    };
    let node = ds.train_mask[3];
    let a = twin_train(&ds, &config, node).map_err(|e| e.to_string())?;
    let b = twin_train(&ds, &config, node).map_err(|e| e.to_string())?;
    for (ra, rb) in [(&a.run_a, &b.run_a), (&a.run_b, &b.run_b)] {
        ensure!(ra.trajectory.index_sequence == rb.trajectory.index_sequence, "index sequences differ");
        for (sa, sb) in ra.trajectory.snapshots.iter().zip(&rb.trajectory.snapshots) {
            let same = sa.weights.iter().zip(&sb.weights).all(|(x, y)| x.to_bits() == y.to_bits());
            ensure!(same, "weights differ at epoch {}", sa.epoch);
        }
    }
    let (same_a, _) = twin_train_pair(&ds, &ds, &config).map_err(|e| e.to_string())?;
    let distances: Vec<f64> = same_a.metrics.rows.iter().filter_map(|r| r.param_distance).collect();
    ensure!(distances.len() == 200, "expected 200 recorded distances, got {}", distances.len());
    ensure!(distances.iter().all(|&d| d == 0.0), "identical data gave nonzero distance");
    let last = a.run_a.metrics.last().and_then(|m| m.param_distance).unwrap_or(f64::NAN);
    Ok(format!("bitwise reproducible; identical-data distance 0 over 200 epochs; perturbed final distance {last:.3e}"))
}

// ---------------------------------------------------------------------------

struct TrendData {
    dataset: Dataset,
    table: SweepTable,
    elapsed: Duration,
}

fn trend_config() -> ExperimentConfig {
    ExperimentConfig::from_file(&workspace_root().join("configs/trend.cfg")).expect("trend config")
}

fn run_trend() -> Result<TrendData, String> {
    let start = Instant::now();
    let config = trend_config();
    let (dataset, manifest) = config.load_data().map_err(|e| e.to_string())?;
    ensure!(manifest.n == 400 && manifest.train_size == 120, "unexpected dataset shape {manifest:?}");
    let table = sweep(&dataset, &config.train, &config.p_grid, &config.filter_grid, config.repeats)
        .map_err(|e| e.to_string())?;
    Ok(TrendData {
        dataset,
        table,
        elapsed: start.elapsed(),
    })
}

fn final_gap(t: &SweepTable, p: f64, f: FilterKind) -> (f64, f64) {
    t.final_cell(p, f).expect("cell").gen_gap
}

fn criterion_gap_trend(data: &TrendData) -> Outcome {
    let mut parts = Vec::new();
    for f in FilterKind::ALL {
        let gaps: Vec<(f64, f64)> = P_GRID.iter().map(|&p| final_gap(&data.table, p, f)).collect();
        let mut inversions = 0;
        for (k, w) in gaps.windows(2).enumerate() {
            let rise = w[1].0 - w[0].0;
            if rise > 0.0 {
                inversions += 1;
                let sd = w[0].1.max(w[1].1);
                ensure!(rise <= sd, "{f}: gap rises by {rise:.4} > 1 sd between p={} and p={}", P_GRID[k], P_GRID[k + 1]);
            }
        }
        ensure!(inversions <= 1, "{f}: {inversions} adjacent inversions");
        parts.push(format!("{} {:.4}->{:.4}", f.name(), gaps[0].0, gaps[gaps.len() - 1].0));
    }
    ensure!(data.elapsed < Duration::from_secs(600), "sweep took {:?}", data.elapsed);
    Ok(format!("{} (sweep {:.0?})", parts.join(", "), data.elapsed))
}

fn criterion_sparsity_trend(data: &TrendData) -> Outcome {
    let mut parts = Vec::new();
    for f in FilterKind::ALL {
        let lo = data.table.final_cell(P_GRID[0], f).unwrap().sparsity_pct.0;
        let hi = data.table.final_cell(2.0, f).unwrap().sparsity_pct.0;
        ensure!(lo - hi >= 5.0, "{f}: sparsity {lo:.2}% at p=1.001 vs {hi:.2}% at p=2");
        parts.push(format!("{} {lo:.1}% vs {hi:.1}%", f.name()));
    }
    Ok(parts.join(", "))
}

fn criterion_filter_trend(data: &TrendData) -> Outcome {
    let adj = &data.dataset.graph;
    let un = spectral_radius(&build_filter(adj, FilterKind::Unnormalized), 1e-10, 100_000, 0)
        .map_err(|e| e.to_string())?
        .lambda_max_abs;
    let aug = spectral_radius(&build_filter(adj, FilterKind::AugmentedNormalized), 1e-10, 100_000, 0)
        .map_err(|e| e.to_string())?
        .lambda_max_abs;
    ensure!(un > aug, "λ_G^max unnormalized {un} <= augmented {aug}");
    for &p in &P_GRID {
        let gu = final_gap(&data.table, p, FilterKind::Unnormalized).0;
        let ga = final_gap(&data.table, p, FilterKind::AugmentedNormalized).0;
        ensure!(gu >= ga, "p={p}: unnormalized gap {gu:.4} < augmented {ga:.4}");
    }
    Ok(format!("λ_G^max {un:.3} vs {aug:.3}; unnormalized gap >= augmented at every p"))
}

// ---------------------------------------------------------------------------

/// Full-batch proximal gradient descent on the regularized empirical risk,
/// returning the iterate and the norm of the objective's gradient there.
fn solve_erm(ds: &Dataset, loss: LossKind, act: ActivationKind, lambda: f64, p: f64) -> (Array1<f64>, f64) {
    let z = propagate(&build_filter(&ds.graph, FilterKind::AugmentedNormalized), ds.features.view()).unwrap();
    let m = ds.train_mask.len() as f64;
    let loss_grad = |w: &Array1<f64>| {
        let params = ModelParams::from_vector(w.clone());
        let mut g = Array1::<f64>::zeros(w.len());
        for &i in &ds.train_mask {
            let y = ds.target(i, Mode::Theory).unwrap();
            g += &grad_sample(z.row(i), &params, y, loss, act).unwrap();
        }
        g / m
    };
    let full_grad = |w: &Array1<f64>| {
        let mut g = loss_grad(w);
        for (gj, &wj) in g.iter_mut().zip(w) {
            *gj += lambda * p * wj.signum() * wj.abs().powf(p - 1.0);
        }
        g
    };
    let zmax = z.rows().into_iter().map(|r| r.dot(&r)).fold(0.0, f64::max);
    let step = 1.0 / (2.0 * zmax + 1e-12);
    let mut w = Array1::<f64>::zeros(ds.d());
    let mut grad_norm = f64::INFINITY;
    for _ in 0..200_000 {
        let v = &w - &(loss_grad(&w) * step);
        w = prox_lp(v.view(), step * lambda, p, 1e-15).unwrap();
        let g = full_grad(&w);
        grad_norm = g.dot(&g).sqrt();
        if grad_norm < 1e-6 {
            break;
        }
    }
    (w, grad_norm)
}

fn criterion_minimizer_radius() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut max_ratio: f64 = 0.0;
    for k in 0..20u64 {
        let mut spec = SyntheticSpec::new(30, 4, 2, 0.15, 0.8, 500 + k);
        spec.signal = 1.5;
        spec.informative = 4;
        let ds = spec.generate().map_err(|e| e.to_string())?;
        let (loss, act) = if k % 2 == 0 {
            (LossKind::Logistic, ActivationKind::Identity)
        } else {
            (LossKind::Square, ActivationKind::Tanh)
        };
        let p = P_GRID[1 + (k as usize % (P_GRID.len() - 1))];
        let lambda = 10f64.powf(rng.random_range(-2.0..0.0));
        let (w, grad_norm) = solve_erm(&ds, loss, act, lambda, p);
        ensure!(grad_norm < 1e-6, "problem {k}: gradient norm {grad_norm:.2e} after the iteration budget");
        let b = loss_bound(loss, act, &ds).map_err(|e| e.to_string())?;
        let radius = minimizer_radius(b, lambda, p);
        let norm = w.dot(&w).sqrt();
        ensure!(norm <= radius, "problem {k}: |w| = {norm} > {radius}");
        max_ratio = max_ratio.max(norm / radius);
    }
    Ok(format!("20 problems, max |ŵ|/radius = {max_ratio:.4}"))
}

// ---------------------------------------------------------------------------

fn cora_dir() -> Option<PathBuf> {
    let candidates = [
        std::env::var_os("LPGCN_CORA_DIR").map(PathBuf::from),
        Some(workspace_root().join("data/cora")),
    ];
    candidates.into_iter().flatten().find(|d| d.join("edges.txt").exists())
}

/// `Ok(None)` means skipped.
fn criterion_cora() -> Result<Option<String>, String> {
    let Some(dir) = cora_dir() else {
        return Ok(None);
    };
    let (_, m) = load_dataset(&dir, false).map_err(|e| e.to_string())?;
    ensure!(m.n == 2708, "n = {}", m.n);
    ensure!(m.edges == 5429, "edges = {}", m.edges);
    ensure!(m.d == 1433, "d = {}", m.d);
    ensure!(m.classes == 7, "classes = {}", m.classes);
    Ok(Some(format!("{}: {m:?}", dir.display())))
}

// ---------------------------------------------------------------------------

fn guarded<F: FnOnce() -> Outcome>(f: F) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn main() {
    // `cargo test -- --list` and similar harness probes.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut failures = 0;
    let mut report = |id: usize, name: &str, outcome: Outcome| {
        match outcome {
            Ok(detail) => println!("criterion {id:>2} {name}: PASS ({detail})"),
            Err(why) => {
                failures += 1;
                println!("criterion {id:>2} {name}: FAIL ({why})");
            }
        }
    };

    report(1, "prox correctness", guarded(criterion_prox));
    report(2, "iterate boundedness", guarded(criterion_iterate_bound));
    report(3, "gradient check", guarded(criterion_gradient));
    report(4, "spectral suite", guarded(criterion_spectral));
    report(5, "strong convexity", guarded(criterion_strong_convexity));
    report(6, "bound monotonicity", guarded(criterion_monotonicity));
    report(7, "twin determinism", guarded(criterion_twin_determinism));

    let trend = panic::catch_unwind(run_trend).unwrap_or_else(|_| Err("trend sweep panicked".into()));
    match &trend {
        Ok(data) => {
            report(8, "gap trend in p", guarded(|| criterion_gap_trend(data)));
            report(9, "sparsity trend", guarded(|| criterion_sparsity_trend(data)));
            report(10, "filter trend", guarded(|| criterion_filter_trend(data)));
        }
        Err(e) => {
            for (id, name) in [(8, "gap trend in p"), (9, "sparsity trend"), (10, "filter trend")] {
                report(id, name, Err(e.clone()));
            }
        }
    }

    report(11, "minimizer radius", guarded(criterion_minimizer_radius));
    match panic::catch_unwind(criterion_cora) {
        Ok(Ok(Some(detail))) => report(12, "cora manifest", Ok(detail)),
        Ok(Ok(None)) => println!("criterion 12 cora manifest: SKIP (dataset not present)"),
        Ok(Err(e)) => report(12, "cora manifest", Err(e)),
        Err(_) => report(12, "cora manifest", Err("panicked".into())),
    }

    if failures > 0 {
        println!("acceptance: {failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
