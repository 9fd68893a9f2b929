//! Empirical stability experiments: perturbed datasets, twin training runs
//! that replay one index sequence on `D` and `D^i`, and sweeps over `p` and
//! the graph filter.

use std::io::{Read, Write};

use ndarray::{ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::FilterKind;
use crate::model::{loss_eval, predict, ActivationKind, Dataset, LossKind, Mode, ModelParams, Target};
use crate::sgd::{initial_params, sample_indices, train_on_sequence, Prepared, TrainConfig, Trajectory};

/// Default magnitude at or below which a weight is counted as zero.
pub const DEFAULT_SPARSITY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_error: f64,
    pub test_error: f64,
    pub gen_gap: f64,
    /// Only set for twin runs.
    pub param_distance: Option<f64>,
    pub sparsity_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    pub rows: Vec<EpochMetrics>,
}

impl RunMetrics {
    pub fn last(&self) -> Option<&EpochMetrics> {
        self.rows.last()
    }
}

/// `√(‖w - w'‖² / (‖w‖² + ‖w'‖²))`, defined as 0 when both are zero.
pub fn param_distance(w: ArrayView1<f64>, w2: ArrayView1<f64>) -> Result<f64> {
    if w.len() != w2.len() {
        return Err(Error::input(format!(
            "weight vectors differ in length ({} vs {})",
            w.len(),
            w2.len()
        )));
    }
    let diff: f64 = w.iter().zip(w2).map(|(a, b)| (a - b) * (a - b)).sum();
    let denom = w.dot(&w) + w2.dot(&w2);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((diff / denom).sqrt())
}

/// Percentage of entries with `|w_j| ≤ eps`.
pub fn sparsity_ratio(w: ArrayView1<f64>, eps: f64) -> f64 {
    if w.is_empty() {
        return 100.0;
    }
    let zeros = w.iter().filter(|v| v.abs() <= eps).count();
    100.0 * zeros as f64 / w.len() as f64
}

/// Mean loss over `mask` in theory mode, misclassification rate in
/// experiment mode.
pub fn error_rate(
    params: &ModelParams,
    dataset: &Dataset,
    z: ArrayView2<f64>,
    mask: &[usize],
    loss: LossKind,
    act: ActivationKind,
) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::input("cannot evaluate an empty mask"));
    }
    let mode = loss.mode();
    let mut total = 0.0;
    for &i in mask {
        let f = predict(z.row(i), params, act)?;
        let target = dataset.target(i, mode)?;
        total += match (mode, target) {
            (Mode::Experiment, Target::Class(k)) => f64::from(u8::from(f.class() != k)),
            _ => loss_eval(loss, target, &f)?,
        };
    }
    Ok(total / mask.len() as f64)
}

/// `|train error - test error|`.
pub fn generalization_gap(
    params: &ModelParams,
    dataset: &Dataset,
    z: ArrayView2<f64>,
    loss: LossKind,
    act: ActivationKind,
) -> Result<f64> {
    let train = error_rate(params, dataset, z, &dataset.train_mask, loss, act)?;
    let test = error_rate(params, dataset, z, &dataset.test_mask, loss, act)?;
    Ok((train - test).abs())
}

/// What was written over the perturbed node.
#[derive(Debug, Clone, PartialEq)]
pub struct Replacement {
    pub source_node: usize,
    pub features: Vec<f64>,
    pub label: i64,
}

/// Copies `dataset` and overwrites node `i`'s feature row and label with
/// those of another training node chosen uniformly at random. Edges are left
/// untouched.
pub fn perturb_dataset(dataset: &Dataset, i: usize, seed: u64) -> Result<(Dataset, Replacement)> {
    let m = dataset.train_mask.len();
    let Some(pos) = dataset.train_mask.iter().position(|&t| t == i) else {
        return Err(Error::input(format!("node {i} is not in the training mask")));
    };
    if m < 2 {
        return Err(Error::input(
            "training mask has a single node; no distinct replacement exists",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = rng.random_range(0..m - 1);
    if k >= pos {
        k += 1;
    }
    let source = dataset.train_mask[k];
    let mut out = dataset.clone();
    let row = dataset.features.row(source).to_owned();
    out.features.row_mut(i).assign(&row);
    out.labels[i] = dataset.labels[source];
    Ok((
        out,
        Replacement {
            source_node: source,
            features: row.to_vec(),
            label: dataset.labels[source],
        },
    ))
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub params: ModelParams,
    pub trajectory: Trajectory,
    pub metrics: RunMetrics,
}

/// A pair of runs on `D` and `D^i` sharing initialization and index sequence.
#[derive(Debug, Clone)]
pub struct TwinRun {
    pub run_a: RunRecord,
    pub run_b: RunRecord,
    pub perturbed_index: usize,
    pub replacement: Replacement,
}

/// Trains on `D` and on `perturbed`, replaying one index sequence and one
/// initialization, and fills `param_distance` at every recorded epoch.
///
/// Both runs project onto the same ball: the radius uses the larger of the
/// two loss bounds.
pub fn twin_train_pair(
    dataset: &Dataset,
    perturbed: &Dataset,
    config: &TrainConfig,
) -> Result<(RunRecord, RunRecord)> {
    let mut prep_a = Prepared::new(dataset, config)?;
    let mut prep_b = Prepared::new(perturbed, config)?;
    let radius = prep_a.radius.max(prep_b.radius);
    prep_a.radius = radius;
    prep_b.radius = radius;

    let indices = sample_indices(dataset, config);
    let init = initial_params(dataset, config);
    let (a, b) = rayon::join(
        || train_on_sequence(dataset, &prep_a, config, init.clone(), &indices),
        || train_on_sequence(perturbed, &prep_b, config, init.clone(), &indices),
    );
    let (pa, ta, mut ma) = a?;
    let (pb, tb, mut mb) = b?;

    for (sa, sb) in ta.snapshots.iter().zip(&tb.snapshots) {
        debug_assert_eq!(sa.step, sb.step);
        if sa.epoch == 0 {
            continue;
        }
        let dist = param_distance(sa.weights.view(), sb.weights.view())?;
        for rows in [&mut ma.rows, &mut mb.rows] {
            if let Some(row) = rows.get_mut(sa.epoch - 1) {
                row.param_distance = Some(dist);
            }
        }
    }
    Ok((
        RunRecord {
            params: pa,
            trajectory: ta,
            metrics: ma,
        },
        RunRecord {
            params: pb,
            trajectory: tb,
            metrics: mb,
        },
    ))
}

/// Perturbs training node `i` (replacement drawn with `config.seed`) and runs
/// the twin pair.
pub fn twin_train(dataset: &Dataset, config: &TrainConfig, i: usize) -> Result<TwinRun> {
    let (perturbed, replacement) = perturb_dataset(dataset, i, config.seed)?;
    let (run_a, run_b) = twin_train_pair(dataset, &perturbed, config)?;
    Ok(TwinRun {
        run_a,
        run_b,
        perturbed_index: i,
        replacement,
    })
}

/// One row of the metrics table (CSV schema of `metrics.csv`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: usize,
    pub p: f64,
    pub filter: FilterKind,
    pub epoch: usize,
    pub train_error: f64,
    pub test_error: f64,
    pub gen_gap: f64,
    pub param_distance: Option<f64>,
    pub sparsity_pct: f64,
    pub seed: u64,
}

pub const METRICS_HEADER: [&str; 10] = [
    "run_id",
    "p",
    "filter",
    "epoch",
    "train_error",
    "test_error",
    "gen_gap",
    "param_distance",
    "sparsity_pct",
    "seed",
];

/// Outcome of one sweep cell; run A's metrics carry the twin distance.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub run_id: usize,
    pub p: f64,
    pub filter: FilterKind,
    pub repeat: usize,
    pub seed: u64,
    pub perturbed_index: usize,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, Default)]
pub struct SweepTable {
    pub runs: Vec<SweepRun>,
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-(p, filter, epoch) aggregate over repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub p: f64,
    pub filter: FilterKind,
    pub epoch: usize,
    pub gen_gap: (f64, f64),
    pub param_distance: (f64, f64),
    pub sparsity_pct: (f64, f64),
    pub repeats: usize,
}

impl SweepTable {
    pub fn rows(&self) -> Vec<MetricsRow> {
        self.runs
            .iter()
            .flat_map(|r| {
                r.metrics.rows.iter().map(move |m| MetricsRow {
                    run_id: r.run_id,
                    p: r.p,
                    filter: r.filter,
                    epoch: m.epoch,
                    train_error: m.train_error,
                    test_error: m.test_error,
                    gen_gap: m.gen_gap,
                    param_distance: m.param_distance,
                    sparsity_pct: m.sparsity_pct,
                    seed: r.seed,
                })
            })
            .collect()
    }

    pub fn summarize(&self) -> Vec<CellSummary> {
        summarize_rows(&self.rows())
    }

    /// Summary of the last epoch of the given cell, if present.
    pub fn final_cell(&self, p: f64, filter: FilterKind) -> Option<CellSummary> {
        self.summarize()
            .into_iter()
            .filter(|c| c.p == p && c.filter == filter)
            .max_by_key(|c| c.epoch)
    }
}

/// Groups rows by (filter, p, epoch) in first-appearance order of
/// (filter, p) and ascending epoch.
pub fn summarize_rows(rows: &[MetricsRow]) -> Vec<CellSummary> {
    let mut keys: Vec<(FilterKind, u64)> = Vec::new();
    for r in rows {
        let k = (r.filter, r.p.to_bits());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = Vec::new();
    for (filter, pbits) in keys {
        let cell: Vec<&MetricsRow> = rows
            .iter()
            .filter(|r| r.filter == filter && r.p.to_bits() == pbits)
            .collect();
        let mut epochs: Vec<usize> = cell.iter().map(|r| r.epoch).collect();
        epochs.sort_unstable();
        epochs.dedup();
        for epoch in epochs {
            let at: Vec<&&MetricsRow> = cell.iter().filter(|r| r.epoch == epoch).collect();
            let col = |f: fn(&MetricsRow) -> f64| -> (f64, f64) {
                let xs: Vec<f64> = at.iter().map(|r| f(r)).filter(|v| !v.is_nan()).collect();
                mean_std(&xs)
            };
            out.push(CellSummary {
                p: f64::from_bits(pbits),
                filter,
                epoch,
                gen_gap: col(|r| r.gen_gap),
                param_distance: col(|r| r.param_distance.unwrap_or(f64::NAN)),
                sparsity_pct: col(|r| r.sparsity_pct),
                repeats: at.len(),
            });
        }
    }
    out
}

/// Training node perturbed by a sweep repeat with the given seed.
pub fn pick_perturbed_node(dataset: &Dataset, seed: u64) -> Result<usize> {
    if dataset.train_mask.is_empty() {
        return Err(Error::input("training mask is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(dataset.train_mask[rng.random_range(0..dataset.train_mask.len())])
}

/// Runs one twin pair per `(p, filter, repeat)`. Repeat `r` uses seed
/// `base.seed + r`, which also picks the perturbed node; cells run in
/// parallel and are returned in grid order.
pub fn sweep(
    dataset: &Dataset,
    base: &TrainConfig,
    p_grid: &[f64],
    filter_grid: &[FilterKind],
    repeats: usize,
) -> Result<SweepTable> {
    if p_grid.is_empty() || filter_grid.is_empty() || repeats == 0 {
        return Err(Error::input("sweep grids and repeat count must be non-empty"));
    }
    dataset.validate()?;
    let mut cells = Vec::new();
    for &filter in filter_grid {
        for &p in p_grid {
            for r in 0..repeats {
                cells.push((filter, p, r));
            }
        }
    }
    let runs = cells
        .into_par_iter()
        .enumerate()
        .map(|(run_id, (filter, p, repeat))| {
            let seed = base.seed.wrapping_add(repeat as u64);
            let config = TrainConfig {
                p,
                filter_kind: filter,
                seed,
                ..base.clone()
            };
            let i = pick_perturbed_node(dataset, seed)?;
            let twin = twin_train(dataset, &config, i)?;
            Ok(SweepRun {
                run_id,
                p,
                filter,
                repeat,
                seed,
                perturbed_index: i,
                metrics: twin.run_a.metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { runs })
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(METRICS_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("metrics", e))
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != METRICS_HEADER {
        return Err(Error::input(format!(
            "metrics header must be '{}'",
            METRICS_HEADER.join(",")
        )));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(k, r)| r.map_err(|e| Error::input(format!("metrics row {}: {e}", k + 2))))
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::input(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_adjacency;
    use crate::sgd::Init;
    use ndarray::{array, Array2};

    fn toy() -> Dataset {
        Dataset {
            features: array![[1.0, 0.5], [-0.5, 1.0], [0.2, 0.2], [1.0, -1.0]],
            labels: vec![1, 0, 1, 0],
            num_classes: 2,
            train_mask: vec![0, 1],
            test_mask: vec![2, 3],
            graph: build_adjacency(&[(0, 1), (1, 2), (2, 3)], 4).unwrap(),
        }
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            p: 1.5,
            lambda: 0.01,
            eta: 0.5,
            epochs: 4,
            loss: LossKind::Logistic,
            activation: ActivationKind::Sigmoid,
            filter_kind: FilterKind::AugmentedNormalized,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn distance_examples() {
        let w = array![1.0, -2.0, 0.5];
        assert_eq!(param_distance(w.view(), w.view()).unwrap(), 0.0);
        let z = Array2::<f64>::zeros((1, 3)).row(0).to_owned();
        assert_eq!(param_distance(w.view(), z.view()).unwrap(), 1.0);
        let neg = -&w;
        assert!((param_distance(w.view(), neg.view()).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(param_distance(z.view(), z.view()).unwrap(), 0.0);
        assert!(param_distance(w.view(), array![1.0].view()).is_err());
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_ratio(array![0.0, 0.0, 1.0, 2.0].view(), 1e-6), 50.0);
        assert_eq!(sparsity_ratio(array![0.0, 0.0].view(), 1e-6), 100.0);
        assert_eq!(sparsity_ratio(array![0.1, -3.0].view(), 1e-6), 0.0);
    }

    #[test]
    fn perturbation_examples() {
        let ds = toy();
        let (p, rep) = perturb_dataset(&ds, 0, 9).unwrap();
        assert_eq!(rep.source_node, 1);
        assert_eq!(p.features.row(0), ds.features.row(1));
        assert_eq!(p.labels[0], ds.labels[1]);
        for i in 1..4 {
            assert_eq!(p.features.row(i), ds.features.row(i));
            assert_eq!(p.labels[i], ds.labels[i]);
        }
        assert_eq!(p.graph, ds.graph);
        assert!(perturb_dataset(&ds, 2, 0).is_err());
        let mut single = ds.clone();
        single.train_mask = vec![0];
        assert!(perturb_dataset(&single, 0, 0).is_err());
    }

    #[test]
    fn twin_with_identical_data_has_zero_distance() {
        let ds = toy();
        let (a, b) = twin_train_pair(&ds, &ds, &cfg()).unwrap();
        assert_eq!(a.trajectory.index_sequence, b.trajectory.index_sequence);
        for row in &a.metrics.rows {
            assert_eq!(row.param_distance, Some(0.0));
        }
        // Coinciding replacement values give the same dataset.
        let mut dup = ds.clone();
        dup.features.row_mut(1).assign(&ds.features.row(0).to_owned());
        dup.labels[1] = ds.labels[0];
        let twin = twin_train(&dup, &cfg(), 0).unwrap();
        assert!(twin.run_a.metrics.rows.iter().all(|r| r.param_distance == Some(0.0)));
    }

    #[test]
    fn twin_with_zero_step_has_zero_distance() {
        let c = TrainConfig {
            eta: 0.0,
            lambda_t: Some(0.05),
            init: Init::Gaussian { scale: 1.0 },
            ..cfg()
        };
        let twin = twin_train(&toy(), &c, 0).unwrap();
        for row in &twin.run_a.metrics.rows {
            assert_eq!(row.param_distance, Some(0.0));
        }
        assert!(twin.run_a.params.l2_norm() > 0.0);
    }

    #[test]
    fn twin_runs_share_sequence() {
        let twin = twin_train(&toy(), &cfg(), 1).unwrap();
        assert_eq!(
            twin.run_a.trajectory.index_sequence,
            twin.run_b.trajectory.index_sequence
        );
        assert!(twin.run_a.metrics.rows.iter().any(|r| r.param_distance.unwrap() > 0.0));
    }

    #[test]
    fn gap_examples() {
        let ds = toy();
        let w = ModelParams::zeros(2, Mode::Theory, 2);
        // Equal label mix on both masks with constant predictions.
        let gap = generalization_gap(&w, &ds, ds.features.view(), LossKind::Logistic, ActivationKind::Identity)
            .unwrap();
        assert_eq!(gap, 0.0);

        // Experiment mode: perfect on train, wrong on test.
        let ds = Dataset {
            features: array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
            labels: vec![0, 1, 1, 0],
            num_classes: 2,
            train_mask: vec![0, 1],
            test_mask: vec![2, 3],
            graph: build_adjacency(&[], 4).unwrap(),
        };
        let w = ModelParams::from_matrix(array![[1.0, 0.0], [0.0, 1.0]]);
        let gap = generalization_gap(
            &w,
            &ds,
            ds.features.view(),
            LossKind::SoftmaxCrossEntropy,
            ActivationKind::Identity,
        )
        .unwrap();
        assert_eq!(gap, 1.0);

        let mut empty = ds.clone();
        empty.test_mask.clear();
        assert!(generalization_gap(
            &w,
            &empty,
            ds.features.view(),
            LossKind::SoftmaxCrossEntropy,
            ActivationKind::Identity
        )
        .is_err());
    }

    #[test]
    fn sweep_shapes_and_determinism() {
        let ds = toy();
        let t = sweep(&ds, &cfg(), &[1.5], &[FilterKind::Normalized], 1).unwrap();
        assert_eq!(t.runs.len(), 1);
        assert_eq!(t.summarize().len(), 4);

        let a = sweep(&ds, &cfg(), &[1.2, 2.0], &FilterKind::ALL, 3).unwrap();
        let b = sweep(&ds, &cfg(), &[1.2, 2.0], &FilterKind::ALL, 3).unwrap();
        assert_eq!(a.rows(), b.rows());
        let last = a.final_cell(2.0, FilterKind::RandomWalk).unwrap();
        assert_eq!(last.repeats, 3);
        assert!(last.gen_gap.1 >= 0.0);
        assert!(sweep(&ds, &cfg(), &[], &FilterKind::ALL, 1).is_err());
    }

    #[test]
    fn metrics_csv_round_trip() {
        let t = sweep(&toy(), &cfg(), &[1.5], &[FilterKind::RandomWalk], 2).unwrap();
        let rows = t.rows();
        let mut buf = Vec::new();
        write_metrics_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("run_id,p,filter,epoch,train_error,test_error,gen_gap,param_distance,sparsity_pct,seed\n"));
        assert_eq!(read_metrics_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn mean_std_sample() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }
}
