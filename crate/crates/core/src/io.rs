//! Dataset files, synthetic graphs, experiment configuration and the output
//! files written by an experiment run.
//!
//! A dataset directory holds five plain files:
//!
//! | file            | content                                            |
//! |-----------------|----------------------------------------------------|
//! | `edges.txt`     | one undirected edge per line, two 0-based node ids |
//! | `features.csv`  | `n` rows of `d` comma-separated reals, no header   |
//! | `labels.txt`    | one integer per line                               |
//! | `train_mask.txt`| one node index per line                            |
//! | `test_mask.txt` | one node index per line                            |

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds::{c_p_lambda, generalization_bound, minimizer_radius, stability_beta, BoundInputs};
use crate::error::{Error, Result};
use crate::graph::{
    build_adjacency, build_filter, compute_ge, read_edge_list, spectral_radius, FilterKind,
    DEFAULT_SPECTRAL_MAX_ITER, DEFAULT_SPECTRAL_TOL,
};
use crate::lab::{mean_std, read_metrics_csv, summarize_rows, sweep, write_metrics_csv, SweepTable};
use crate::model::{loss_bound, smoothness_constants, ActivationKind, Dataset, LossKind, Mode};
use crate::sgd::{Init, Sampling, TrainConfig};

pub const EDGES_FILE: &str = "edges.txt";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.txt";
pub const TRAIN_MASK_FILE: &str = "train_mask.txt";
pub const TEST_MASK_FILE: &str = "test_mask.txt";

/// Summary counts of a loaded dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    /// Edge records listed in `edges.txt`, duplicates included.
    pub edges: usize,
    /// Distinct undirected edges after deduplication.
    pub unique_edges: usize,
    pub train_size: usize,
    pub test_size: usize,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn read_features(path: &Path) -> Result<Array2<f64>> {
    let text = read_text(path)?;
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (line, content) in data_lines(&text) {
        let mut count = 0;
        for field in content.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(path, line, format!("invalid number '{}'", field.trim()))
            })?;
            data.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("expected {w} columns, found {count}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let d = width.unwrap_or(0);
    Array2::from_shape_vec((rows, d), data)
        .map_err(|e| Error::parse(path, 0, format!("cannot shape features: {e}")))
}

fn read_integers<T: std::str::FromStr>(path: &Path) -> Result<Vec<(usize, T)>> {
    let text = read_text(path)?;
    data_lines(&text)
        .map(|(line, s)| {
            s.parse::<T>()
                .map(|v| (line, v))
                .map_err(|_| Error::parse(path, line, format!("invalid integer '{s}'")))
        })
        .collect()
}

fn read_mask(path: &Path, n: usize) -> Result<Vec<usize>> {
    read_integers::<usize>(path)?
        .into_iter()
        .map(|(line, i)| {
            if i < n {
                Ok(i)
            } else {
                Err(Error::parse(path, line, format!("node index {i} outside [0, {n})")))
            }
        })
        .collect()
}

fn count_classes(labels: &[i64]) -> usize {
    if labels.iter().all(|&l| l >= 0) {
        labels.iter().max().map_or(0, |&m| m as usize + 1)
    } else {
        labels.iter().collect::<BTreeSet<_>>().len()
    }
}

/// Loads a dataset directory. With `normalize`, every nonzero feature row is
/// scaled to unit Euclidean norm.
pub fn load_dataset(dir: &Path, normalize: bool) -> Result<(Dataset, DatasetManifest)> {
    let features = read_features(&dir.join(FEATURES_FILE))?;
    let n = features.nrows();
    let labels_path = dir.join(LABELS_FILE);
    let labels: Vec<i64> = read_integers::<i64>(&labels_path)?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    if labels.len() != n {
        return Err(Error::parse(
            &labels_path,
            labels.len(),
            format!("{} labels for {n} feature rows", labels.len()),
        ));
    }
    let edges_path = dir.join(EDGES_FILE);
    let edges = read_edge_list(&edges_path)?;
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= n || b >= n) {
        return Err(Error::parse(
            &edges_path,
            0,
            format!("edge ({a}, {b}) references a node outside [0, {n})"),
        ));
    }
    let graph = build_adjacency(&edges, n.max(1))?;
    let train_mask = read_mask(&dir.join(TRAIN_MASK_FILE), n)?;
    let test_mask = read_mask(&dir.join(TEST_MASK_FILE), n)?;
    let num_classes = count_classes(&labels);
    let mut dataset = Dataset {
        features,
        labels,
        num_classes,
        train_mask,
        test_mask,
        graph,
    };
    dataset.validate()?;
    if normalize {
        dataset.normalize_rows();
    }
    let manifest = DatasetManifest {
        n,
        d: dataset.d(),
        classes: num_classes,
        edges: edges.len(),
        unique_edges: dataset.graph.nnz() / 2,
        train_size: dataset.train_mask.len(),
        test_size: dataset.test_mask.len(),
    };
    Ok((dataset, manifest))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `dataset` in the directory format read by [`load_dataset`].
/// Each undirected edge is written once.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut edges = String::new();
    for i in 0..dataset.graph.n_rows() {
        for &j in dataset.graph.row(i).0 {
            if i < j {
                writeln!(edges, "{i} {j}").unwrap();
            }
        }
    }
    write_file(&dir.join(EDGES_FILE), &edges)?;

    let mut feats = String::new();
    for row in dataset.features.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        feats.push_str(&cells.join(","));
        feats.push('\n');
    }
    write_file(&dir.join(FEATURES_FILE), &feats)?;

    let join = |xs: &mut dyn Iterator<Item = String>| {
        xs.fold(String::new(), |mut acc, s| {
            acc.push_str(&s);
            acc.push('\n');
            acc
        })
    };
    write_file(
        &dir.join(LABELS_FILE),
        &join(&mut dataset.labels.iter().map(|l| l.to_string())),
    )?;
    write_file(
        &dir.join(TRAIN_MASK_FILE),
        &join(&mut dataset.train_mask.iter().map(|l| l.to_string())),
    )?;
    write_file(
        &dir.join(TEST_MASK_FILE),
        &join(&mut dataset.test_mask.iter().map(|l| l.to_string())),
    )
}

/// Parameters of the stochastic-block-model generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    /// Edge probability between two nodes of the same class.
    pub edge_prob: f64,
    /// Fraction of `edge_prob` removed for cross-class pairs: cross-class
    /// probability is `edge_prob * (1 - homophily)`.
    pub homophily: f64,
    pub seed: u64,
    /// Share of nodes placed in the training mask; the rest are test nodes.
    pub train_fraction: f64,
    /// Number of leading feature dimensions that carry class signal.
    pub informative: usize,
    /// Scale of the class means on informative dimensions.
    pub signal: f64,
    /// Standard deviation of the per-node Gaussian noise.
    pub noise: f64,
    /// Noise standard deviation on the non-informative dimensions; `None`
    /// uses `noise`.
    pub nuisance_noise: Option<f64>,
}

impl SyntheticSpec {
    pub fn new(n: usize, d: usize, classes: usize, edge_prob: f64, homophily: f64, seed: u64) -> Self {
        SyntheticSpec {
            n,
            d,
            classes,
            edge_prob,
            homophily,
            seed,
            train_fraction: 0.3,
            informative: (d / 4).max(1).min(d),
            signal: 1.0,
            noise: 1.0,
            nuisance_noise: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::input("synthetic graph needs at least one node"));
        }
        if self.d == 0 || self.classes == 0 {
            return Err(Error::input("synthetic data needs d >= 1 and classes >= 1"));
        }
        for (name, v) in [
            ("edge_prob", self.edge_prob),
            ("homophily", self.homophily),
            ("train_fraction", self.train_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::input(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        if self.informative > self.d {
            return Err(Error::input("informative dimensions exceed d"));
        }
        if !(self.noise >= 0.0 && self.nuisance_noise.unwrap_or(0.0) >= 0.0) || !self.signal.is_finite() {
            return Err(Error::input("noise must be non-negative and signal finite"));
        }
        Ok(())
    }

    /// Generates the dataset. Deterministic given `seed`.
    ///
    /// Labels are balanced and shuffled. Class means are Gaussian on the
    /// informative dimensions and zero elsewhere; each node adds isotropic
    /// Gaussian noise. At least one node goes to the training mask.
    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (n, d, c) = (self.n, self.d, self.classes);

        let mut labels: Vec<i64> = (0..n).map(|i| (i % c) as i64).collect();
        labels.shuffle(&mut rng);

        let mut means = Array2::<f64>::zeros((c, d));
        for k in 0..c {
            for j in 0..self.informative {
                means[[k, j]] = self.signal * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let nuisance = self.nuisance_noise.unwrap_or(self.noise);
        let mut features = Array2::<f64>::zeros((n, d));
        for i in 0..n {
            let k = labels[i] as usize;
            for j in 0..d {
                let sd = if j < self.informative { self.noise } else { nuisance };
                features[[i, j]] = means[[k, j]] + sd * rng.sample::<f64, _>(StandardNormal);
            }
        }

        let cross = self.edge_prob * (1.0 - self.homophily);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let prob = if labels[i] == labels[j] { self.edge_prob } else { cross };
                if prob > 0.0 && rng.random::<f64>() < prob {
                    edges.push((i, j));
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let m = ((self.train_fraction * n as f64).round() as usize).clamp(1, n);
        let mut train_mask = order[..m].to_vec();
        let mut test_mask = order[m..].to_vec();
        train_mask.sort_unstable();
        test_mask.sort_unstable();

        Ok(Dataset {
            features,
            labels,
            num_classes: c,
            train_mask,
            test_mask,
            graph: build_adjacency(&edges, n)?,
        })
    }
}

/// Stochastic block model with Gaussian class-mean features, using the
/// default split and feature settings of [`SyntheticSpec::new`].
pub fn make_synthetic(
    n: usize,
    d: usize,
    classes: usize,
    edge_prob: f64,
    homophily: f64,
    seed: u64,
) -> Result<Dataset> {
    SyntheticSpec::new(n, d, classes, edge_prob, homophily, seed).generate()
}

/// Where an experiment gets its data.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Directory(PathBuf),
    Synthetic(SyntheticSpec),
}

/// Parsed experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub output_dir: PathBuf,
    pub train: TrainConfig,
    pub p_grid: Vec<f64>,
    pub filter_grid: Vec<FilterKind>,
    pub repeats: usize,
    pub mode: Mode,
    pub normalize_features: bool,
    /// Confidence parameter of the generalization bound.
    pub delta: f64,
}

/// Keys accepted in an experiment config file.
pub const CONFIG_KEYS: &[&str] = &[
    "dataset_dir",
    "output_dir",
    "mode",
    "p",
    "lambda",
    "eta",
    "lambda_t",
    "epochs",
    "loss",
    "activation",
    "filter",
    "seed",
    "prox_tol",
    "record_every",
    "sampling",
    "init",
    "init_scale",
    "eps_sparsity",
    "p_grid",
    "filter_grid",
    "repeats",
    "normalize_features",
    "delta",
    "synth_n",
    "synth_d",
    "synth_classes",
    "synth_edge_prob",
    "synth_homophily",
    "synth_seed",
    "synth_train_fraction",
    "synth_informative",
    "synth_signal",
    "synth_noise",
    "synth_nuisance_noise",
];

fn parse_value<T: std::str::FromStr>(file: &Path, line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::parse(file, line, format!("invalid value '{v}' for {key}")))
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p <= 2.0 {
        Ok(())
    } else {
        Err(Error::input(format!("p must lie in (1,2], got {p}")))
    }
}

impl ExperimentConfig {
    /// Parses flat `key = value` text. Blank lines and `#` comments are
    /// ignored; unknown or repeated keys are errors. Relative paths resolve
    /// against `base_dir`.
    pub fn parse(text: &str, file: &Path, base_dir: &Path) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (line, content) in data_lines(text) {
            let Some((k, v)) = content.split_once('=') else {
                return Err(Error::parse(file, line, "expected key = value"));
            };
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(Error::parse(file, line, format!("unknown key '{k}'")));
            }
            if entries.iter().any(|(_, e, _)| *e == k) {
                return Err(Error::parse(file, line, format!("key '{k}' given twice")));
            }
            entries.push((line, k, v));
        }
        let get = |key: &str| entries.iter().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.as_str()));
        macro_rules! value {
            ($key:expr, $ty:ty) => {
                match get($key) {
                    Some((line, v)) => Some(parse_value::<$ty>(file, line, $key, v)?),
                    None => None,
                }
            };
        }

        let mode = value!("mode", Mode).unwrap_or(Mode::Theory);
        let defaults = TrainConfig::default();
        let (default_loss, default_act) = match mode {
            Mode::Theory => (LossKind::Logistic, ActivationKind::Sigmoid),
            Mode::Experiment => (LossKind::SoftmaxCrossEntropy, ActivationKind::Identity),
        };
        let init = match get("init").map(|(_, v)| v) {
            None | Some("zeros") => Init::Zeros,
            Some("gaussian") => Init::Gaussian {
                scale: value!("init_scale", f64).unwrap_or(0.01),
            },
            Some(other) => {
                let line = get("init").unwrap().0;
                return Err(Error::parse(file, line, format!("unknown init '{other}'")));
            }
        };
        let sampling = match get("sampling").map(|(_, v)| v) {
            None | Some("with_replacement") => Sampling::WithReplacement,
            Some("shuffled") | Some("shuffled_epochs") => Sampling::ShuffledEpochs,
            Some(other) => {
                let line = get("sampling").unwrap().0;
                return Err(Error::parse(file, line, format!("unknown sampling '{other}'")));
            }
        };
        let train = TrainConfig {
            p: value!("p", f64).unwrap_or(defaults.p),
            lambda: value!("lambda", f64).unwrap_or(defaults.lambda),
            eta: value!("eta", f64).unwrap_or(defaults.eta),
            lambda_t: value!("lambda_t", f64),
            epochs: value!("epochs", usize).unwrap_or(defaults.epochs),
            loss: value!("loss", LossKind).unwrap_or(default_loss),
            activation: value!("activation", ActivationKind).unwrap_or(default_act),
            filter_kind: value!("filter", FilterKind).unwrap_or(defaults.filter_kind),
            seed: value!("seed", u64).unwrap_or(defaults.seed),
            prox_tol: value!("prox_tol", f64).unwrap_or(defaults.prox_tol),
            record_every: value!("record_every", usize).unwrap_or(defaults.record_every),
            sampling,
            init,
            eps_sparsity: value!("eps_sparsity", f64).unwrap_or(defaults.eps_sparsity),
        };

        let p_grid = match get("p_grid") {
            Some((line, v)) => v
                .split(',')
                .map(|s| parse_value::<f64>(file, line, "p_grid", s.trim()))
                .collect::<Result<Vec<_>>>()?,
            None => vec![train.p],
        };
        let filter_grid = match get("filter_grid") {
            Some((line, v)) if v.trim() == "all" => {
                let _ = line;
                FilterKind::ALL.to_vec()
            }
            Some((line, v)) => v
                .split(',')
                .map(|s| parse_value::<FilterKind>(file, line, "filter_grid", s.trim()))
                .collect::<Result<Vec<_>>>()?,
            None => vec![train.filter_kind],
        };

        let data = match get("dataset_dir") {
            Some((_, dir)) => DataSource::Directory(base_dir.join(dir)),
            None => {
                let n = value!("synth_n", usize).ok_or_else(|| {
                    Error::input("config needs either dataset_dir or synth_n")
                })?;
                let d = value!("synth_d", usize).unwrap_or(16);
                let mut spec = SyntheticSpec::new(
                    n,
                    d,
                    value!("synth_classes", usize).unwrap_or(2),
                    value!("synth_edge_prob", f64).unwrap_or(0.05),
                    value!("synth_homophily", f64).unwrap_or(0.8),
                    value!("synth_seed", u64).unwrap_or(0),
                );
                if let Some(v) = value!("synth_train_fraction", f64) {
                    spec.train_fraction = v;
                }
                if let Some(v) = value!("synth_informative", usize) {
                    spec.informative = v;
                }
                if let Some(v) = value!("synth_signal", f64) {
                    spec.signal = v;
                }
                if let Some(v) = value!("synth_noise", f64) {
                    spec.noise = v;
                }
                spec.nuisance_noise = value!("synth_nuisance_noise", f64);
                DataSource::Synthetic(spec)
            }
        };

        let config = ExperimentConfig {
            data,
            output_dir: base_dir.join(get("output_dir").map_or("out", |(_, v)| v)),
            train,
            p_grid,
            filter_grid,
            repeats: value!("repeats", usize).unwrap_or(1),
            mode,
            normalize_features: value!("normalize_features", bool).unwrap_or(false),
            delta: value!("delta", f64).unwrap_or(0.05),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, path, base)
    }

    pub fn validate(&self) -> Result<()> {
        check_p(self.train.p)?;
        for &p in &self.p_grid {
            check_p(p)?;
        }
        self.train.validate()?;
        if self.train.loss.mode() != self.mode {
            return Err(Error::input(format!(
                "loss '{}' does not belong to {} mode",
                self.train.loss, self.mode
            )));
        }
        if self.p_grid.is_empty() || self.filter_grid.is_empty() || self.repeats == 0 {
            return Err(Error::input("grids and repeats must be non-empty"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::input("delta must lie in (0,1)"));
        }
        Ok(())
    }

    /// Loads or generates the dataset described by the config.
    pub fn load_data(&self) -> Result<(Dataset, DatasetManifest)> {
        match &self.data {
            DataSource::Directory(dir) => load_dataset(dir, self.normalize_features),
            DataSource::Synthetic(spec) => {
                let mut ds = spec.generate()?;
                if self.normalize_features {
                    ds.normalize_rows();
                }
                let manifest = DatasetManifest {
                    n: ds.n(),
                    d: ds.d(),
                    classes: ds.num_classes,
                    edges: ds.graph.nnz() / 2,
                    unique_edges: ds.graph.nnz() / 2,
                    train_size: ds.train_mask.len(),
                    test_size: ds.test_mask.len(),
                };
                Ok((ds, manifest))
            }
        }
    }
}

/// Theory-side quantities for one (p, filter) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub p: f64,
    pub filter: FilterKind,
    pub lambda_g_max: f64,
    pub g_e: f64,
    pub a_l: f64,
    pub a_sigma: f64,
    pub b_bound: f64,
    pub radius: f64,
    pub c_p_lambda: f64,
    pub ln_beta_n: f64,
    pub beta_n: f64,
    pub saturated: bool,
    pub gen_bound: f64,
}

/// Evaluates the stability and generalization bounds for every grid cell,
/// with `n` the training-set size and `T = epochs · n`.
pub fn bounds_table(
    dataset: &Dataset,
    train: &TrainConfig,
    p_grid: &[f64],
    filter_grid: &[FilterKind],
    delta: f64,
) -> Result<Vec<BoundsRow>> {
    let n = dataset.train_mask.len();
    let b_bound = loss_bound(train.loss, train.activation, dataset)?;
    let mut rows = Vec::new();
    for &filter in filter_grid {
        let g = build_filter(&dataset.graph, filter);
        let spectral = spectral_radius(&g, DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER, train.seed)?;
        let g_e = compute_ge(&g, dataset.features.view())?;
        for &p in p_grid {
            let radius = minimizer_radius(b_bound, train.lambda, p);
            let consts = smoothness_constants(train.loss, train.activation, dataset, (radius * g_e).max(f64::MIN_POSITIVE))?;
            let beta = stability_beta(&BoundInputs {
                a_l: consts.a_l,
                a_sigma: consts.a_sigma,
                lambda_g_max: spectral.lambda_max_abs,
                g_e,
                eta: train.eta,
                n,
                t: (train.epochs * n).max(1),
                p,
                lambda: train.lambda,
                lambda_t: train.lambda_t(),
                b_bound,
                delta,
            })?;
            rows.push(BoundsRow {
                p,
                filter,
                lambda_g_max: spectral.lambda_max_abs,
                g_e,
                a_l: consts.a_l,
                a_sigma: consts.a_sigma,
                b_bound,
                radius,
                c_p_lambda: c_p_lambda(p, train.lambda, train.lambda_t(), b_bound),
                ln_beta_n: beta.ln_value,
                beta_n: beta.value,
                saturated: beta.saturated,
                gen_bound: generalization_bound(beta.value, b_bound, n, delta)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_bounds_csv(path: &Path, rows: &[BoundsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    }
    if rows.is_empty() {
        w.write_record([
            "p", "filter", "lambda_g_max", "g_e", "a_l", "a_sigma", "b_bound", "radius",
            "c_p_lambda", "ln_beta_n", "beta_n", "saturated", "gen_bound",
        ])
        .map_err(|e| Error::input(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Run summary written as `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub dataset: DatasetManifest,
    pub mode: String,
    pub loss: String,
    pub activation: String,
    pub p_grid: Vec<f64>,
    pub filter_grid: Vec<FilterKind>,
    pub repeats: usize,
    pub epochs: usize,
    pub lambda: f64,
    pub eta: f64,
    pub lambda_t: f64,
    pub seed: u64,
    pub eps_sparsity: f64,
    pub runs: usize,
    pub files: Vec<String>,
}

/// Files produced by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutputs {
    pub metrics: PathBuf,
    pub bounds: PathBuf,
    pub manifest: PathBuf,
}

/// Runs the sweep and writes `metrics.csv`, `bounds.csv` and
/// `manifest.json` into the configured output directory.
pub fn run_experiment_config(config: &ExperimentConfig) -> Result<(ExperimentOutputs, SweepTable)> {
    let (dataset, manifest) = config.load_data()?;
    let table = sweep(&dataset, &config.train, &config.p_grid, &config.filter_grid, config.repeats)?;
    let bounds = bounds_table(&dataset, &config.train, &config.p_grid, &config.filter_grid, config.delta)?;

    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let outputs = ExperimentOutputs {
        metrics: out.join("metrics.csv"),
        bounds: out.join("bounds.csv"),
        manifest: out.join("manifest.json"),
    };
    let file = fs::File::create(&outputs.metrics).map_err(|e| Error::io(&outputs.metrics, e))?;
    write_metrics_csv(&table.rows(), std::io::BufWriter::new(file))?;
    write_bounds_csv(&outputs.bounds, &bounds)?;

    let summary = RunSummary {
        dataset: manifest,
        mode: config.mode.to_string(),
        loss: config.train.loss.to_string(),
        activation: config.train.activation.to_string(),
        p_grid: config.p_grid.clone(),
        filter_grid: config.filter_grid.clone(),
        repeats: config.repeats,
        epochs: config.train.epochs,
        lambda: config.train.lambda,
        eta: config.train.eta,
        lambda_t: config.train.lambda_t(),
        seed: config.train.seed,
        eps_sparsity: config.train.eps_sparsity,
        runs: table.runs.len(),
        files: vec!["metrics.csv".into(), "bounds.csv".into(), "manifest.json".into()],
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&outputs.manifest, &(json + "\n"))?;
    Ok((outputs, table))
}

/// Reads the config at `config_path` and runs it.
pub fn run_experiment(config_path: &Path) -> Result<ExperimentOutputs> {
    let config = ExperimentConfig::from_file(config_path)?;
    run_experiment_config(&config).map(|(o, _)| o)
}

/// Plot-ready views of a metrics table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    GapCurves,
    DistanceCurves,
    SparsityTable,
}

impl PlotKind {
    pub fn default_file_name(self) -> &'static str {
        match self {
            PlotKind::GapCurves => "gap_curves.csv",
            PlotKind::DistanceCurves => "distance_curves.csv",
            PlotKind::SparsityTable => "sparsity_table.csv",
        }
    }
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "gap" | "gap_curves" => Ok(PlotKind::GapCurves),
            "distance" | "distance_curves" => Ok(PlotKind::DistanceCurves),
            "sparsity" | "sparsity_table" => Ok(PlotKind::SparsityTable),
            other => Err(Error::input(format!("unknown plot kind '{other}'"))),
        }
    }
}

fn series_label(filter: FilterKind, p: f64) -> String {
    format!("{filter} p={p}")
}

/// Renders a metrics table as plot data. Curves are long format
/// (`epoch,series,mean,stddev`, one series per filter and `p`); the sparsity
/// table pivots final-epoch sparsity into one row per filter and one
/// `mean±std` column per `p`.
pub fn render_plotdata(rows: &[crate::lab::MetricsRow], kind: PlotKind) -> String {
    let summary = summarize_rows(rows);
    let mut out = String::new();
    match kind {
        PlotKind::GapCurves | PlotKind::DistanceCurves => {
            out.push_str("epoch,series,mean,stddev\n");
            for c in &summary {
                let (m, s) = if kind == PlotKind::GapCurves {
                    c.gen_gap
                } else {
                    c.param_distance
                };
                writeln!(out, "{},{},{},{}", c.epoch, series_label(c.filter, c.p), m, s).unwrap();
            }
        }
        PlotKind::SparsityTable => {
            let mut ps: Vec<f64> = Vec::new();
            let mut filters: Vec<FilterKind> = Vec::new();
            for c in &summary {
                if !ps.iter().any(|&p| p.to_bits() == c.p.to_bits()) {
                    ps.push(c.p);
                }
                if !filters.contains(&c.filter) {
                    filters.push(c.filter);
                }
            }
            ps.sort_by(|a, b| a.total_cmp(b));
            out.push_str("filter");
            for p in &ps {
                write!(out, ",p={p}").unwrap();
            }
            out.push('\n');
            for f in filters {
                out.push_str(f.name());
                for p in &ps {
                    let last = summary
                        .iter()
                        .filter(|c| c.filter == f && c.p.to_bits() == p.to_bits())
                        .max_by_key(|c| c.epoch);
                    match last {
                        Some(c) => write!(out, ",{:.2}±{:.2}", c.sparsity_pct.0, c.sparsity_pct.1).unwrap(),
                        None => out.push(','),
                    }
                }
                out.push('\n');
            }
        }
    }
    out
}

/// Reads `metrics_csv`, renders `kind` and writes it to `out` (default: the
/// kind's file name next to the metrics file). Returns the written path.
pub fn emit_plotdata(metrics_csv: &Path, kind: PlotKind, out: Option<&Path>) -> Result<PathBuf> {
    let file = fs::File::open(metrics_csv).map_err(|e| Error::io(metrics_csv, e))?;
    let rows = read_metrics_csv(file).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", metrics_csv.display())),
        other => other,
    })?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => metrics_csv
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(kind.default_file_name()),
    };
    write_file(&path, &render_plotdata(&rows, kind))?;
    Ok(path)
}

/// Final-epoch (mean, std) of a column for every (filter, p) cell.
pub fn final_epoch_stats(
    rows: &[crate::lab::MetricsRow],
    column: fn(&crate::lab::MetricsRow) -> f64,
) -> Vec<(FilterKind, f64, (f64, f64))> {
    let summary = summarize_rows(rows);
    let mut out: Vec<(FilterKind, f64, (f64, f64))> = Vec::new();
    for c in &summary {
        if out.iter().any(|(f, p, _)| *f == c.filter && p.to_bits() == c.p.to_bits()) {
            continue;
        }
        let last_epoch = summary
            .iter()
            .filter(|s| s.filter == c.filter && s.p.to_bits() == c.p.to_bits())
            .map(|s| s.epoch)
            .max()
            .unwrap_or(0);
        let xs: Vec<f64> = rows
            .iter()
            .filter(|r| r.filter == c.filter && r.p.to_bits() == c.p.to_bits() && r.epoch == last_epoch)
            .map(column)
            .collect();
        out.push((c.filter, c.p, mean_std(&xs)));
    }
    out
}
