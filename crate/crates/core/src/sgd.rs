//! Inexact proximal SGD.
//!
//! Each step samples one training node `i_t`, takes a projected gradient
//! step and then applies the ℓp proximal map:
//!
//! ```text
//! v       = Π_C(w_t - η ∇L_{i_t}(w_t)),   C = {‖w‖₂ ≤ (B/λ)^{1/p}}
//! w_{t+1} = Pro_{λ_t, p}(v)
//! ```
//!
//! Because the projection lands inside the ball and the proximal map only
//! shrinks magnitudes, every iterate stays inside `C`.

use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::minimizer_radius;
use crate::error::{Error, Result};
use crate::graph::{build_filter, FilterKind};
use crate::lab::{self, EpochMetrics, RunMetrics, DEFAULT_SPARSITY_EPS};
use crate::model::{
    grad_sample_into, loss_bound, propagate, ActivationKind, Dataset, LossKind, Mode, ModelParams,
};
use crate::prox::{project_ball_inplace, prox_lp_inplace, DEFAULT_PROX_TOL};

/// How training indices are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// I.i.d. uniform draws from the training mask.
    WithReplacement,
    /// A fresh permutation of the training mask every epoch.
    ShuffledEpochs,
}

/// Starting point `w_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    /// `N(0, scale²)` entries from a generator seeded by the run seed.
    Gaussian { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub p: f64,
    pub lambda: f64,
    pub eta: f64,
    /// Prox scale; `None` means `eta * lambda`.
    pub lambda_t: Option<f64>,
    pub epochs: usize,
    pub loss: LossKind,
    pub activation: ActivationKind,
    pub filter_kind: FilterKind,
    pub seed: u64,
    pub prox_tol: f64,
    /// Snapshot period in epochs.
    pub record_every: usize,
    pub sampling: Sampling,
    pub init: Init,
    /// Threshold below which a weight counts as zero.
    pub eps_sparsity: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            p: 2.0,
            lambda: 1e-3,
            eta: 0.1,
            lambda_t: None,
            epochs: 200,
            loss: LossKind::Logistic,
            activation: ActivationKind::Sigmoid,
            filter_kind: FilterKind::AugmentedNormalized,
            seed: 0,
            prox_tol: DEFAULT_PROX_TOL,
            record_every: 1,
            sampling: Sampling::WithReplacement,
            init: Init::Zeros,
            eps_sparsity: DEFAULT_SPARSITY_EPS,
        }
    }
}

impl TrainConfig {
    pub fn lambda_t(&self) -> f64 {
        self.lambda_t.unwrap_or(self.eta * self.lambda)
    }

    pub fn mode(&self) -> Mode {
        self.loss.mode()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(Error::input(format!("p must lie in (1,2], got {}", self.p)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::input("lambda must be positive"));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::input("eta must be non-negative"));
        }
        if !(self.lambda_t() > 0.0) {
            return Err(Error::input("lambda_t must be positive"));
        }
        if !(self.prox_tol > 0.0) {
            return Err(Error::input("prox_tol must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::input("record_every must be at least 1"));
        }
        if !(self.eps_sparsity > 0.0) {
            return Err(Error::input("sparsity threshold must be positive"));
        }
        if let Init::Gaussian { scale } = self.init {
            if !(scale >= 0.0) {
                return Err(Error::input("init scale must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Optimizer state between steps.
#[derive(Debug, Clone)]
pub struct SgdState {
    pub params: ModelParams,
    pub step: usize,
    pub rng: ChaCha8Rng,
    /// Radius of the constraint ball, `(B/λ)^{1/p}`.
    pub radius: f64,
}

impl SgdState {
    pub fn new(params: ModelParams, seed: u64, radius: f64) -> Self {
        SgdState {
            params,
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub epoch: usize,
    pub weights: Array1<f64>,
}

/// Recorded weights and the full sequence of sampled node indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub index_sequence: Vec<usize>,
}

/// Everything derived once per (dataset, config) pair.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub z: Array2<f64>,
    pub b_bound: f64,
    pub radius: f64,
}

impl Prepared {
    pub fn new(dataset: &Dataset, config: &TrainConfig) -> Result<Self> {
        dataset.validate()?;
        config.validate()?;
        let filter = build_filter(&dataset.graph, config.filter_kind);
        let z = propagate(&filter, dataset.features.view())?;
        let b_bound = loss_bound(config.loss, config.activation, dataset)?;
        Ok(Prepared {
            z,
            b_bound,
            radius: minimizer_radius(b_bound, config.lambda, config.p),
        })
    }
}

pub fn initial_params(dataset: &Dataset, config: &TrainConfig) -> ModelParams {
    let (d, c, mode) = (dataset.d(), dataset.num_classes, config.mode());
    match config.init {
        Init::Zeros => ModelParams::zeros(d, mode, c),
        Init::Gaussian { scale } => {
            // Separate stream from index sampling.
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9E37_79B9_7F4A_7C15);
            ModelParams::gaussian(d, mode, c, scale, &mut rng)
        }
    }
}

/// One projected proximal update at training node `node`.
fn update(
    params: &mut ModelParams,
    grad: &mut Array1<f64>,
    dataset: &Dataset,
    z: ArrayView2<f64>,
    node: usize,
    config: &TrainConfig,
    radius: f64,
) -> Result<()> {
    let target = dataset.target(node, config.mode())?;
    grad_sample_into(z.row(node), params, target, config.loss, config.activation, grad)?;
    let w = params.weights_mut();
    w.scaled_add(-config.eta, grad);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite weights after the gradient step at node {node}"
        )));
    }
    project_ball_inplace(w.view_mut(), radius);
    prox_lp_inplace(w.view_mut(), config.lambda_t(), config.p, config.prox_tol)
}

/// One SGD step: draw `i_t` uniformly (with replacement) from the training
/// mask, then project and apply the prox. Returns the sampled node.
pub fn sgd_step(
    state: &mut SgdState,
    dataset: &Dataset,
    z: ArrayView2<f64>,
    config: &TrainConfig,
) -> Result<usize> {
    if dataset.train_mask.is_empty() {
        return Err(Error::input("training mask is empty"));
    }
    let node = dataset.train_mask[state.rng.random_range(0..dataset.train_mask.len())];
    let mut grad = Array1::zeros(state.params.weights().len());
    update(&mut state.params, &mut grad, dataset, z, node, config, state.radius)?;
    state.step += 1;
    Ok(node)
}

/// Draws the full index sequence for `epochs` epochs.
pub fn sample_indices(dataset: &Dataset, config: &TrainConfig) -> Vec<usize> {
    let m = dataset.train_mask.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seq = Vec::with_capacity(m * config.epochs);
    match config.sampling {
        Sampling::WithReplacement => {
            for _ in 0..m * config.epochs {
                seq.push(dataset.train_mask[rng.random_range(0..m)]);
            }
        }
        Sampling::ShuffledEpochs => {
            let mut order = dataset.train_mask.clone();
            for _ in 0..config.epochs {
                order.shuffle(&mut rng);
                seq.extend_from_slice(&order);
            }
        }
    }
    seq
}

/// Trains from `init` along a fixed index sequence, one epoch being
/// `train_mask.len()` consecutive steps.
pub fn train_on_sequence(
    dataset: &Dataset,
    prepared: &Prepared,
    config: &TrainConfig,
    init: ModelParams,
    indices: &[usize],
) -> Result<(ModelParams, Trajectory, RunMetrics)> {
    let m = dataset.train_mask.len();
    if indices.len() != m * config.epochs {
        return Err(Error::input(format!(
            "index sequence has {} entries, expected {}",
            indices.len(),
            m * config.epochs
        )));
    }
    let mut params = init;
    let mut grad = Array1::zeros(params.weights().len());
    let mut trajectory = Trajectory {
        snapshots: vec![Snapshot {
            step: 0,
            epoch: 0,
            weights: params.weights().clone(),
        }],
        index_sequence: Vec::with_capacity(indices.len()),
    };
    let mut metrics = RunMetrics::default();
    for epoch in 1..=config.epochs {
        for &node in &indices[(epoch - 1) * m..epoch * m] {
            update(&mut params, &mut grad, dataset, prepared.z.view(), node, config, prepared.radius)?;
            trajectory.index_sequence.push(node);
        }
        if epoch % config.record_every == 0 || epoch == config.epochs {
            trajectory.snapshots.push(Snapshot {
                step: epoch * m,
                epoch,
                weights: params.weights().clone(),
            });
        }
        metrics.rows.push(epoch_metrics(epoch, &params, dataset, prepared, config)?);
    }
    Ok((params, trajectory, metrics))
}

fn epoch_metrics(
    epoch: usize,
    params: &ModelParams,
    dataset: &Dataset,
    prepared: &Prepared,
    config: &TrainConfig,
) -> Result<EpochMetrics> {
    let z = prepared.z.view();
    let train_error = lab::error_rate(params, dataset, z, &dataset.train_mask, config.loss, config.activation)?;
    let test_error = if dataset.test_mask.is_empty() {
        f64::NAN
    } else {
        lab::error_rate(params, dataset, z, &dataset.test_mask, config.loss, config.activation)?
    };
    Ok(EpochMetrics {
        epoch,
        train_error,
        test_error,
        gen_gap: (train_error - test_error).abs(),
        param_distance: None,
        sparsity_pct: lab::sparsity_ratio(params.weights().view(), config.eps_sparsity),
    })
}

/// Full training run. Deterministic given `config.seed`.
pub fn train(
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(ModelParams, Trajectory, RunMetrics)> {
    let prepared = Prepared::new(dataset, config)?;
    let indices = sample_indices(dataset, config);
    train_on_sequence(dataset, &prepared, config, initial_params(dataset, config), &indices)
}
