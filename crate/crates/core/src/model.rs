//! Single-layer GCN predictor `f(x, w) = σ(Σ_j e_{xj} x_jᵀ w)`, its losses,
//! activations and per-sample gradients.
//!
//! Two parameter shapes are supported. Theory mode is the scalar model with
//! a weight vector of length `d` and ±1 labels. Experiment mode uses a `d×c`
//! weight matrix and softmax cross-entropy over `c` classes.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::SparseMatrix;

/// Class index mapped to `+1` in theory mode; every other label maps to `-1`.
pub const POSITIVE_CLASS: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Scalar output, ±1 labels.
    Theory,
    /// `c` class scores, class-index labels.
    Experiment,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Theory => "theory",
            Mode::Experiment => "experiment",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theory" => Ok(Mode::Theory),
            "experiment" => Ok(Mode::Experiment),
            other => Err(Error::input(format!("unknown mode '{other}'"))),
        }
    }
}

/// Model weights, stored flat. In experiment mode entry `(j, k)` of the
/// `d×c` matrix lives at `j * c + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    weights: Array1<f64>,
    d: usize,
    classes: Option<usize>,
}

impl ModelParams {
    pub fn zeros(d: usize, mode: Mode, classes: usize) -> Self {
        let classes = match mode {
            Mode::Theory => None,
            Mode::Experiment => Some(classes),
        };
        ModelParams {
            weights: Array1::zeros(d * classes.unwrap_or(1)),
            d,
            classes,
        }
    }

    /// I.i.d. `N(0, scale²)` entries.
    pub fn gaussian<R: Rng + ?Sized>(
        d: usize,
        mode: Mode,
        classes: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(d, mode, classes);
        p.weights
            .iter_mut()
            .for_each(|w| *w = scale * rng.sample::<f64, _>(StandardNormal));
        p
    }

    pub fn from_vector(weights: Array1<f64>) -> Self {
        let d = weights.len();
        ModelParams {
            weights,
            d,
            classes: None,
        }
    }

    pub fn from_matrix(w: Array2<f64>) -> Self {
        let (d, c) = w.dim();
        ModelParams {
            weights: Array1::from_iter(w.iter().copied()),
            d,
            classes: Some(c),
        }
    }

    pub fn mode(&self) -> Mode {
        if self.classes.is_some() {
            Mode::Experiment
        } else {
            Mode::Theory
        }
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Output width: 1 in theory mode, `c` in experiment mode.
    pub fn outputs(&self) -> usize {
        self.classes.unwrap_or(1)
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Array1<f64> {
        &mut self.weights
    }

    pub fn as_matrix(&self) -> ArrayView2<'_, f64> {
        self.weights
            .view()
            .into_shape_with_order((self.d, self.outputs()))
            .expect("weights length is d * outputs")
    }

    pub fn l2_norm(&self) -> f64 {
        self.weights.dot(&self.weights).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
    Identity,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ActivationKind {
    pub fn value(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => logistic(x),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Identity => x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => {
                let s = logistic(x);
                s * (1.0 - s)
            }
            ActivationKind::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Identity => 1.0,
        }
    }

    /// `a_σ = sup |σ'|`.
    pub fn lipschitz(self) -> f64 {
        match self {
            ActivationKind::Sigmoid => 0.25,
            ActivationKind::Tanh | ActivationKind::Identity => 1.0,
        }
    }

    /// `b_σ = sup |σ''|`.
    pub fn smoothness(self) -> f64 {
        match self {
            // σ'' = σ(1-σ)(1-2σ), extremal at σ = 1/2 ± 1/(2√3).
            ActivationKind::Sigmoid => 3f64.sqrt() / 18.0,
            // tanh'' = -2 tanh (1 - tanh²), extremal at tanh = ±1/√3.
            ActivationKind::Tanh => 4.0 / (3.0 * 3f64.sqrt()),
            ActivationKind::Identity => 0.0,
        }
    }

    /// Image of `[-r, r]`.
    pub fn output_range(self, r: f64) -> (f64, f64) {
        (self.value(-r), self.value(r))
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "tanh" => Ok(ActivationKind::Tanh),
            "identity" | "linear" => Ok(ActivationKind::Identity),
            other => Err(Error::input(format!("unknown activation '{other}'"))),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Identity => "identity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `(f - y)²`
    Square,
    /// Margin form `log(1 + exp(-y f))`.
    Logistic,
    /// Cross-entropy of `softmax(scores)`; experiment mode only.
    SoftmaxCrossEntropy,
}

impl LossKind {
    pub fn mode(self) -> Mode {
        match self {
            LossKind::Square | LossKind::Logistic => Mode::Theory,
            LossKind::SoftmaxCrossEntropy => Mode::Experiment,
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "square" | "squared" => Ok(LossKind::Square),
            "logistic" => Ok(LossKind::Logistic),
            "softmax_cross_entropy" | "softmax" | "cross_entropy" => {
                Ok(LossKind::SoftmaxCrossEntropy)
            }
            other => Err(Error::input(format!("unknown loss '{other}'"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Square => "square",
            LossKind::Logistic => "logistic",
            LossKind::SoftmaxCrossEntropy => "softmax_cross_entropy",
        })
    }
}

/// A training target as seen by a loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Signed(f64),
    Class(usize),
}

/// Model output for a single node.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Scalar(f64),
    Scores(Vec<f64>),
}

impl Prediction {
    /// Predicted class: sign in theory mode (mapped to 1 / 0), argmax of the
    /// scores in experiment mode.
    pub fn class(&self) -> usize {
        match self {
            Prediction::Scalar(f) => usize::from(*f > 0.0),
            Prediction::Scores(s) => argmax(s),
        }
    }
}

fn argmax(s: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in s.iter().enumerate() {
        if v > s[best] {
            best = k;
        }
    }
    best
}

fn log_sum_exp(s: &[f64]) -> f64 {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(s: &[f64]) -> Vec<f64> {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = s.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Semi-supervised node classification instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    /// Raw integer labels, one per node.
    pub labels: Vec<i64>,
    pub num_classes: usize,
    pub train_mask: Vec<usize>,
    pub test_mask: Vec<usize>,
    /// Symmetric 0/1 adjacency.
    pub graph: SparseMatrix,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    /// Checks shapes, mask ranges and disjointness.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.labels.len() != n {
            return Err(Error::input(format!(
                "{} labels for {n} nodes",
                self.labels.len()
            )));
        }
        if self.graph.n_rows() != n || self.graph.n_cols() != n {
            return Err(Error::input(format!(
                "graph is {}x{} but there are {n} nodes",
                self.graph.n_rows(),
                self.graph.n_cols()
            )));
        }
        if self.train_mask.is_empty() {
            return Err(Error::input("training mask is empty"));
        }
        let mut seen = vec![0u8; n];
        for (mask, bit) in [(&self.train_mask, 1u8), (&self.test_mask, 2u8)] {
            for &i in mask.iter() {
                if i >= n {
                    return Err(Error::input(format!("mask index {i} out of range")));
                }
                if seen[i] & bit != 0 {
                    return Err(Error::input(format!("node {i} listed twice in a mask")));
                }
                seen[i] |= bit;
            }
        }
        if let Some(i) = seen.iter().position(|&s| s == 3) {
            return Err(Error::input(format!(
                "node {i} is in both the training and test masks"
            )));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("features contain non-finite values"));
        }
        Ok(())
    }

    /// Target of node `i` for a loss of the given mode.
    pub fn target(&self, i: usize, mode: Mode) -> Result<Target> {
        let label = self.labels[i];
        match mode {
            Mode::Theory => Ok(Target::Signed(if label == POSITIVE_CLASS {
                1.0
            } else {
                -1.0
            })),
            Mode::Experiment => {
                if label < 0 || label as usize >= self.num_classes {
                    Err(Error::input(format!(
                        "label {label} of node {i} outside [0, {})",
                        self.num_classes
                    )))
                } else {
                    Ok(Target::Class(label as usize))
                }
            }
        }
    }

    /// Scales every nonzero feature row to unit Euclidean norm.
    pub fn normalize_rows(&mut self) {
        for mut row in self.features.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|v| v / norm);
            }
        }
    }
}

/// `Z = g(L) X`; row `i` aggregates the ego-graph of node `i`.
pub fn propagate(filter: &SparseMatrix, features: ArrayView2<f64>) -> Result<Array2<f64>> {
    filter.mul_dense(features)
}

fn check_dim(z: ArrayView1<f64>, params: &ModelParams) -> Result<()> {
    if z.len() != params.dim() {
        Err(Error::input(format!(
            "feature row has length {} but the model expects {}",
            z.len(),
            params.dim()
        )))
    } else {
        Ok(())
    }
}

fn pre_activation(z: ArrayView1<f64>, params: &ModelParams) -> Vec<f64> {
    params.as_matrix().t().dot(&z).to_vec()
}

/// `σ(zᵀw)`, or `σ` applied to each entry of `zᵀW` in experiment mode.
pub fn predict(z: ArrayView1<f64>, params: &ModelParams, act: ActivationKind) -> Result<Prediction> {
    check_dim(z, params)?;
    let u = pre_activation(z, params);
    Ok(match params.mode() {
        Mode::Theory => Prediction::Scalar(act.value(u[0])),
        Mode::Experiment => Prediction::Scores(u.into_iter().map(|v| act.value(v)).collect()),
    })
}

fn scalar_loss(loss: LossKind, y: f64, f: f64) -> f64 {
    match loss {
        LossKind::Square => (f - y) * (f - y),
        LossKind::Logistic => {
            // log(1 + e^t), t = -y f, evaluated without overflow.
            let t = -y * f;
            if t > 0.0 {
                t + (-t).exp().ln_1p()
            } else {
                t.exp().ln_1p()
            }
        }
        LossKind::SoftmaxCrossEntropy => unreachable!("not a scalar loss"),
    }
}

fn scalar_loss_derivative(loss: LossKind, y: f64, f: f64) -> f64 {
    match loss {
        LossKind::Square => 2.0 * (f - y),
        LossKind::Logistic => -y * logistic(-y * f),
        LossKind::SoftmaxCrossEntropy => unreachable!("not a scalar loss"),
    }
}

fn mismatch(loss: LossKind) -> Error {
    Error::input(format!("loss '{loss}' does not accept this label/prediction pair"))
}

/// `ℓ(y, f) ≥ 0`.
pub fn loss_eval(loss: LossKind, y: Target, f: &Prediction) -> Result<f64> {
    match (loss, y, f) {
        (LossKind::Square | LossKind::Logistic, Target::Signed(y), Prediction::Scalar(f)) => {
            Ok(scalar_loss(loss, y, *f))
        }
        (LossKind::SoftmaxCrossEntropy, Target::Class(k), Prediction::Scores(s)) if k < s.len() => {
            Ok((log_sum_exp(s) - s[k]).max(0.0))
        }
        _ => Err(mismatch(loss)),
    }
}

/// Gradient of `ℓ(y, f(z, w))` with respect to the (flat) weights:
/// `ℓ'(y, σ(zᵀw)) σ'(zᵀw) z` in theory mode.
pub fn grad_sample(
    z: ArrayView1<f64>,
    params: &ModelParams,
    y: Target,
    loss: LossKind,
    act: ActivationKind,
) -> Result<Array1<f64>> {
    let mut g = Array1::zeros(params.weights().len());
    grad_sample_into(z, params, y, loss, act, &mut g)?;
    Ok(g)
}

/// Allocation-free form of [`grad_sample`].
pub fn grad_sample_into(
    z: ArrayView1<f64>,
    params: &ModelParams,
    y: Target,
    loss: LossKind,
    act: ActivationKind,
    out: &mut Array1<f64>,
) -> Result<()> {
    check_dim(z, params)?;
    let u = pre_activation(z, params);
    let c = params.outputs();
    // Per-output factor multiplying z.
    let coef: Vec<f64> = match (loss, y, params.mode()) {
        (LossKind::Square | LossKind::Logistic, Target::Signed(y), Mode::Theory) => {
            let f = act.value(u[0]);
            vec![scalar_loss_derivative(loss, y, f) * act.derivative(u[0])]
        }
        (LossKind::SoftmaxCrossEntropy, Target::Class(k), Mode::Experiment) if k < c => {
            let scores: Vec<f64> = u.iter().map(|&v| act.value(v)).collect();
            let prob = softmax(&scores);
            (0..c)
                .map(|j| (prob[j] - if j == k { 1.0 } else { 0.0 }) * act.derivative(u[j]))
                .collect()
        }
        _ => return Err(mismatch(loss)),
    };
    for (j, &zj) in z.iter().enumerate() {
        for (k, &ck) in coef.iter().enumerate() {
            out[j * c + k] = zj * ck;
        }
    }
    Ok(())
}

/// Lipschitz and smoothness constants of the loss/activation pair, plus the
/// loss bound `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessConstants {
    pub a_l: f64,
    pub b_l: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    /// `max ℓ(y, σ(0))` over the training labels.
    pub b_bound: f64,
}

/// `B = max_{i ∈ train} ℓ(y_i, σ(0))`. Independent of any radius.
pub fn loss_bound(loss: LossKind, act: ActivationKind, dataset: &Dataset) -> Result<f64> {
    let zero = match loss.mode() {
        Mode::Theory => Prediction::Scalar(act.value(0.0)),
        Mode::Experiment => Prediction::Scores(vec![act.value(0.0); dataset.num_classes]),
    };
    let mut b: f64 = 0.0;
    for &i in &dataset.train_mask {
        b = b.max(loss_eval(loss, dataset.target(i, loss.mode())?, &zero)?);
    }
    Ok(b)
}

/// Constants valid when every pre-activation lies in `[-radius, radius]`.
/// Loss constants are taken over the activation's image of that interval and
/// the training labels; softmax cross-entropy uses its global constants
/// (`√2` for the gradient norm, `1/2` for the Hessian).
pub fn smoothness_constants(
    loss: LossKind,
    act: ActivationKind,
    dataset: &Dataset,
    radius: f64,
) -> Result<SmoothnessConstants> {
    if !(radius > 0.0) {
        return Err(Error::input("prediction radius must be positive"));
    }
    let b_bound = loss_bound(loss, act, dataset)?;
    let (lo, hi) = act.output_range(radius);
    let (a_l, b_l) = match loss {
        LossKind::Square => {
            let mut a: f64 = 0.0;
            for &i in &dataset.train_mask {
                if let Target::Signed(y) = dataset.target(i, Mode::Theory)? {
                    a = a.max(2.0 * (lo - y).abs()).max(2.0 * (hi - y).abs());
                }
            }
            (a, 2.0)
        }
        LossKind::Logistic => {
            let (mut a, mut b): (f64, f64) = (0.0, 0.0);
            for &i in &dataset.train_mask {
                if let Target::Signed(y) = dataset.target(i, Mode::Theory)? {
                    // |ℓ'| = |y| s(-y f) is largest where the margin y f is smallest.
                    let (m_lo, m_hi) = {
                        let (p, q) = (y * lo, y * hi);
                        (p.min(q), p.max(q))
                    };
                    a = a.max(y.abs() * logistic(-m_lo));
                    // |ℓ''| = y² s(m)(1 - s(m)), peaked at margin 0.
                    let m = if m_lo <= 0.0 && 0.0 <= m_hi {
                        0.0
                    } else if m_lo > 0.0 {
                        m_lo
                    } else {
                        m_hi
                    };
                    let s = logistic(m);
                    b = b.max(y * y * s * (1.0 - s));
                }
            }
            (a, b)
        }
        LossKind::SoftmaxCrossEntropy => (2f64.sqrt(), 0.5),
    };
    Ok(SmoothnessConstants {
        a_l,
        b_l,
        a_sigma: act.lipschitz(),
        b_sigma: act.smoothness(),
        b_bound,
    })
}
