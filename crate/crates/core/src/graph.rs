//! Sparse graph storage, the four graph convolution filters and spectral
//! quantities derived from them.
//!
//! All matrices are stored in compressed sparse row form. Filters are built
//! once from a symmetric 0/1 adjacency and are immutable afterwards.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute residual for [`spectral_radius`].
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-8;
/// Default iteration cap for [`spectral_radius`].
pub const DEFAULT_SPECTRAL_MAX_ITER: usize = 10_000;
/// Largest graph accepted by the dense eigensolver path.
pub const DENSE_EIGEN_LIMIT: usize = 200;

/// Compressed sparse row matrix with no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate positions
    /// are summed and entries that end up exactly zero are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for (i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::input(format!(
                    "entry ({i}, {j}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            rows[i].push((j, v));
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut acc = 0.0;
                while k < row.len() && row[k].0 == j {
                    acc += row[k].1;
                    k += 1;
                }
                if acc != 0.0 {
                    col_indices.push(j);
                    values.push(acc);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn transpose(&self) -> Self {
        let triplets = (0..self.n_rows).flat_map(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (j, i, v))
        });
        SparseMatrix::from_triplets(self.n_cols, self.n_rows, triplets)
            .expect("transpose indices are in range")
    }

    /// True when the matrix equals its transpose bit for bit.
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// Sparse-dense product `A X`.
    pub fn mul_dense(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.n_cols {
            return Err(Error::input(format!(
                "dimension mismatch: {}x{} matrix times {}x{} features",
                self.n_rows,
                self.n_cols,
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = Array2::zeros((self.n_rows, x.ncols()));
        for (i, mut out_row) in out.rows_mut().into_iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out_row.scaled_add(v, &x.row(j));
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Restriction to the rows and columns listed in `nodes` (sorted, unique).
    pub fn principal_submatrix(&self, nodes: &[usize]) -> Self {
        let triplets = nodes.iter().enumerate().flat_map(|(a, &i)| {
            let (cols, vals) = self.row(i);
            nodes.iter().enumerate().filter_map(move |(b, &j)| {
                cols.binary_search(&j).ok().map(|k| (a, b, vals[k]))
            })
        });
        SparseMatrix::from_triplets(nodes.len(), nodes.len(), triplets)
            .expect("submatrix indices are in range")
    }

    /// Symmetric matrix diagonally similar to `self`, with entries
    /// `sign(m_ij) * sqrt(m_ij * m_ji)`.
    ///
    /// This is exact for matrices of the form `D^{-1} S + I` with `S`
    /// symmetric and nonnegative, which covers the random-walk filter.
    /// Fails if the sparsity pattern is not symmetric or paired entries have
    /// opposite signs.
    pub fn symmetrized_similar(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::input("symmetrization needs a square matrix"));
        }
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let w = self.get(j, i);
                if i == j {
                    triplets.push((i, j, v));
                    continue;
                }
                if w == 0.0 || v.signum() != w.signum() {
                    return Err(Error::input(format!(
                        "matrix is not diagonally similar to a symmetric one at ({i}, {j})"
                    )));
                }
                // Order the product so (i,j) and (j,i) round identically.
                let (lo, hi) = if i < j { (v, w) } else { (w, v) };
                triplets.push((i, j, v.signum() * (lo * hi).sqrt()));
            }
        }
        SparseMatrix::from_triplets(self.n_rows, self.n_cols, triplets)
    }

    /// Gershgorin bound: max absolute row sum.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// One of the four fixed graph convolution filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    /// `A + I`
    Unnormalized,
    /// `D^{-1/2} A D^{-1/2} + I`
    Normalized,
    /// `D^{-1} A + I`
    RandomWalk,
    /// `(D + I)^{-1/2} (A + I) (D + I)^{-1/2}`
    AugmentedNormalized,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] = [
        FilterKind::Unnormalized,
        FilterKind::Normalized,
        FilterKind::RandomWalk,
        FilterKind::AugmentedNormalized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Unnormalized => "unnormalized",
            FilterKind::Normalized => "normalized",
            FilterKind::RandomWalk => "random_walk",
            FilterKind::AugmentedNormalized => "augmented_normalized",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "unnormalized" => Ok(FilterKind::Unnormalized),
            "normalized" => Ok(FilterKind::Normalized),
            "random_walk" | "randomwalk" => Ok(FilterKind::RandomWalk),
            "augmented_normalized" | "augmentednormalized" | "augmented" => {
                Ok(FilterKind::AugmentedNormalized)
            }
            other => Err(Error::input(format!("unknown filter kind '{other}'"))),
        }
    }
}

/// Result of [`spectral_radius`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    /// Largest absolute eigenvalue.
    pub lambda_max_abs: f64,
    /// Largest algebraic eigenvalue.
    pub lambda_max: f64,
    /// Smallest algebraic eigenvalue.
    pub lambda_min: f64,
    pub iterations_used: usize,
    /// Worst Rayleigh-quotient residual `||Mx - θx||` of the two runs.
    pub residual: f64,
}

/// Symmetric 0/1 adjacency of an undirected graph on `n` nodes.
///
/// Edge orientation and duplicates are ignored. Self-loop pairs are dropped;
/// the filters add the self term themselves.
pub fn build_adjacency(edges: &[(usize, usize)], n: usize) -> Result<SparseMatrix> {
    if n == 0 {
        return Err(Error::input("graph must have at least one node"));
    }
    let mut set = BTreeSet::new();
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::input(format!(
                "edge ({a}, {b}) references a node outside [0, {n})"
            )));
        }
        if a != b {
            set.insert((a, b));
            set.insert((b, a));
        }
    }
    SparseMatrix::from_triplets(n, n, set.into_iter().map(|(a, b)| (a, b, 1.0)))
}

/// Node degrees of a 0/1 adjacency.
pub fn degrees(adj: &SparseMatrix) -> Vec<f64> {
    (0..adj.n_rows())
        .map(|i| adj.row(i).1.iter().sum())
        .collect()
}

/// Builds `g(L)` for the chosen kind. Zero-degree nodes get a zero `D^{-1}`
/// and `D^{-1/2}` factor, so only their self term survives.
pub fn build_filter(adj: &SparseMatrix, kind: FilterKind) -> SparseMatrix {
    let n = adj.n_rows();
    let deg = degrees(adj);
    let inv_or_zero = |d: f64, f: fn(f64) -> f64| if d > 0.0 { f(d) } else { 0.0 };
    let scale: Vec<f64> = match kind {
        FilterKind::Unnormalized => vec![1.0; n],
        FilterKind::Normalized => deg.iter().map(|&d| inv_or_zero(d, |d| 1.0 / d.sqrt())).collect(),
        FilterKind::RandomWalk => deg.iter().map(|&d| inv_or_zero(d, |d| 1.0 / d)).collect(),
        FilterKind::AugmentedNormalized => deg.iter().map(|&d| 1.0 / (d + 1.0).sqrt()).collect(),
    };

    let mut triplets = Vec::with_capacity(adj.nnz() + n);
    for i in 0..n {
        let (cols, vals) = adj.row(i);
        for (&j, &a) in cols.iter().zip(vals) {
            let v = match kind {
                FilterKind::Unnormalized => a,
                FilterKind::Normalized => a * (scale[i] * scale[j]),
                FilterKind::RandomWalk => a * scale[i],
                FilterKind::AugmentedNormalized => a * (scale[i] * scale[j]),
            };
            triplets.push((i, j, v));
        }
        let diag = match kind {
            FilterKind::AugmentedNormalized => scale[i] * scale[i],
            _ => 1.0,
        };
        triplets.push((i, i, diag));
    }
    SparseMatrix::from_triplets(n, n, triplets).expect("filter indices come from the adjacency")
}

fn power_iteration(
    mat: &SparseMatrix,
    sign: f64,
    shift: f64,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> (f64, f64, usize, bool) {
    let n = mat.n_rows();
    let mut x = start.to_vec();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
    let mut y = vec![0.0; n];
    let mut best = (0.0, f64::INFINITY);
    for it in 1..=max_iter {
        mat.mul_vec(&x, &mut y);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi = sign * *yi + shift * xi;
        }
        let theta: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - theta * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual < best.1 {
            best = (theta, residual);
        }
        if residual <= tol {
            return (theta, residual, it, true);
        }
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ny == 0.0 {
            // x lies in the null space of the shifted matrix, which is PSD,
            // so its dominant eigenvalue is zero.
            return (0.0, 0.0, it, true);
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    (best.0, best.1, max_iter, false)
}

/// Estimates the largest absolute eigenvalue of a filter.
///
/// Non-symmetric filters (random walk) are first replaced by their symmetric
/// similar form. Both ends of the spectrum are found by power iteration on
/// positive semidefinite shifts: `M + sI` with `s` the Gershgorin bound for
/// the top, then `λ_max I - M` for the bottom.
pub fn spectral_radius(
    filter: &SparseMatrix,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectralEstimate> {
    if !filter.is_square() {
        return Err(Error::input("spectral radius needs a square matrix"));
    }
    if !(tol > 0.0) {
        return Err(Error::input("spectral tolerance must be positive"));
    }
    let sym;
    let mat = if filter.is_symmetric() {
        filter
    } else {
        sym = filter.symmetrized_similar()?;
        &sym
    };
    let n = mat.n_rows();
    let shift = mat.max_abs_row_sum();
    if n == 0 || shift == 0.0 {
        return Ok(SpectralEstimate {
            lambda_max_abs: 0.0,
            lambda_max: 0.0,
            lambda_min: 0.0,
            iterations_used: 0,
            residual: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let (top, r_top, it_top, ok_top) = power_iteration(mat, 1.0, shift, &start, tol, max_iter);
    let lambda_max = top - shift;
    let (bottom, r_bot, it_bot, ok_bot) =
        power_iteration(mat, -1.0, lambda_max, &start, tol, max_iter);
    let lambda_min = lambda_max - bottom;

    let residual = r_top.max(r_bot);
    let estimate = lambda_max.abs().max(lambda_min.abs());
    if !(ok_top && ok_bot) {
        return Err(Error::NoConvergence {
            estimate,
            residual,
            iterations: it_top + it_bot,
        });
    }
    Ok(SpectralEstimate {
        lambda_max_abs: estimate,
        lambda_max,
        lambda_min,
        iterations_used: it_top + it_bot,
        residual,
    })
}

/// Sparse vector as parallel index/value lists, indices increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn get(&self, j: usize) -> f64 {
        match self.indices.binary_search(&j) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }
}

/// The filter row of `node`: the aggregation weights over its ego-graph.
pub fn ego_row(filter: &SparseMatrix, node: usize) -> Result<SparseVec> {
    if node >= filter.n_rows() {
        return Err(Error::input(format!(
            "node {node} out of range for {} nodes",
            filter.n_rows()
        )));
    }
    let (cols, vals) = filter.row(node);
    Ok(SparseVec {
        indices: cols.to_vec(),
        values: vals.to_vec(),
    })
}

/// `g_e`: the largest Euclidean norm of a row of `g(L) X`.
pub fn compute_ge(filter: &SparseMatrix, features: ArrayView2<f64>) -> Result<f64> {
    let z = filter.mul_dense(features)?;
    Ok(max_row_norm(z.view()))
}

pub(crate) fn max_row_norm(z: ArrayView2<f64>) -> f64 {
    z.rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0, f64::max)
}

/// Largest absolute eigenvalue by dense symmetric eigendecomposition.
/// Non-symmetric input is symmetrized by similarity first.
pub fn dense_max_abs_eigenvalue(mat: &SparseMatrix) -> Result<f64> {
    if mat.n_rows() > DENSE_EIGEN_LIMIT {
        return Err(Error::TooLarge {
            n: mat.n_rows(),
            limit: DENSE_EIGEN_LIMIT,
        });
    }
    let dense = if mat.is_symmetric() {
        mat.to_dense()
    } else {
        mat.symmetrized_similar()?.to_dense()
    };
    let eig = SymmetricEigen::new(dense);
    Ok(eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Compares the ego-graph filter's largest absolute eigenvalue against the
/// full filter's. The ego filter is the principal submatrix of `g(L)` on the
/// node and its filter neighbours. Returns `(ego, full)`.
pub fn ego_eigen_check(adj: &SparseMatrix, kind: FilterKind, node: usize) -> Result<(f64, f64)> {
    let n = adj.n_rows();
    if n > DENSE_EIGEN_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: DENSE_EIGEN_LIMIT,
        });
    }
    let filter = build_filter(adj, kind);
    let row = ego_row(&filter, node)?;
    let ego = filter.principal_submatrix(&row.indices);
    Ok((
        dense_max_abs_eigenvalue(&ego)?,
        dense_max_abs_eigenvalue(&filter)?,
    ))
}

/// Reads a whitespace-separated edge list. Blank lines and lines starting
/// with `#` are skipped.
pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, k + 1, "expected two node ids"));
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(path, k + 1, format!("invalid node id '{s}'")))
        };
        edges.push((parse(a)?, parse(b)?));
    }
    Ok(edges)
}
