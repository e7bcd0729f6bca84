//! Dense row-major data matrix (rows are samples, columns are features) and
//! the linear algebra used for feature scoring: squared column norms and a
//! truncated singular value decomposition.
//!
//! The SVD is a block subspace iteration on the d-dimensional side: starting
//! from a seeded random block Q, repeat Q <- orth(A^T (A Q)) and read Ritz
//! values off the small projected Gram matrix (A Q)^T (A Q). Iteration stops
//! once the singular-value estimates stagnate (relative change below 1e-10)
//! or after 300 iterations. Right singular vectors come out of the final
//! Rayleigh-Ritz step as Q times an orthogonal matrix, so they are
//! orthonormal by construction. The decomposition is performed on the raw
//! matrix; no mean centering is applied.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling::{FeatureSubset, SeededRng};

/// Numerical-rank cutoff relative to the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const POWER_ITERATION_SEED: u64 = 0x51u64 << 32 | 0xd5eed;
const MAX_ITERATIONS: usize = 300;
const STAGNATION_TOL: f64 = 1e-10;
const OVERSAMPLE: usize = 8;
/// Fixed chunk count for parallel row reductions; independent of the thread
/// count so results are bit-identical for any degree of parallelism.
const REDUCE_CHUNKS: usize = 32;

/// Dense n x d real matrix. Immutable after construction; every entry is
/// finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>, // row-major
}

impl DataMatrix {
    pub fn from_vec(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dimensions must be positive, got {n_rows} x {n_cols}"
            )));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::InvalidMatrix(format!(
                "{} values for a {n_rows} x {n_cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at row {}, column {}",
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidMatrix("no rows".into()));
        }
        let n_cols = rows[0].len();
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_vec(rows.len(), n_cols, values)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.values[i * self.n_cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Copies column j into a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    /// New matrix containing the subset's columns, in subset order.
    pub fn restrict_columns(&self, subset: &FeatureSubset) -> Self {
        let idx = subset.indices();
        let mut values = Vec::with_capacity(self.n_rows * idx.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            values.extend(idx.iter().map(|&j| row[j]));
        }
        Self {
            n_rows: self.n_rows,
            n_cols: idx.len(),
            values,
        }
    }
}

/// Truncated SVD output: the top singular values with the matching right
/// singular vectors (each of length d, pairwise orthonormal).
#[derive(Debug, Clone)]
pub struct SvdFactors {
    singular_values: Vec<f64>,
    right_vectors: Vec<Vec<f64>>,
}

impl SvdFactors {
    /// Effective truncation rank (number of retained triplets).
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Non-increasing positive singular values.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Right singular vectors, one length-d vector per singular value.
    pub fn right_vectors(&self) -> &[Vec<f64>] {
        &self.right_vectors
    }
}

/// Entry j is the squared Euclidean norm of column j.
pub fn column_squared_norms(a: &DataMatrix) -> Vec<f64> {
    let mut norms = vec![0.0; a.n_cols()];
    for i in 0..a.n_rows() {
        for (norm, &v) in norms.iter_mut().zip(a.row(i)) {
            *norm += v * v;
        }
    }
    norms
}

/// Top `min(max_rank, numerical rank)` singular triplets of `a`.
///
/// The numerical rank counts singular values above `rank_tol` times the
/// largest one. Fails on an all-zero matrix, which has no positive singular
/// values; callers fall back to the uniform feature distribution.
pub fn truncated_svd(a: &DataMatrix, max_rank: usize, rank_tol: f64) -> Result<SvdFactors> {
    if max_rank == 0 {
        return Err(Error::InvalidConfig("max_rank must be >= 1".into()));
    }
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "rank_tol must be in (0, 1), got {rank_tol}"
        )));
    }
    let n = a.n_rows();
    let d = a.n_cols();
    let fro2: f64 = column_squared_norms(a).iter().sum();
    if fro2 == 0.0 {
        return Err(Error::DegenerateMatrix(
            "all-zero matrix has no positive singular values".into(),
        ));
    }

    let limit = max_rank.min(n).min(d);
    let block = (limit + OVERSAMPLE).min(d);

    // Seeded random start, orthonormalized. Columns live in R^d.
    let mut rng = SeededRng::new(POWER_ITERATION_SEED);
    let init: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..d).map(|_| 2.0 * rng.next_f64() - 1.0).collect())
        .collect();
    let mut q = orthonormalize(init);
    if q.is_empty() {
        return Err(Error::DegenerateMatrix("random block collapsed".into()));
    }

    let mut prev_sigmas: Vec<f64> = Vec::new();
    let mut result: Option<(Vec<f64>, Vec<Vec<f64>>)> = None;
    for _ in 0..MAX_ITERATIONS {
        let z = multiply(a, &q); // n x b, row-major
        let t = gram(&z, q.len(), n);
        let (eigvals, eigvecs) = jacobi_eigen(&t);
        let sigmas: Vec<f64> = eigvals.iter().map(|&l| l.max(0.0).sqrt()).collect();

        if stagnated(&prev_sigmas, &sigmas, limit, rank_tol) {
            result = Some((sigmas, ritz_vectors(&q, &eigvecs)));
            break;
        }
        prev_sigmas = sigmas;

        let w = multiply_transposed(a, &z, q.len());
        q = orthonormalize(w);
        if q.is_empty() {
            return Err(Error::DegenerateMatrix("iteration block collapsed".into()));
        }
    }
    // Iteration cap reached: accept the current Ritz approximation.
    let (sigmas, vectors) = match result {
        Some(r) => r,
        None => {
            let z = multiply(a, &q);
            let t = gram(&z, q.len(), n);
            let (eigvals, eigvecs) = jacobi_eigen(&t);
            let sigmas: Vec<f64> = eigvals.iter().map(|&l| l.max(0.0).sqrt()).collect();
            (sigmas, ritz_vectors(&q, &eigvecs))
        }
    };

    let sigma_max = sigmas[0];
    if sigma_max <= 0.0 {
        return Err(Error::DegenerateMatrix(
            "no positive singular values found".into(),
        ));
    }
    let numerical_rank = sigmas
        .iter()
        .take(limit)
        .filter(|&&s| s > rank_tol * sigma_max)
        .count();
    let r = numerical_rank.min(limit);
    Ok(SvdFactors {
        singular_values: sigmas[..r].to_vec(),
        right_vectors: vectors[..r].to_vec(),
    })
}

/// Relative stagnation of the singular values that matter (those above the
/// rank cutoff, up to `limit`).
fn stagnated(prev: &[f64], cur: &[f64], limit: usize, rank_tol: f64) -> bool {
    if prev.is_empty() || cur.is_empty() {
        return false;
    }
    let sigma_max = cur[0];
    if sigma_max <= 0.0 {
        return false;
    }
    let m = limit.min(prev.len()).min(cur.len());
    (0..m)
        .filter(|&i| cur[i] > rank_tol * sigma_max)
        .all(|i| (cur[i] - prev[i]).abs() <= STAGNATION_TOL * cur[i].max(f64::MIN_POSITIVE))
}

/// z = A q, with q given as `b` columns of length d; z is row-major n x b.
/// Rows are computed independently, so the parallel result is bit-identical
/// to the sequential one.
fn multiply(a: &DataMatrix, q: &[Vec<f64>]) -> Vec<f64> {
    let n = a.n_rows();
    let b = q.len();
    let mut z = vec![0.0; n * b];
    z.par_chunks_mut(b).enumerate().for_each(|(i, zrow)| {
        let row = a.row(i);
        for (c, qc) in q.iter().enumerate() {
            zrow[c] = dot(row, qc);
        }
    });
    z
}

/// w = A^T z as `b` columns of length d. Accumulated over fixed row chunks
/// that are reduced in a fixed order, keeping the result independent of the
/// thread count.
fn multiply_transposed(a: &DataMatrix, z: &[f64], b: usize) -> Vec<Vec<f64>> {
    let n = a.n_rows();
    let d = a.n_cols();
    let chunk = n.div_ceil(REDUCE_CHUNKS);
    let partials: Vec<Vec<f64>> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(n);
            let mut acc = vec![0.0; d * b];
            for i in lo..hi {
                let row = a.row(i);
                let zrow = &z[i * b..(i + 1) * b];
                for (j, &aij) in row.iter().enumerate() {
                    if aij != 0.0 {
                        let out = &mut acc[j * b..(j + 1) * b];
                        for (o, &zv) in out.iter_mut().zip(zrow) {
                            *o += aij * zv;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; d * b];
    for p in &partials {
        for (t, &v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    (0..b)
        .map(|c| (0..d).map(|j| total[j * b + c]).collect())
        .collect()
}

/// Symmetric b x b Gram matrix z^T z from row-major z (n x b).
fn gram(z: &[f64], b: usize, n: usize) -> Vec<f64> {
    let chunk = n.div_ceil(REDUCE_CHUNKS);
    let partials: Vec<Vec<f64>> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(n);
            let mut acc = vec![0.0; b * b];
            for i in lo..hi {
                let zrow = &z[i * b..(i + 1) * b];
                for r in 0..b {
                    let zr = zrow[r];
                    if zr != 0.0 {
                        for s in r..b {
                            acc[r * b + s] += zr * zrow[s];
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut t = vec![0.0; b * b];
    for p in &partials {
        for (x, &v) in t.iter_mut().zip(p) {
            *x += v;
        }
    }
    for r in 0..b {
        for s in 0..r {
            t[r * b + s] = t[s * b + r];
        }
    }
    t
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Modified Gram-Schmidt with a second pass; numerically dependent columns
/// are dropped (they correspond to null directions of the iterated operator).
fn orthonormalize(cols: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut v in cols {
        let original = dot(&v, &v).sqrt();
        if original == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for u in &out {
                let proj = dot(&v, u);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= 1e-13 * original {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        out.push(v);
    }
    out
}

/// Ritz vectors Q * W for the eigenvector columns W of the projected matrix;
/// orthonormal whenever Q is orthonormal.
fn ritz_vectors(q: &[Vec<f64>], eigvecs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = q[0].len();
    eigvecs
        .iter()
        .map(|w| {
            let mut v = vec![0.0; d];
            for (qc, &wc) in q.iter().zip(w) {
                if wc != 0.0 {
                    for (vi, &qi) in v.iter_mut().zip(qc) {
                        *vi += wc * qi;
                    }
                }
            }
            v
        })
        .collect()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix given as a dense
/// row-major b x b slice. Returns eigenvalues (descending) and matching
/// eigenvectors as columns.
fn jacobi_eigen(t: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let b = (t.len() as f64).sqrt().round() as usize;
    debug_assert_eq!(b * b, t.len());
    let mut m = t.to_vec();
    let mut v = vec![0.0; b * b];
    for i in 0..b {
        v[i * b + i] = 1.0;
    }
    let fro: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = 1e-14 * fro.max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..b {
            for q in (p + 1)..b {
                off = off.max(m[p * b + q].abs());
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..b {
            for q in (p + 1)..b {
                let apq = m[p * b + q];
                if apq.abs() <= threshold * 1e-2 {
                    continue;
                }
                let app = m[p * b + p];
                let aqq = m[q * b + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t_rot = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t_rot * t_rot + 1.0).sqrt();
                let s = t_rot * c;
                for k in 0..b {
                    let mkp = m[k * b + p];
                    let mkq = m[k * b + q];
                    m[k * b + p] = c * mkp - s * mkq;
                    m[k * b + q] = s * mkp + c * mkq;
                }
                for k in 0..b {
                    let mpk = m[p * b + k];
                    let mqk = m[q * b + k];
                    m[p * b + k] = c * mpk - s * mqk;
                    m[q * b + k] = s * mpk + c * mqk;
                }
                for k in 0..b {
                    let vkp = v[k * b + p];
                    let vkq = v[k * b + q];
                    v[k * b + p] = c * vkp - s * vkq;
                    v[k * b + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&i, &j| {
        m[j * b + j]
            .partial_cmp(&m[i * b + i])
            .expect("eigenvalues are finite")
    });
    let eigvals: Vec<f64> = order.iter().map(|&i| m[i * b + i]).collect();
    let eigvecs: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| (0..b).map(|k| v[k * b + i]).collect())
        .collect();
    (eigvals, eigvecs)
}
