//! Sparse storage and a banded direct solver.
//!
//! Matrices are assembled as triplets, compressed to CSR, and factorized by a
//! band LU with partial pivoting after a reverse Cuthill-McKee reordering.
//! Problem sizes here are desk scale (at most a few times 10^4 unknowns), for
//! which the band profile of a P1 mesh stays narrow enough.

use std::collections::VecDeque;

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};

/// Relative pivot threshold below which a factorization is reported singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let k = next[r];
            cols[k] = c;
            vals[k] = v;
            next[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            // stable sort keeps the summation order of duplicates deterministic
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                indices.push(c);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, &[])
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let t: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), diag.len(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Iterates the stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.data[range].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            out.extend(self.row(i).map(|(j, v)| (i, j, v)));
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(k) => self.data[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `xᵀ·A·y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    /// `self + alpha·other`
    pub fn add_scaled(&self, other: &CsrMatrix, alpha: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)));
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `(A + Aᵀ)/2`
    pub fn symmetric_part(&self) -> Self {
        self.add_scaled(&self.transpose(), 1.0).scaled(0.5)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Diagonal matrix of row sums (mass lumping).
    pub fn lumped(&self) -> Self {
        Self::from_diagonal(&self.row_sums())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest off-diagonal entry (signed), `-inf` if there is none.
    pub fn max_offdiagonal(&self) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                if i != j {
                    m = m.max(v);
                }
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// Symmetric permutation `P·A·Pᵀ` where `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let t: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (inv[i], inv[j], v))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    /// Lower and upper bandwidth.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.nrows {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        // (farthest node, eccentricity) within the component of `start`
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::from([start]);
        dist[start] = 0;
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &w in &adj[v] {
                if !visited[w] && dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        (last, dist[last])
    };

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("unvisited vertex remains");
        // pseudo-peripheral start
        let mut start = seed;
        let mut ecc = 0;
        for _ in 0..4 {
            let (far, e) = bfs_levels(start, &visited);
            if e <= ecc {
                break;
            }
            ecc = e;
            start = far;
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Band LU factorization with partial pivoting of a reordered square matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    /// Row-position-relative band of U: entry (i, j) at `i*width + j + kl - i`.
    band: Vec<f64>,
    pivots: Vec<usize>,
    multipliers: Vec<f64>,
    perm: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let pa = a.permuted(&perm);
        let (kl, ku) = pa.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        let idx = |i: usize, j: usize| i * width + j + kl - i;
        for (i, j, v) in pa.triplets() {
            band[idx(i, j)] += v;
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut pivots = vec![0; n];
        let mut multipliers = vec![0.0; n * kl.max(1)];
        let mut tmp = vec![0.0; width];

        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = band[idx(k, k)].abs();
            for r in k + 1..=last {
                let v = band[idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= SINGULAR_PIVOT_RTOL * scale {
                return Err(Error::SingularSystem {
                    row: k,
                    pivot: best,
                });
            }
            pivots[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                // move row p into position k and vice versa, remapping by absolute column
                for (t, j) in (k..=jmax).enumerate() {
                    tmp[t] = band[idx(p, j)];
                }
                for j in k..=jmax {
                    let v = band[idx(k, j)];
                    if j <= p + kl + ku {
                        band[idx(p, j)] = v;
                    }
                }
                for (t, j) in (k..=jmax).enumerate() {
                    band[idx(k, j)] = tmp[t];
                }
            }
            let pivot = band[idx(k, k)];
            for r in k + 1..=last {
                let m = band[idx(r, k)] / pivot;
                multipliers[k * kl + (r - k - 1)] = m;
                band[idx(r, k)] = 0.0;
                if m != 0.0 {
                    for j in k + 1..=jmax {
                        let u = band[idx(k, j)];
                        band[idx(r, j)] -= m * u;
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            width,
            band,
            pivots,
            multipliers,
            perm,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let kl = self.kl;
        let mut b: Vec<f64> = self.perm.iter().map(|&old| rhs[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                    b[r] -= self.multipliers[k * kl + (r - k - 1)] * bk;
                }
            }
        }
        let ju = self.width - kl - 1;
        for i in (0..n).rev() {
            let row = &self.band[i * self.width..(i + 1) * self.width];
            let mut s = b[i];
            for j in i + 1..=(i + ju).min(n - 1) {
                s -= row[j + kl - i] * b[j];
            }
            b[i] = s / row[kl];
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = b[new];
        }
        out
    }
}

/// Tests positive definiteness of a symmetric matrix by a band LDLᵀ sweep.
/// Every pivot must exceed `rtol` times the largest diagonal entry.
pub fn is_positive_definite(a: &CsrMatrix, rtol: f64) -> bool {
    let n = a.nrows();
    if n == 0 {
        return true;
    }
    let perm = reverse_cuthill_mckee(a);
    let pa = a.permuted(&perm);
    let (kl, _) = pa.bandwidths();
    let w = kl + 1;
    // lower band: entry (i, j), j <= i, stored at i*w + j + kl - i
    let mut band = vec![0.0; n * w];
    for (i, j, v) in pa.triplets() {
        if j <= i {
            band[i * w + j + kl - i] += v;
        }
    }
    let scale = pa.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = rtol * scale.max(f64::MIN_POSITIVE);
    let mut d = vec![0.0; n];
    for i in 0..n {
        let j0 = i.saturating_sub(kl);
        // L(i, j) * d(j) accumulated in place, then divided
        for j in j0..i {
            let mut s = band[i * w + j + kl - i];
            let k0 = j0.max(j.saturating_sub(kl));
            for k in k0..j {
                s -= band[i * w + k + kl - i] * band[j * w + k + kl - j] * d[k];
            }
            band[i * w + j + kl - i] = s / d[j];
        }
        let mut s = band[i * w + kl];
        for k in j0..i {
            let l = band[i * w + k + kl - i];
            s -= l * l * d[k];
        }
        if !(s > threshold) {
            return false;
        }
        d[i] = s;
    }
    true
}

/// Smallest eigenvalue of the symmetric part of a 2×2 matrix, in closed form.
pub fn sym2_lambda_min(m: &Matrix2<f64>) -> f64 {
    let p = m[(0, 0)];
    let r = m[(1, 1)];
    let q = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (p + r);
    let half = 0.5 * (p - r);
    mean - half.hypot(q)
}
