//! Compressed sparse row storage.
//!
//! Operators assembled on the same space share one [`Pattern`], so linear
//! combinations reduce to combining value arrays.

use std::sync::Arc;

/// Sparsity pattern in CSR layout with sorted column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl Pattern {
    /// Builds a pattern from per-row column lists (duplicates allowed).
    pub fn from_rows(ncols: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for mut r in rows.into_iter() {
            r.sort_unstable();
            r.dedup();
            debug_assert!(r.last().map_or(true, |&c| c < ncols));
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: row_ptr.len() - 1,
            ncols,
            row_ptr,
            col_idx,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage position of entry `(i, j)`, if structurally present.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|p| start + p)
    }

    /// Pattern of the transpose together with the map from transposed
    /// storage positions back to positions in `self`.
    pub fn transpose(&self) -> (Pattern, Vec<usize>) {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut map = vec![0; self.nnz()];
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                col_idx[next[j]] = i;
                map[next[j]] = p;
                next[j] += 1;
            }
        }
        (
            Pattern {
                nrows: self.ncols,
                ncols: self.nrows,
                row_ptr,
                col_idx,
            },
            map,
        )
    }
}

/// Sparse real matrix on a shared pattern.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn from_parts(pattern: Arc<Pattern>, values: Vec<f64>) -> Self {
        assert_eq!(pattern.nnz(), values.len());
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Adds `v` at `(i, j)`; panics if the entry is not in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self
            .pattern
            .find(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[p] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.mul_vec_add(1.0, x, &mut y);
        y
    }

    /// `y += a * A x`.
    pub fn mul_vec_add(&self, a: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols());
        let rp = &self.pattern.row_ptr;
        let ci = &self.pattern.col_idx;
        for i in 0..self.nrows() {
            let mut s = 0.0;
            for p in rp[i]..rp[i + 1] {
                s += self.values[p] * x[ci[p]];
            }
            y[i] += a * s;
        }
    }

    /// `y += a * A^T x`.
    pub fn mul_transpose_vec_add(&self, a: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows());
        let rp = &self.pattern.row_ptr;
        let ci = &self.pattern.col_idx;
        for i in 0..self.nrows() {
            let xi = a * x[i];
            for p in rp[i]..rp[i + 1] {
                y[ci[p]] += self.values[p] * xi;
            }
        }
    }

    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols()];
        self.mul_transpose_vec_add(1.0, x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// `self += a * other`; both operators must share the pattern.
    pub fn axpy(&mut self, a: f64, other: &SparseOperator) {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || *self.pattern == *other.pattern,
            "axpy requires identical patterns"
        );
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += a * w;
        }
    }

    pub fn scaled(&self, a: f64) -> SparseOperator {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// Transpose; the result lives on the transposed pattern.
    pub fn transpose(&self) -> SparseOperator {
        let (pt, map) = self.pattern.transpose();
        let values = map.iter().map(|&p| self.values[p]).collect();
        SparseOperator {
            pattern: Arc::new(pt),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|` over stored entries (square operators).
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.nrows() {
            for p in self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1] {
                let j = self.pattern.col_idx[p];
                m = m.max((self.values[p] - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols()]; self.nrows()];
        for (i, row) in d.iter_mut().enumerate() {
            for p in self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1] {
                row[self.pattern.col_idx[p]] += self.values[p];
            }
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
