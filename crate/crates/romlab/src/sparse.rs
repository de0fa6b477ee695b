//! Minimal CSR storage for the symmetric FE matrices.
//!
//! The pipeline only ever multiplies these matrices (mat-vec, mat-dense and
//! quadratic forms); no sparse factorization is needed, so a small hand-rolled
//! CSR beats pulling in a full sparse-algebra dependency.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Sparse symmetric matrix in CSR form. Both triangles are stored explicitly,
/// which keeps products branch-free; symmetry is validated, not assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Builds a matrix from coordinate triplets. Entries are sorted into row
    /// -major order; duplicate coordinates are rejected so that stored values
    /// stay bit-identical to the input.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({r}, {c}) out of bounds for {n}x{n} matrix"
                )));
            }
            entries.push((r, c, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::InvalidArgument(format!(
                    "duplicate triplet at ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }

        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = entries.iter().map(|e| e.1).collect();
        let values = entries.iter().map(|e| e.2).collect();
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Dimension of the (square) matrix.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// Value at (row, col), zero if not stored.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.col_idx[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Checks `|a_ij - a_ji| <= rel_tol * max(|a_ij|, |a_ji|)` for every
    /// stored entry, including entries present on one side only.
    pub fn check_symmetric(&self, name: &str, rel_tol: f64) -> Result<()> {
        for (r, c, v) in self.triplets() {
            if c < r {
                continue;
            }
            let vt = self.get(c, r);
            let violation = (v - vt).abs();
            if violation > rel_tol * v.abs().max(vt.abs()) {
                return Err(Error::NotSymmetric {
                    name: name.to_string(),
                    row: r,
                    col: c,
                    violation,
                });
            }
        }
        // Entries stored strictly below the diagonal with no mirrored entry
        // above it are caught here.
        for (r, c, v) in self.triplets() {
            if c >= r {
                continue;
            }
            let vt = self.get(c, r);
            let violation = (v - vt).abs();
            if violation > rel_tol * v.abs().max(vt.abs()) {
                return Err(Error::NotSymmetric {
                    name: name.to_string(),
                    row: r,
                    col: c,
                    violation,
                });
            }
        }
        Ok(())
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n, "mul_vec dimension mismatch");
        let mut y = DVector::zeros(self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        y
    }

    /// B = A X for a dense X with matching row count.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n, "mul_dense dimension mismatch");
        let mut out = DMatrix::zeros(self.n, x.ncols());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.values[k];
                let c = self.col_idx[k];
                for j in 0..x.ncols() {
                    out[(r, j)] += v * x[(c, j)];
                }
            }
        }
        out
    }

    /// Quadratic form x' A y.
    pub fn quad_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.mul_vec(y).dot(x)
    }
}
