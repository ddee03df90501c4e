//! Compressed sparse symmetric matrices.
//!
//! Both triangles of the matrix are stored explicitly (CSR with sorted
//! column indices per row), which keeps matrix-vector products a plain
//! row-parallel loop. The structural pattern lives in a shared
//! [`MatrixPattern`] behind an `Arc` so the mass, damping, and stiffness
//! matrices of one mesh can be combined entry-wise without index juggling.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::{Error, Result};

/// Below this dimension matrix-vector products stay sequential; the rayon
/// dispatch overhead outweighs the work on small systems. Row results are
/// computed independently either way, so the product is bitwise identical
/// at every thread count.
const PARALLEL_MIN_DIM: usize = 2048;

/// Structural nonzero pattern of a symmetric matrix in CSR form.
///
/// The diagonal is always present; off-diagonal entries appear in both
/// rows. Column indices are strictly increasing within each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixPattern {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl MatrixPattern {
    /// Builds the pattern holding the diagonal plus every `(i, j)` pair
    /// (and its transpose) yielded by `pairs`.
    pub fn build(dim: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> MatrixPattern {
        let mut adj: Vec<Vec<usize>> = (0..dim).map(|i| vec![i]).collect();
        for (i, j) in pairs {
            debug_assert!(i < dim && j < dim);
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        MatrixPattern {
            dim,
            row_ptr,
            col_idx,
        }
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored entries (both triangles plus the diagonal).
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Position of entry `(i, j)` in the value array, if stored.
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .binary_search(&j)
            .ok()
            .map(|off| lo + off)
    }
}

/// A symmetric sparse matrix: shared pattern plus a value per stored entry.
#[derive(Debug, Clone)]
pub struct SparseSym {
    pattern: Arc<MatrixPattern>,
    values: Vec<f64>,
}

impl SparseSym {
    /// All-zero matrix over `pattern`.
    pub fn zeros(pattern: Arc<MatrixPattern>) -> SparseSym {
        let n = pattern.nnz();
        SparseSym {
            pattern,
            values: vec![0.0; n],
        }
    }

    /// Builds a matrix from dense rows, keeping nonzero entries plus the
    /// full diagonal. The input must be square and symmetric.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<SparseSym> {
        let dim = rows.len();
        let mut scale = 0.0f64;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries in a {dim}-dimensional matrix",
                    row.len()
                )));
            }
            for v in row {
                scale = scale.max(v.abs());
            }
        }
        let mut pairs = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        rows[i][j], rows[j][i]
                    )));
                }
                if rows[i][j] != 0.0 {
                    pairs.push((i, j));
                }
            }
        }
        let pattern = Arc::new(MatrixPattern::build(dim, pairs));
        let mut m = SparseSym::zeros(pattern);
        for i in 0..dim {
            for j in 0..dim {
                if rows[i][j] != 0.0 {
                    let k = m.pattern.index_of(i, j).expect("pair just inserted");
                    m.values[k] = rows[i][j];
                }
            }
        }
        Ok(m)
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.pattern.dim
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    /// The shared structural pattern.
    pub fn pattern(&self) -> &Arc<MatrixPattern> {
        &self.pattern
    }

    /// Whether `self` and `other` share one structural pattern.
    pub fn same_pattern(&self, other: &SparseSym) -> bool {
        Arc::ptr_eq(&self.pattern, &other.pattern) || *self.pattern == *other.pattern
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern
            .index_of(i, j)
            .map_or(0.0, |k| self.values[k])
    }

    /// Adds `v` at a precomputed value-array position.
    pub(crate) fn add_at_index(&mut self, k: usize, v: f64) {
        self.values[k] += v;
    }

    /// The stored values, in pattern order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Diagonal entries as a vector.
    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// Largest absolute stored entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Row sums (equals `A·1`).
    pub fn row_sums(&self) -> Vec<f64> {
        let ones = vec![1.0; self.dim()];
        self.matvec(&ones)
    }

    /// `y = A·x`. Parallel over rows on large systems; each row is reduced
    /// sequentially in storage order, so the result does not depend on the
    /// thread count.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &*self.pattern;
        assert_eq!(x.len(), p.dim, "matvec input dimension");
        assert_eq!(y.len(), p.dim, "matvec output dimension");
        let row_product = |i: usize| {
            let mut acc = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[k] * x[p.col_idx[k]];
            }
            acc
        };
        if p.dim >= PARALLEL_MIN_DIM {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = row_product(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row_product(i);
            }
        }
    }

    /// `A·x` as a fresh vector.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    /// `self += coeff · other`; both matrices must share a pattern.
    pub fn add_scaled(&mut self, coeff: f64, other: &SparseSym) -> Result<()> {
        if !self.same_pattern(other) {
            return Err(Error::DimensionMismatch(
                "matrices with different patterns cannot be combined entry-wise".into(),
            ));
        }
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += coeff * o;
        }
        Ok(())
    }

    /// Multiplies every entry by `s`.
    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// `Σ coeffᵢ · Aᵢ` over matrices sharing one pattern. Terms accumulate
    /// in argument order, so the result is deterministic.
    pub fn linear_combination(terms: &[(f64, &SparseSym)]) -> Result<SparseSym> {
        let (first_coeff, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
        let mut out = SparseSym {
            pattern: Arc::clone(&first.pattern),
            values: first.values.iter().map(|v| first_coeff * v).collect(),
        };
        for (coeff, m) in &terms[1..] {
            out.add_scaled(*coeff, m)?;
        }
        Ok(out)
    }

    /// Writes the matrix as `i j value` triplet lines (row-major, both
    /// triangles) for debugging.
    pub fn write_triplets<W: Write>(&self, w: &mut W) -> Result<()> {
        let p = &*self.pattern;
        for i in 0..p.dim {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                writeln!(w, "{} {} {}", i, p.col_idx[k], self.values[k])?;
            }
        }
        Ok(())
    }

    /// Dense copy, for tests and debugging on small systems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let p = &*self.pattern;
        let mut rows = vec![vec![0.0; p.dim]; p.dim];
        for i in 0..p.dim {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                rows[i][p.col_idx[k]] = self.values[k];
            }
        }
        rows
    }
}
