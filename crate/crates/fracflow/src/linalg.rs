//! Sparse matrix assembly and the direct linear solver backing every
//! Newton step. Systems stay below ~10⁵ unknowns, so a sparse LU
//! factorization per solve is the simplest robust choice.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{FracflowError, Result};

/// Row-major sparse matrix with sorted, deduplicated columns per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulating COO builder; duplicate entries are summed on `build`.
#[derive(Debug, Clone)]
pub struct SparseBuilder {
    n_rows: usize,
    n_cols: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl SparseBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        SparseBuilder { n_rows, n_cols, triplets: Vec::new() }
    }

    pub fn square(n: usize) -> Self {
        Self::new(n, n)
    }

    pub fn add(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.triplets.push((row, col, val));
    }

    pub fn build(mut self) -> SparseMatrix {
        self.triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut cols = Vec::with_capacity(self.triplets.len());
        let mut vals = Vec::with_capacity(self.triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { n_rows: self.n_rows, n_cols: self.n_cols, row_ptr, cols, vals }
    }
}

impl SparseMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.cols[lo..hi].iter().copied().zip(self.vals[lo..hi].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.cols[lo..hi].binary_search(&c) {
            Ok(pos) => self.vals[lo + pos],
            Err(_) => 0.0,
        }
    }

    /// Sparsity pattern as (row_ptr, cols); used by structural tests.
    pub fn pattern(&self) -> (&[usize], &[usize]) {
        (&self.row_ptr, &self.cols)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for r in 0..self.n_rows {
            let mut acc = 0.0;
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        y
    }

    /// Extract the square submatrix with the given (sorted, unique) global
    /// indices on both rows and columns, renumbered to 0..len.
    pub fn extract_block(&self, indices: &[usize]) -> SparseMatrix {
        let mut lookup = vec![usize::MAX; self.n_cols];
        for (local, &g) in indices.iter().enumerate() {
            lookup[g] = local;
        }
        let mut builder = SparseBuilder::square(indices.len());
        for (local_r, &g) in indices.iter().enumerate() {
            for (c, v) in self.row(g) {
                if lookup[c] != usize::MAX {
                    builder.add(local_r, lookup[c], v);
                }
            }
        }
        builder.build()
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..self.n_rows)
            .flat_map(|r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &triplets)
            .map_err(|e| FracflowError::LinearSolve(format!("matrix construction: {e:?}")))
    }

    /// Solve `A x = b` by sparse LU. Fails on structurally or numerically
    /// singular systems, or when the solution contains non-finite values.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        DirectSolver::new().solve(self, b)
    }
}

/// Sparse LU with a cached symbolic factorization: repeated solves on the
/// same sparsity pattern (Newton iterations, timesteps on a fixed grid)
/// only pay the numeric factorization.
#[derive(Default)]
pub struct DirectSolver {
    cached: Option<CachedSymbolic>,
}

struct CachedSymbolic {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    symbolic: SymbolicLu<usize>,
}

impl DirectSolver {
    pub fn new() -> Self {
        DirectSolver::default()
    }

    pub fn solve(&mut self, matrix: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(matrix.n_rows, matrix.n_cols, "solve requires a square system");
        assert_eq!(b.len(), matrix.n_rows);
        let mat = matrix.to_faer()?;

        let reusable = self
            .cached
            .as_ref()
            .is_some_and(|c| c.row_ptr == matrix.row_ptr && c.cols == matrix.cols);
        if !reusable {
            let symbolic = SymbolicLu::try_new(mat.symbolic())
                .map_err(|e| FracflowError::LinearSolve(format!("symbolic analysis: {e:?}")))?;
            self.cached = Some(CachedSymbolic {
                row_ptr: matrix.row_ptr.clone(),
                cols: matrix.cols.clone(),
                symbolic,
            });
        }
        let symbolic = &self.cached.as_ref().expect("cache populated above").symbolic;
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), mat.as_ref())
            .map_err(|e| FracflowError::LinearSolve(format!("LU factorization: {e:?}")))?;

        let rhs = Mat::<f64>::from_fn(matrix.n_rows, 1, |i, _| b[i]);
        let x = lu.solve(&rhs);
        let out: Vec<f64> = (0..matrix.n_rows).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(FracflowError::LinearSolve("non-finite solution entries".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_sums_duplicates_and_sorts() {
        let mut b = SparseBuilder::square(3);
        b.add(1, 2, 1.0);
        b.add(0, 0, 2.0);
        b.add(1, 2, 3.0);
        b.add(1, 0, -1.0);
        let m = b.build();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), 4.0);
        assert_eq!(m.get(0, 0), 2.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.get(2, 2), 0.0);
    }

    #[test]
    fn solve_small_system() {
        let mut b = SparseBuilder::square(3);
        b.add(0, 0, 4.0);
        b.add(0, 1, 1.0);
        b.add(1, 0, 1.5);
        b.add(1, 1, 5.0);
        b.add(2, 1, 0.5);
        b.add(2, 2, 6.0);
        let m = b.build();
        let x = m.solve(&[1.0, 2.0, 3.0]).unwrap();
        let r = m.matvec(&x);
        assert!((r[0] - 1.0).abs() < 1e-12);
        assert!((r[1] - 2.0).abs() < 1e-12);
        assert!((r[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_reports_singularity() {
        let mut b = SparseBuilder::square(2);
        b.add(0, 0, 1.0);
        b.add(0, 1, 1.0);
        b.add(1, 0, 1.0);
        b.add(1, 1, 1.0);
        let m = b.build();
        assert!(m.solve(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn extract_block_renumbers() {
        let mut b = SparseBuilder::square(4);
        for i in 0..4 {
            b.add(i, i, 10.0 + i as f64);
        }
        b.add(2, 3, -1.0);
        b.add(3, 1, 7.0);
        let m = b.build();
        let sub = m.extract_block(&[2, 3]);
        assert_eq!(sub.n_rows(), 2);
        assert_eq!(sub.get(0, 0), 12.0);
        assert_eq!(sub.get(0, 1), -1.0);
        assert_eq!(sub.get(1, 1), 13.0);
        assert_eq!(sub.get(1, 0), 0.0); // column 1 is outside the block
    }
}
