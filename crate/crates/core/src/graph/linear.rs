//! Symmetric positive-definite solves for the normal equations.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::DMatrix;

use super::{GraphError, DENSE_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverBackend {
    /// Dense below [`DENSE_LIMIT`] variables, sparse otherwise.
    Auto,
    Dense,
    Sparse,
}

/// Factorization of a symmetric positive-definite matrix given as
/// (row, col, value) triplets. Duplicates are summed.
pub(crate) enum Factor {
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Sparse(faer::sparse::linalg::solvers::Llt<usize, f64>),
}

impl Factor {
    pub fn new(n: usize, triplets: &[(usize, usize, f64)], backend: SolverBackend) -> Result<Self, GraphError> {
        let dense = match backend {
            SolverBackend::Auto => n < DENSE_LIMIT,
            SolverBackend::Dense => true,
            SolverBackend::Sparse => false,
        };
        if dense {
            nalgebra::Cholesky::new(assemble_dense(n, triplets))
                .map(Factor::Dense)
                .ok_or_else(|| GraphError::RankDeficient("dense Cholesky failed".into()))
        } else {
            let t: Vec<Triplet<usize, usize, f64>> = triplets.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
            let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t)
                .map_err(|e| GraphError::RankDeficient(format!("{e:?}")))?;
            m.sp_cholesky(Side::Lower)
                .map(Factor::Sparse)
                .map_err(|e| GraphError::RankDeficient(format!("sparse Cholesky failed: {e:?}")))
        }
    }

    /// `A^-1 B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Factor::Dense(c) => c.solve(b),
            Factor::Sparse(llt) => {
                let rhs = Mat::<f64>::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)]);
                let x = llt.solve(&rhs);
                DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| x[(i, j)])
            }
        }
    }
}

pub(crate) fn assemble_dense(n: usize, triplets: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for &(r, c, v) in triplets {
        a[(r, c)] += v;
    }
    a
}
