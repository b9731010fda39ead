use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix3};

use super::linear::{assemble_dense, Factor, SolverBackend};
use super::solve::linearize;
use super::{GraphError, PoseGraph, DEFAULT_JACOBIAN_STEP};
use crate::belief::{PoseKey, PosePairBelief};
use crate::lie::Se2;
use crate::linalg::symmetrize;

/// Dense information matrix `J^T W J` (gauge prior included) in twist
/// coordinates at the current estimate, variables in key order.
pub fn information_matrix(g: &PoseGraph, step: f64) -> Result<DMatrix<f64>, GraphError> {
    let anchor = g.anchor().ok_or(GraphError::Empty)?;
    let lin = linearize(g, g.vertex(anchor)?, step)?;
    Ok(assemble_dense(3 * g.vertex_count(), &lin.triplets))
}

/// Pair marginal in `(x, y, theta)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinatePair {
    pub first: [f64; 3],
    pub second: [f64; 3],
    pub cov: DMatrix<f64>,
}

/// Factorized information matrix of a solved graph, serving pair queries.
pub struct Marginals {
    index: HashMap<PoseKey, usize>,
    poses: Vec<Se2>,
    factor: Factor,
    n: usize,
}

impl Marginals {
    pub fn new(g: &PoseGraph) -> Result<Self, GraphError> {
        Self::with_options(g, DEFAULT_JACOBIAN_STEP, SolverBackend::Auto)
    }

    pub fn with_options(g: &PoseGraph, step: f64, backend: SolverBackend) -> Result<Self, GraphError> {
        if !g.is_solved() {
            return Err(GraphError::NotSolved);
        }
        let anchor = g.anchor().ok_or(GraphError::Empty)?;
        let lin = linearize(g, g.vertex(anchor)?, step)?;
        let n = 3 * g.vertex_count();
        Ok(Self {
            index: g.index_map(),
            poses: g.vertices().values().copied().collect(),
            factor: Factor::new(n, &lin.triplets, backend)?,
            n,
        })
    }

    fn slot(&self, k: PoseKey) -> Result<usize, GraphError> {
        self.index.get(&k).copied().ok_or(GraphError::UnknownVertex(k))
    }

    /// Joint `6 x 6` covariance of `(xi_i, xi_j)`, from six columns of the
    /// inverse information matrix.
    pub fn pair(&self, i: PoseKey, j: PoseKey) -> Result<PosePairBelief<Se2>, GraphError> {
        if i == j {
            return Err(GraphError::SameVertex(i));
        }
        let (a, b) = (self.slot(i)?, self.slot(j)?);
        let rows = [3 * a, 3 * a + 1, 3 * a + 2, 3 * b, 3 * b + 1, 3 * b + 2];
        let mut e = DMatrix::zeros(self.n, 6);
        for (c, &r) in rows.iter().enumerate() {
            e[(r, c)] = 1.0;
        }
        let x = self.factor.solve(&e);
        let cov = DMatrix::from_fn(6, 6, |r, c| x[(rows[r], c)]);
        Ok(PosePairBelief::new(self.poses[a], self.poses[b], symmetrize(&cov))?)
    }

    /// The same marginal expressed in `(x, y, theta)` coordinates.
    ///
    /// To first order `exp(xi) T` moves the position by
    /// `rho + phi * (-y, x)` and the heading by `phi`, so the coordinate
    /// covariance is `C Sigma C^T` with that linear map per pose.
    pub fn coordinate_pair(&self, i: PoseKey, j: PoseKey) -> Result<CoordinatePair, GraphError> {
        let pair = self.pair(i, j)?;
        let c = |t: &Se2| Matrix3::new(1.0, 0.0, -t.y(), 0.0, 1.0, t.x(), 0.0, 0.0, 1.0);
        let mut jac = DMatrix::zeros(6, 6);
        jac.view_mut((0, 0), (3, 3)).copy_from(&c(pair.first()));
        jac.view_mut((3, 3), (3, 3)).copy_from(&c(pair.second()));
        let coords = |t: &Se2| [t.x(), t.y(), t.theta()];
        Ok(CoordinatePair {
            first: coords(pair.first()),
            second: coords(pair.second()),
            cov: symmetrize(&(&jac * pair.cov() * jac.transpose())),
        })
    }
}

/// One-off pair extraction. Build a [`Marginals`] to serve many queries.
pub fn extract_pair_belief(g: &PoseGraph, i: PoseKey, j: PoseKey) -> Result<PosePairBelief<Se2>, GraphError> {
    Marginals::new(g)?.pair(i, j)
}
