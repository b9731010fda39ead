//! Planar pose graphs: g2o/TORO text ingestion, Gauss-Newton solving on
//! SE(2), and marginal covariance recovery in twist coordinates.

mod linear;
mod marginals;
mod parse;
mod solve;
mod synth;

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::Matrix3;
use thiserror::Error;

use crate::belief::{BeliefError, PoseKey};
use crate::lie::{LieError, Se2};

pub use linear::SolverBackend;
pub use marginals::{extract_pair_belief, information_matrix, CoordinatePair, Marginals};
pub use parse::{load_graph, parse_graph, to_g2o};
pub use solve::{edge_residual, solve, solve_with, SolveOptions, SolveReport, CHI2_FLOOR};
pub use synth::{grid_world, GridWorldConfig};

/// Information weight of the gauge prior on each channel of the anchor.
pub const GAUGE_PRIOR: f64 = 1e8;
/// Central-difference step for edge Jacobians.
pub const DEFAULT_JACOBIAN_STEP: f64 = 1e-6;
/// Below this many variables the normal equations are factored densely.
pub const DENSE_LIMIT: usize = 600;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge {from} -> {to} references missing vertex {missing}")]
    MissingVertex {
        from: PoseKey,
        to: PoseKey,
        missing: PoseKey,
    },
    #[error("vertex {0} defined twice")]
    DuplicateVertex(PoseKey),
    #[error("edge {from} -> {to}: information matrix is not symmetric positive semi-definite")]
    BadInformation { from: PoseKey, to: PoseKey },
    #[error("graph has no vertices")]
    Empty,
    #[error("graph is not connected: vertex {0} is unreachable from the anchor")]
    Disconnected(PoseKey),
    #[error("normal equations are rank deficient: {0}")]
    RankDeficient(String),
    #[error("solver diverged: chi2 increased three iterations in a row (iteration {iteration})")]
    Divergence { iteration: usize },
    #[error("graph has not been solved")]
    NotSolved,
    #[error("vertex {0} not in graph")]
    UnknownVertex(PoseKey),
    #[error("pair query needs two distinct vertices, got {0} twice")]
    SameVertex(PoseKey),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub from: PoseKey,
    pub to: PoseKey,
    pub measurement: Se2,
    pub information: Matrix3<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PoseGraph {
    vertices: BTreeMap<PoseKey, Se2>,
    edges: Vec<Edge>,
    skipped_lines: usize,
    solved: bool,
}

impl PoseGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, key: PoseKey, pose: Se2) -> Result<(), GraphError> {
        if self.vertices.insert(key, pose).is_some() {
            return Err(GraphError::DuplicateVertex(key));
        }
        self.solved = false;
        Ok(())
    }

    /// Adds an edge. Endpoints are checked by [`PoseGraph::validate`].
    pub fn add_edge(&mut self, from: PoseKey, to: PoseKey, measurement: Se2, information: Matrix3<f64>) {
        self.edges.push(Edge {
            from,
            to,
            measurement,
            information,
        });
        self.solved = false;
    }

    pub fn vertices(&self) -> &BTreeMap<PoseKey, Se2> {
        &self.vertices
    }

    pub fn vertex(&self, key: PoseKey) -> Result<&Se2, GraphError> {
        self.vertices.get(&key).ok_or(GraphError::UnknownVertex(key))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Lines of unknown type ignored while parsing.
    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }

    pub fn is_solved(&self) -> bool {
        self.solved
    }

    /// Lowest key; carries the gauge prior.
    pub fn anchor(&self) -> Option<PoseKey> {
        self.vertices.keys().next().copied()
    }

    /// Checks endpoints and information matrices.
    pub fn validate(&self) -> Result<(), GraphError> {
        for e in &self.edges {
            for k in [e.from, e.to] {
                if !self.vertices.contains_key(&k) {
                    return Err(GraphError::MissingVertex {
                        from: e.from,
                        to: e.to,
                        missing: k,
                    });
                }
            }
            let info = &e.information;
            let asym = (info - info.transpose()).abs().max();
            let ok = info.iter().all(|v| v.is_finite())
                && asym <= 1e-9 * info.abs().max().max(1.0)
                && info.symmetric_eigenvalues().min() >= -1e-9 * info.abs().max().max(1.0);
            if !ok {
                return Err(GraphError::BadInformation { from: e.from, to: e.to });
            }
        }
        Ok(())
    }

    /// Errors unless every vertex is reachable from the anchor.
    pub fn check_connected(&self) -> Result<(), GraphError> {
        let anchor = self.anchor().ok_or(GraphError::Empty)?;
        let mut adj: HashMap<PoseKey, Vec<PoseKey>> = HashMap::new();
        for e in &self.edges {
            adj.entry(e.from).or_default().push(e.to);
            adj.entry(e.to).or_default().push(e.from);
        }
        let mut seen = std::collections::HashSet::from([anchor]);
        let mut queue = VecDeque::from([anchor]);
        while let Some(k) = queue.pop_front() {
            for &n in adj.get(&k).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        match self.vertices.keys().find(|k| !seen.contains(k)) {
            Some(&k) => Err(GraphError::Disconnected(k)),
            None => Ok(()),
        }
    }

    /// Key -> dense variable block index, in key order.
    pub(crate) fn index_map(&self) -> HashMap<PoseKey, usize> {
        self.vertices.keys().enumerate().map(|(i, &k)| (k, i)).collect()
    }

    /// Rigidly moves every vertex: `T <- g * T`.
    pub fn transformed(&self, g: &Se2) -> Self {
        use crate::lie::LieGroup;
        let mut out = self.clone();
        for v in out.vertices.values_mut() {
            *v = g.compose(v);
        }
        out
    }

    pub(crate) fn set_skipped(&mut self, n: usize) {
        self.skipped_lines = n;
    }

    pub(crate) fn mark_solved(&mut self) {
        self.solved = true;
    }

    pub(crate) fn vertices_mut(&mut self) -> &mut BTreeMap<PoseKey, Se2> {
        &mut self.vertices
    }
}
