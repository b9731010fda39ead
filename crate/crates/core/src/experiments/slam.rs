//! Relative-pose covariance of pose pairs taken from a solved pose graph,
//! compared across methods against Monte-Carlo.
//!
//! The Monte-Carlo reference draws the pair from its extracted joint
//! belief and forms `T_i^-1 T_j`. Every method is scored against the twist
//! second moment of those samples by default. With
//! `ssc-reference: coordinate-mc` the coordinate baseline is instead scored
//! against the `(x, y, theta)` second moment of the same samples.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Deserialize;

use super::csv::{float, Table};
use super::{all_methods, check_file, check_methods, derive_seed, usage, ExperimentError, Method};
use crate::belief::{between, between_ignoring_correlation, PoseKey, PosePairBelief};
use crate::graph::{grid_world, parse_graph, solve, to_g2o, GridWorldConfig, Marginals, PoseGraph};
use crate::lie::{wrap_angle, LieGroup, Se2, Twist};
use crate::mc::{cov_error, mc_relative_cov, mc_second_moment, normalized_cov_error};
use crate::ssc::{tail_to_tail, SscBelief, SscPose};

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SscReference {
    #[default]
    LieMc,
    CoordinateMc,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SlamRelposeParams {
    /// g2o/TORO file. A synthetic grid world is generated when absent.
    pub graph: Option<PathBuf>,
    pub grid_world: GridWorldConfig,
    pub offsets: Vec<u64>,
    pub pairs_per_offset: usize,
    pub samples: usize,
    pub methods: Vec<Method>,
    pub ssc_reference: SscReference,
}

impl Default for SlamRelposeParams {
    fn default() -> Self {
        Self {
            graph: None,
            grid_world: GridWorldConfig::default(),
            offsets: vec![10, 50, 100],
            pairs_per_offset: 200,
            samples: 1000,
            methods: all_methods(),
            ssc_reference: SscReference::LieMc,
        }
    }
}

impl SlamRelposeParams {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if let Some(p) = &self.graph {
            check_file("slam-relpose.graph", p)?;
        }
        if self.offsets.is_empty() || self.offsets.contains(&0) {
            return Err(usage("slam-relpose.offsets must be nonempty and positive"));
        }
        if self.pairs_per_offset == 0 {
            return Err(usage("slam-relpose.pairs-per-offset must be positive"));
        }
        if self.samples < 2 {
            return Err(usage("slam-relpose.samples must be at least 2"));
        }
        if self.graph.is_none() && self.grid_world.poses < 2 {
            return Err(usage("slam-relpose.grid-world.poses must be at least 2"));
        }
        check_methods(&self.methods)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlamRow {
    pub offset: u64,
    pub i: PoseKey,
    pub j: PoseKey,
    pub method: Method,
    pub cov_error: f64,
    pub normalized_cov_error: f64,
    /// Correlation coefficient between the two poses per channel.
    pub corr: [f64; 3],
    pub ok: bool,
}

/// Loads the configured graph, or generates the grid world and parses its
/// g2o text.
pub(crate) fn input_graph(graph: &Option<PathBuf>, grid: &GridWorldConfig) -> Result<PoseGraph, ExperimentError> {
    match graph {
        Some(p) => Ok(crate::graph::load_graph(p)?),
        None => Ok(parse_graph(&to_g2o(&grid_world(grid).0))?),
    }
}

/// Up to `cap` pairs `(i, i + offset)`, evenly spread over the graph.
fn select_pairs(keys: &BTreeSet<PoseKey>, offset: u64, cap: usize) -> Vec<(PoseKey, PoseKey)> {
    let all: Vec<(PoseKey, PoseKey)> = keys
        .iter()
        .filter(|&&k| keys.contains(&(k + offset)))
        .map(|&k| (k, k + offset))
        .collect();
    if all.len() <= cap {
        return all;
    }
    (0..cap).map(|s| all[s * all.len() / cap]).collect()
}

fn correlation(pair: &PosePairBelief<Se2>) -> [f64; 3] {
    let (s1, s2, x) = (pair.sigma1(), pair.sigma2(), pair.cross());
    let mut c = [0.0; 3];
    for (k, v) in c.iter_mut().enumerate() {
        let d = (s1[(k, k)] * s2[(k, k)]).sqrt();
        *v = if d > 0.0 { x[(k, k)] / d } else { 0.0 };
    }
    c
}

/// `(x, y, theta)` covariance of the relative pose from the coordinate
/// marginal, through the baseline's tail-to-tail operation.
fn ssc_relative_cov(m: &Marginals, i: PoseKey, j: PoseKey) -> Result<DMatrix<f64>, ExperimentError> {
    let cp = m.coordinate_pair(i, j)?;
    let idx = [0usize, 1, 5];
    let mut cov = DMatrix::zeros(12, 12);
    for a in 0..6 {
        for b in 0..6 {
            cov[(idx[a % 3] + 6 * (a / 3), idx[b % 3] + 6 * (b / 3))] = cp.cov[(a, b)];
        }
    }
    let belief = SscBelief::new(
        vec![
            SscPose::planar(cp.first[0], cp.first[1], cp.first[2]),
            SscPose::planar(cp.second[0], cp.second[1], cp.second[2]),
        ],
        cov,
    )?;
    let out = tail_to_tail(&belief)?;
    Ok(DMatrix::from_fn(3, 3, |r, c| out.cov()[(idx[r], idx[c])]))
}

/// Second moment of `(x, y, theta)` of `T_i^-1 T_j` about its mean value.
fn mc_coordinate_cov(pair: &PosePairBelief<Se2>, samples: usize, seed: u64) -> Result<DMatrix<f64>, ExperimentError> {
    let joint = pair.to_joint([0, 1])?;
    let c = pair.first().inverse().compose(pair.second());
    let center = [c.x(), c.y(), c.theta()];
    Ok(mc_second_moment(&joint, samples, seed, |p| {
        let r = p[0].inverse().compose(&p[1]);
        Twist::from_slice(&[r.x() - center[0], r.y() - center[1], wrap_angle(r.theta() - center[2])])
    })?)
}

fn pair_rows(
    m: &Marginals,
    params: &SlamRelposeParams,
    offset: u64,
    i: PoseKey,
    j: PoseKey,
    seed: u64,
) -> Result<Vec<SlamRow>, ExperimentError> {
    let pair = m.pair(i, j)?;
    let corr = correlation(&pair);
    let lie_mc = mc_relative_cov(&pair, params.samples, seed)?;
    let mut rows = Vec::new();
    for &method in &params.methods {
        let (cov, reference) = match method {
            Method::LieCorrelated => (between(&pair)?.into_parts().1, lie_mc.clone()),
            Method::LieIndependent => (between_ignoring_correlation(&pair).into_parts().1, lie_mc.clone()),
            Method::Ssc => {
                let reference = match params.ssc_reference {
                    SscReference::LieMc => lie_mc.clone(),
                    // Same seed, so the same relative-pose samples.
                    SscReference::CoordinateMc => mc_coordinate_cov(&pair, params.samples, seed)?,
                };
                (ssc_relative_cov(m, i, j)?, reference)
            }
        };
        rows.push(SlamRow {
            offset,
            i,
            j,
            method,
            cov_error: cov_error(&cov, &reference)?,
            normalized_cov_error: normalized_cov_error(&cov, &reference)?,
            corr,
            ok: true,
        });
    }
    Ok(rows)
}

/// Solves the graph and scores every selected pair. Pairs that fail are
/// kept as rows with `ok == false` and NaN errors.
pub fn run_slam_relpose(params: &SlamRelposeParams, seed: u64) -> Result<Vec<SlamRow>, ExperimentError> {
    params.validate()?;
    let graph = input_graph(&params.graph, &params.grid_world)?;
    let (solved, report) = solve(&graph)?;
    log::info!(
        "solved {} vertices / {} edges in {} iterations, chi2 {:.6e} -> {:.6e}",
        solved.vertex_count(),
        solved.edge_count(),
        report.iterations,
        report.initial_chi2,
        report.final_chi2
    );
    let marginals = Marginals::new(&solved)?;
    let keys: BTreeSet<PoseKey> = solved.vertices().keys().copied().collect();
    let mut rows = Vec::new();
    for &offset in &params.offsets {
        let pairs = select_pairs(&keys, offset, params.pairs_per_offset);
        log::info!("offset {offset}: {} pairs", pairs.len());
        let per_pair: Vec<Vec<SlamRow>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                pair_rows(&marginals, params, offset, i, j, derive_seed(seed, offset, i)).unwrap_or_else(|e| {
                    log::warn!("pair ({i}, {j}) failed: {e}");
                    params
                        .methods
                        .iter()
                        .map(|&method| SlamRow {
                            offset,
                            i,
                            j,
                            method,
                            cov_error: f64::NAN,
                            normalized_cov_error: f64::NAN,
                            corr: [f64::NAN; 3],
                            ok: false,
                        })
                        .collect()
                })
            })
            .collect();
        rows.extend(per_pair.into_iter().flatten());
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    /// `None` aggregates every offset.
    pub offset: Option<u64>,
    pub method: Method,
    pub count: usize,
    pub mean_cov_error: f64,
    pub stderr_cov_error: f64,
    pub std_cov_error: f64,
    pub mean_normalized: f64,
    pub stderr_normalized: f64,
    pub std_normalized: f64,
}

fn stats(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std / n.sqrt(), std)
}

/// Mean, standard error and standard deviation per method, per offset and
/// over all offsets. Failed pairs are left out.
pub fn summarize(rows: &[SlamRow]) -> Vec<SummaryRow> {
    let offsets: BTreeSet<u64> = rows.iter().map(|r| r.offset).collect();
    let methods: BTreeSet<Method> = rows.iter().map(|r| r.method).collect();
    let groups = offsets.iter().map(|&o| Some(o)).chain(std::iter::once(None));
    let mut out = Vec::new();
    for offset in groups {
        for &method in &methods {
            let sel: Vec<&SlamRow> = rows
                .iter()
                .filter(|r| r.ok && r.method == method && offset.is_none_or(|o| r.offset == o))
                .collect();
            let e: Vec<f64> = sel.iter().map(|r| r.cov_error).collect();
            let ne: Vec<f64> = sel.iter().map(|r| r.normalized_cov_error).collect();
            let (m, se, sd) = stats(&e);
            let (nm, nse, nsd) = stats(&ne);
            out.push(SummaryRow {
                offset,
                method,
                count: sel.len(),
                mean_cov_error: m,
                stderr_cov_error: se,
                std_cov_error: sd,
                mean_normalized: nm,
                stderr_normalized: nse,
                std_normalized: nsd,
            });
        }
    }
    out
}

pub fn write_slam_relpose(dir: &Path, rows: &[SlamRow]) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut t = Table::new(&[
        "offset",
        "i",
        "j",
        "method",
        "cov_error",
        "normalized_cov_error",
        "corr_coeff_x",
        "corr_coeff_y",
        "corr_coeff_theta",
        "status",
    ]);
    for r in rows {
        t.row(&[
            r.offset.to_string(),
            r.i.to_string(),
            r.j.to_string(),
            r.method.name().to_string(),
            float(r.cov_error),
            float(r.normalized_cov_error),
            float(r.corr[0]),
            float(r.corr[1]),
            float(r.corr[2]),
            if r.ok { "ok" } else { "error" }.to_string(),
        ]);
    }
    let mut s = Table::new(&[
        "offset",
        "method",
        "pairs",
        "mean_cov_error",
        "stderr_cov_error",
        "std_cov_error",
        "mean_normalized_cov_error",
        "stderr_normalized_cov_error",
        "std_normalized_cov_error",
    ]);
    for r in summarize(rows) {
        s.row(&[
            r.offset.map_or_else(|| "all".to_string(), |o| o.to_string()),
            r.method.name().to_string(),
            r.count.to_string(),
            float(r.mean_cov_error),
            float(r.stderr_cov_error),
            float(r.std_cov_error),
            float(r.mean_normalized),
            float(r.stderr_normalized),
            float(r.std_normalized),
        ]);
    }
    Ok(vec![
        t.write(dir, "slam_relpose.csv")?,
        s.write(dir, "slam_relpose_summary.csv")?,
    ])
}
