//! Relative pose of two correlated poses under a growing noise scale.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use super::csv::{float, Table};
use super::{check_positive, derive_seed, usage, ExperimentError, Method};
use crate::belief::{between, between_ignoring_correlation, PosePairBelief};
use crate::lie::{LieGroup, Se3};
use crate::mc::{cov_error, mc_relative_cov};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct RelposeParams {
    pub alphas: Vec<f64>,
    pub samples: usize,
    /// Row-major homogeneous matrices of the two mean poses.
    pub first: [f64; 16],
    pub second: [f64; 16],
    /// Diagonals of the marginal and cross covariances at unit scale.
    pub sigma_first: [f64; 6],
    pub sigma_second: [f64; 6],
    pub sigma_cross: [f64; 6],
}

// As printed, not 1/sqrt(2).
#[allow(clippy::approx_constant)]
const C45: f64 = 0.707107;

impl Default for RelposeParams {
    fn default() -> Self {
        Self {
            alphas: vec![0.5, 1.0, 2.0, 4.0],
            samples: 10_000,
            first: [
                C45, -C45, 0.0, 3.0, //
                C45, C45, 0.0, 3.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
            second: [
                C45, -C45, 0.0, 4.5, //
                C45, C45, 0.0, 4.5, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
            sigma_first: [0.005, 0.005, 1e-5, 1e-5, 1e-5, 0.006],
            sigma_second: [0.005, 0.005, 1e-5, 1e-5, 1e-5, 0.006],
            sigma_cross: [0.0005, 0.0005, 0.0, 0.0, 0.0, 0.005],
        }
    }
}

impl RelposeParams {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.alphas.is_empty() {
            return Err(usage("relpose-alpha-sweep.alphas must not be empty"));
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(usage("relpose-alpha-sweep.alphas must be nonnegative"));
        }
        if self.samples < 2 {
            return Err(usage("relpose-alpha-sweep.samples must be at least 2"));
        }
        for v in self.sigma_first.iter().chain(&self.sigma_second) {
            if *v < 0.0 {
                return Err(usage("marginal variances must be nonnegative"));
            }
        }
        check_positive("relpose-alpha-sweep.samples", self.samples as f64)?;
        self.pair(1.0).map(|_| ())
    }

    /// The pair belief at noise scale `alpha`.
    pub fn pair(&self, alpha: f64) -> Result<PosePairBelief<Se3>, ExperimentError> {
        let pose = |m: &[f64; 16]| {
            Se3::from_matrix(&DMatrix::from_row_slice(4, 4, m)).map_err(|e| usage(format!("mean pose: {e}")))
        };
        let d = |v: &[f64; 6]| DMatrix::from_diagonal(&DVector::from_row_slice(v)) * alpha;
        PosePairBelief::from_blocks(
            pose(&self.first)?,
            pose(&self.second)?,
            &d(&self.sigma_first),
            &d(&self.sigma_second),
            &d(&self.sigma_cross),
        )
        .map_err(|e| usage(format!("pair covariance: {e}")))
    }
}

/// The default two-pose setup at noise scale `alpha`.
pub fn reference_pair(alpha: f64) -> PosePairBelief<Se3> {
    RelposeParams::default().pair(alpha).expect("default setup is valid")
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelposeRow {
    pub alpha: f64,
    pub method: Method,
    pub cov_error: f64,
}

/// Error of the correlation-aware and correlation-ignoring relative-pose
/// covariances against Monte-Carlo, per alpha.
pub fn run_relpose_alpha_sweep(params: &RelposeParams, seed: u64) -> Result<Vec<RelposeRow>, ExperimentError> {
    params.validate()?;
    let mut rows = Vec::new();
    for (i, &alpha) in params.alphas.iter().enumerate() {
        let pair = params.pair(alpha)?;
        let mc = mc_relative_cov(&pair, params.samples, derive_seed(seed, 2, i as u64))?;
        let correlated = between(&pair)?;
        let ignoring = between_ignoring_correlation(&pair);
        rows.push(RelposeRow {
            alpha,
            method: Method::LieCorrelated,
            cov_error: cov_error(correlated.cov(), &mc)?,
        });
        rows.push(RelposeRow {
            alpha,
            method: Method::LieIndependent,
            cov_error: cov_error(ignoring.cov(), &mc)?,
        });
    }
    Ok(rows)
}

pub fn write_relpose_alpha_sweep(dir: &Path, rows: &[RelposeRow]) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut t = Table::new(&["alpha", "method", "cov_error"]);
    for r in rows {
        t.row(&[float(r.alpha), r.method.name().to_string(), float(r.cov_error)]);
    }
    Ok(vec![t.write(dir, "relpose_alpha_sweep.csv")?])
}
