//! Unscented-transform conversion from coordinate (Euler) beliefs to
//! Lie-algebra beliefs.
//!
//! Each pose block maps through `l_i(x) = log(f(x_i) * f(x_hat_i)^-1)`, which
//! is zero at the mean, and the output covariance is `sum_k W_k l(X_k) l(X_k)^T`
//! without subtracting the weighted mean of the residuals. That mean is
//! reported by [`ut_convert_with_diagnostics`].

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::belief::{BeliefError, JointPoseBelief, PoseKey};
use crate::lie::{LieError, LieGroup, Se3};
use crate::linalg::{cholesky_with_jitter, symmetrize};
use crate::ssc::{numerical_jacobian, ssc_to_pose, SscBelief, SscError, SscPose, JACOBIAN_STEP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvertError {
    #[error("covariance could not be factorized (pivot {pivot}, value {value:e})")]
    ConversionFailure { pivot: usize, value: f64 },
    #[error("sigma point {index} lands on a logarithm singularity")]
    SigmaPointSingularity { index: usize },
    #[error("invalid unscented-transform configuration: {0}")]
    InvalidConfig(String),
    #[error("empty belief")]
    Empty,
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Ssc(#[from] SscError),
}

/// Weighting scheme for the sigma points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UtMode {
    /// `W_0 = kappa / (m + kappa)`, `W_k = 1 / (2 (m + kappa))`.
    Standard,
    /// Scaled set with `lambda = alpha^2 (m + kappa) - m`. The covariance
    /// weight of the central point gains `1 - alpha^2 + beta`, which has no
    /// effect here since its residual is zero.
    Scaled { alpha: f64, beta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UtConfig {
    pub kappa: f64,
    pub mode: UtMode,
}

impl Default for UtConfig {
    /// `kappa = 0`: every weight is `1 / 2m` and the central point drops out.
    fn default() -> Self {
        Self {
            kappa: 0.0,
            mode: UtMode::Standard,
        }
    }
}

impl UtConfig {
    /// Spread `m + lambda` for input dimension `m`.
    fn spread(&self, m: usize) -> Result<f64, ConvertError> {
        let m = m as f64;
        let s = match self.mode {
            UtMode::Standard => m + self.kappa,
            UtMode::Scaled { alpha, .. } => {
                if !(alpha > 0.0) {
                    return Err(ConvertError::InvalidConfig(format!(
                        "alpha must be positive, got {alpha}"
                    )));
                }
                alpha * alpha * (m + self.kappa)
            }
        };
        if !(s > 0.0) || !s.is_finite() {
            return Err(ConvertError::InvalidConfig(format!(
                "m + kappa must be positive (m = {m}, kappa = {})",
                self.kappa
            )));
        }
        Ok(s)
    }

    /// Covariance weights for `2m + 1` points, central point first.
    pub fn weights(&self, m: usize) -> Result<Vec<f64>, ConvertError> {
        let s = self.spread(m)?;
        let mut w = vec![1.0 / (2.0 * s); 2 * m + 1];
        w[0] = 1.0 - m as f64 / s;
        Ok(w)
    }
}

/// Sigma points as columns: the mean, then `mean +- col_k(L)` with
/// `L L^T = (m + lambda) Sigma`.
pub fn sigma_points(mean: &DVector<f64>, cov: &DMatrix<f64>, cfg: &UtConfig) -> Result<DMatrix<f64>, ConvertError> {
    let m = mean.len();
    let s = cfg.spread(m)?;
    let l = cholesky_with_jitter(&(cov * s)).map_err(|e| ConvertError::ConversionFailure {
        pivot: e.pivot,
        value: e.value,
    })?;
    let mut pts = DMatrix::zeros(m, 2 * m + 1);
    pts.set_column(0, mean);
    for k in 0..m {
        let c = l.column(k);
        pts.set_column(1 + k, &(mean + c));
        pts.set_column(1 + m + k, &(mean - c));
    }
    Ok(pts)
}

/// Stacked `l(x)` for a coordinate vector of `n` poses.
fn residual(x: &[f64], center: &[f64], centers_inv: &[Se3]) -> Result<DVector<f64>, LieError> {
    let mut out = DVector::zeros(x.len());
    for (i, inv) in centers_inv.iter().enumerate() {
        // A block sitting exactly on its mean has zero residual; skip the
        // round trip so degenerate inputs convert exactly.
        if x[6 * i..6 * i + 6] == center[6 * i..6 * i + 6] {
            continue;
        }
        let p = SscPose::from_slice(&x[6 * i..6 * i + 6]).map_err(|e| LieError::InvalidElement(e.to_string()))?;
        let xi = ssc_to_pose(&p).compose(inv).log()?;
        out.rows_mut(6 * i, 6).copy_from(xi.as_vector());
    }
    Ok(out)
}

fn stacked_mean(b: &SscBelief) -> DVector<f64> {
    DVector::from_iterator(6 * b.len(), b.means().iter().flat_map(|p| p.to_array()))
}

fn default_keys(n: usize) -> Vec<PoseKey> {
    (0..n as PoseKey).collect()
}

#[derive(Clone, Debug)]
pub struct UtDiagnostics {
    /// `|| sum_k W_k l(X_k) ||`.
    pub residual_mean_norm: f64,
    pub sigma_point_count: usize,
}

/// Converts `b` to a Lie-algebra belief with keys `0..n`.
pub fn ut_convert(b: &SscBelief, cfg: &UtConfig) -> Result<JointPoseBelief<Se3>, ConvertError> {
    ut_convert_with_diagnostics(b, cfg).map(|(j, _)| j)
}

pub fn ut_convert_with_diagnostics(
    b: &SscBelief,
    cfg: &UtConfig,
) -> Result<(JointPoseBelief<Se3>, UtDiagnostics), ConvertError> {
    if b.is_empty() {
        return Err(ConvertError::Empty);
    }
    let means: Vec<Se3> = b.means().iter().map(ssc_to_pose).collect();
    let inv: Vec<Se3> = means.iter().map(|t| t.inverse()).collect();
    let mean = stacked_mean(b);
    let m = mean.len();
    let pts = sigma_points(&mean, b.cov(), cfg)?;
    let w = cfg.weights(m)?;

    let mut cov = DMatrix::zeros(m, m);
    let mut res_mean = DVector::zeros(m);
    for k in 0..pts.ncols() {
        let col: Vec<f64> = pts.column(k).iter().copied().collect();
        let l = residual(&col, mean.as_slice(), &inv).map_err(|_| ConvertError::SigmaPointSingularity { index: k })?;
        cov += &l * l.transpose() * w[k];
        res_mean += &l * w[k];
    }
    let joint = JointPoseBelief::new(default_keys(b.len()), means, symmetrize(&cov))?;
    Ok((
        joint,
        UtDiagnostics {
            residual_mean_norm: res_mean.norm(),
            sigma_point_count: pts.ncols(),
        },
    ))
}

/// First-order conversion: `J Sigma J^T` with `J` the Jacobian of `l` at the
/// mean, by central differences.
pub fn linearized_convert(b: &SscBelief) -> Result<JointPoseBelief<Se3>, ConvertError> {
    if b.is_empty() {
        return Err(ConvertError::Empty);
    }
    let means: Vec<Se3> = b.means().iter().map(ssc_to_pose).collect();
    let n = b.len();
    let mut jac = DMatrix::zeros(6 * n, 6 * n);
    for (i, p) in b.means().iter().enumerate() {
        let inv = means[i].inverse();
        let center = p.to_array();
        let f = |v: &[f64]| -> Result<[f64; 6], SscError> {
            let r = residual(v, &center, std::slice::from_ref(&inv))?;
            let mut a = [0.0; 6];
            a.copy_from_slice(r.as_slice());
            Ok(a)
        };
        let ji = numerical_jacobian(f, &p.to_array(), JACOBIAN_STEP)?;
        jac.view_mut((6 * i, 6 * i), (6, 6)).copy_from(&ji);
    }
    let cov = symmetrize(&(&jac * b.cov() * jac.transpose()));
    Ok(JointPoseBelief::new(default_keys(n), means, cov)?)
}
