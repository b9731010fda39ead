//! Coordinate-based baseline: poses as `(x, y, z, phi, theta, psi)` vectors
//! with a jointly Gaussian covariance over the stacked coordinates, and the
//! head-to-tail, inverse and tail-to-tail operations with first-order
//! covariance propagation.
//!
//! Euler convention: `R = Rz(psi) * Ry(theta) * Rx(phi)`. All comparisons
//! with the Lie-group code go through homogeneous matrices, so only internal
//! consistency matters. Jacobians are central differences with a fixed
//! step, identical for angles and lengths.

use nalgebra::{DMatrix, DVector, Vector3};
use thiserror::Error;

use crate::belief::{BeliefError, CONSTRUCTION_PSD_TOL, PROPAGATION_PSD_TOL};
use crate::lie::{wrap_angle, LieError, LieGroup, Se3, So3};
use crate::linalg::{min_eigenvalue, symmetrize};

/// Central-difference step for all coordinate Jacobians.
pub const JACOBIAN_STEP: f64 = 1e-6;
/// Distance from `|theta| = pi/2` treated as gimbal lock.
pub const GIMBAL_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SscError {
    #[error("gimbal lock: pitch {theta} is within {GIMBAL_MARGIN:e} of +-pi/2")]
    GimbalLock { theta: f64 },
    #[error("operation takes {expected} pose(s), belief has {actual}")]
    PoseCount { expected: usize, actual: usize },
    #[error("covariance is {rows}x{cols}, expected {expected}x{expected}")]
    Shape { rows: usize, cols: usize, expected: usize },
    #[error("covariance is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error(transparent)]
    Lie(#[from] LieError),
}

impl From<SscError> for BeliefError {
    fn from(e: SscError) -> Self {
        match e {
            SscError::Lie(l) => BeliefError::Lie(l),
            SscError::NotPsd(v) => BeliefError::NotPsd(v),
            other => BeliefError::Lie(LieError::InvalidElement(other.to_string())),
        }
    }
}

/// Position and Z-Y-X Euler angles. Angles are kept in (-pi, pi].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SscPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl SscPose {
    pub fn new(x: f64, y: f64, z: f64, phi: f64, theta: f64, psi: f64) -> Result<Self, SscError> {
        let v = [x, y, z, phi, theta, psi];
        if v.iter().any(|c| !c.is_finite()) {
            return Err(SscError::NonFinite);
        }
        Ok(Self {
            x,
            y,
            z,
            phi: wrap_angle(phi),
            theta: wrap_angle(theta),
            psi: wrap_angle(psi),
        })
    }

    pub fn zero() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            phi: 0.0,
            theta: 0.0,
            psi: 0.0,
        }
    }

    pub fn planar(x: f64, y: f64, heading: f64) -> Self {
        Self::new(x, y, 0.0, 0.0, 0.0, heading).expect("finite planar pose")
    }

    pub fn from_slice(v: &[f64]) -> Result<Self, SscError> {
        if v.len() != 6 {
            return Err(SscError::Shape {
                rows: v.len(),
                cols: 1,
                expected: 6,
            });
        }
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.z, self.phi, self.theta, self.psi]
    }

    /// `a - b` with the angle channels wrapped to (-pi, pi].
    pub fn difference(a: &[f64], b: &[f64]) -> [f64; 6] {
        let mut d = [0.0; 6];
        for i in 0..6 {
            d[i] = a[i] - b[i];
            if i >= 3 {
                d[i] = wrap_angle(d[i]);
            }
        }
        d
    }
}

/// Homogeneous transform of a coordinate vector.
pub fn ssc_to_pose(x: &SscPose) -> Se3 {
    let r = So3::rot_z(x.psi)
        .compose(&So3::rot_y(x.theta))
        .compose(&So3::rot_x(x.phi));
    Se3::new(r, Vector3::new(x.x, x.y, x.z))
}

fn raw_to_pose(v: &[f64]) -> Se3 {
    let r = So3::rot_z(v[5]).compose(&So3::rot_y(v[4])).compose(&So3::rot_x(v[3]));
    Se3::new(r, Vector3::new(v[0], v[1], v[2]))
}

/// Coordinates of a transform. Fails at gimbal lock.
pub fn pose_to_ssc(t: &Se3) -> Result<SscPose, SscError> {
    let r = t.rotation().matrix3();
    let s = (-r[(2, 0)]).clamp(-1.0, 1.0);
    let theta = s.asin();
    if (theta.abs() - std::f64::consts::FRAC_PI_2).abs() < GIMBAL_MARGIN {
        return Err(SscError::GimbalLock { theta });
    }
    let phi = r[(2, 1)].atan2(r[(2, 2)]);
    let psi = r[(1, 0)].atan2(r[(0, 0)]);
    let p = t.translation();
    SscPose::new(p.x, p.y, p.z, phi, theta, psi)
}

/// Stacked coordinate vectors of `n` poses with a `6n x 6n` covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct SscBelief {
    means: Vec<SscPose>,
    cov: DMatrix<f64>,
}

impl SscBelief {
    pub fn new(means: Vec<SscPose>, cov: DMatrix<f64>) -> Result<Self, SscError> {
        let expected = 6 * means.len();
        if cov.nrows() != expected || cov.ncols() != expected {
            return Err(SscError::Shape {
                rows: cov.nrows(),
                cols: cov.ncols(),
                expected,
            });
        }
        let cov = symmetrize(&cov);
        let min = min_eigenvalue(&cov);
        if min < CONSTRUCTION_PSD_TOL {
            return Err(SscError::NotPsd(min));
        }
        Ok(Self { means, cov })
    }

    pub fn single(mean: SscPose, cov: DMatrix<f64>) -> Result<Self, SscError> {
        Self::new(vec![mean], cov)
    }

    pub fn means(&self) -> &[SscPose] {
        &self.means
    }

    pub fn mean(&self) -> &SscPose {
        &self.means[0]
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    fn stacked(&self) -> Vec<f64> {
        self.means.iter().flat_map(|p| p.to_array()).collect()
    }

    fn expect_len(&self, n: usize) -> Result<(), SscError> {
        if self.means.len() != n {
            return Err(SscError::PoseCount {
                expected: n,
                actual: self.means.len(),
            });
        }
        Ok(())
    }
}

/// Central-difference Jacobian of `f` at `x`, wrapping angle outputs.
pub fn numerical_jacobian<F>(f: F, x: &[f64], h: f64) -> Result<DMatrix<f64>, SscError>
where
    F: Fn(&[f64]) -> Result<[f64; 6], SscError>,
{
    let mut jac = DMatrix::zeros(6, x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        probe[j] = x[j] + h;
        let plus = f(&probe)?;
        probe[j] = x[j] - h;
        let minus = f(&probe)?;
        probe[j] = x[j];
        let d = SscPose::difference(&plus, &minus);
        for i in 0..6 {
            jac[(i, j)] = d[i] / (2.0 * h);
        }
    }
    Ok(jac)
}

fn propagate<F>(b: &SscBelief, f: F) -> Result<SscBelief, SscError>
where
    F: Fn(&[f64]) -> Result<Se3, SscError>,
{
    let x = b.stacked();
    let mean = pose_to_ssc(&f(&x)?)?;
    let eval = |v: &[f64]| -> Result<[f64; 6], SscError> {
        let t = f(v)?;
        let r = t.rotation().matrix3();
        let p = t.translation();
        // Raw coordinates; wrapping happens on differences.
        let theta = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
        Ok([
            p.x,
            p.y,
            p.z,
            r[(2, 1)].atan2(r[(2, 2)]),
            theta,
            r[(1, 0)].atan2(r[(0, 0)]),
        ])
    };
    let jac = numerical_jacobian(eval, &x, JACOBIAN_STEP)?;
    let cov = symmetrize(&(&jac * &b.cov * jac.transpose()));
    let min = min_eigenvalue(&cov);
    if min < PROPAGATION_PSD_TOL {
        return Err(SscError::NotPsd(min));
    }
    Ok(SscBelief { means: vec![mean], cov })
}

/// Head-to-tail composition `x_ik = x_ij (+) x_jk` of a two-pose belief.
pub fn head_to_tail(b: &SscBelief) -> Result<SscBelief, SscError> {
    b.expect_len(2)?;
    propagate(b, |v| Ok(raw_to_pose(&v[0..6]).compose(&raw_to_pose(&v[6..12]))))
}

/// Head-to-tail composition of every pose in the belief, in order.
pub fn head_to_tail_chain(b: &SscBelief) -> Result<SscBelief, SscError> {
    if b.is_empty() {
        return Err(SscError::PoseCount { expected: 1, actual: 0 });
    }
    propagate(b, |v| {
        Ok(v.chunks(6)
            .map(raw_to_pose)
            .fold(Se3::identity(), |acc, t| acc.compose(&t)))
    })
}

/// Pose inverse `x_ji = (-) x_ij` of a single-pose belief.
pub fn ssc_inverse(b: &SscBelief) -> Result<SscBelief, SscError> {
    b.expect_len(1)?;
    propagate(b, |v| Ok(raw_to_pose(v).inverse()))
}

/// Tail-to-tail relative pose `x_jk = ((-) x_ij) (+) x_ik`.
pub fn tail_to_tail(b: &SscBelief) -> Result<SscBelief, SscError> {
    b.expect_len(2)?;
    propagate(b, |v| {
        Ok(raw_to_pose(&v[0..6]).inverse().compose(&raw_to_pose(&v[6..12])))
    })
}

/// Coordinate vector as a column.
pub fn to_column(p: &SscPose) -> DVector<f64> {
    DVector::from_column_slice(&p.to_array())
}
