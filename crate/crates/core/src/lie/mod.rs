//! Matrix Lie groups used to represent rigid-body poses.
//!
//! Every group implements [`LieGroup`]. Twists are stored as plain column
//! vectors with the translational part first and the rotational part last,
//! `xi = (rho, phi)`, so that covariance blocks keep a fixed channel layout
//! across the whole crate. Perturbations are applied on the left,
//! `T = exp(xi^) * T_bar`.

mod se2;
mod se3;
mod so2;
mod so3;

pub use se2::Se2;
pub use se3::Se3;
pub use so2::So2;
pub use so3::So3;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use thiserror::Error;

/// Rotation angles closer than this to pi are rejected by `log`.
pub const LOG_PI_MARGIN: f64 = 1e-9;

/// Orthonormality residual above which rotations are re-projected.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("logarithm is singular at rotation angle {angle} (principal branch boundary)")]
    SingularLog { angle: f64 },
    #[error("unsupported BCH truncation order {0} (supported: 1, 2, 3)")]
    UnsupportedOrder(u8),
    #[error("twist has non-finite entries")]
    NonFinite,
    #[error("matrix is not a group element: {0}")]
    InvalidElement(String),
}

/// A Lie-algebra vector `xi`, ordered `(rho, phi)`.
#[derive(Clone, PartialEq)]
pub struct Twist(DVector<f64>);

impl Twist {
    pub fn new(v: DVector<f64>) -> Result<Self, LieError> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(LieError::NonFinite);
        }
        Ok(Self(v))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self, LieError> {
        Self::new(DVector::from_column_slice(v))
    }

    pub fn zeros(dof: usize) -> Self {
        Self(DVector::zeros(dof))
    }

    pub fn dof(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub(crate) fn expect_dof(&self, dof: usize) -> Result<(), LieError> {
        if self.0.len() != dof {
            return Err(LieError::DimensionMismatch {
                expected: dof,
                actual: self.0.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Twist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Twist").field(&self.0.as_slice()).finish()
    }
}

impl Add for &Twist {
    type Output = Twist;
    fn add(self, rhs: &Twist) -> Twist {
        Twist(&self.0 + &rhs.0)
    }
}

impl Sub for &Twist {
    type Output = Twist;
    fn sub(self, rhs: &Twist) -> Twist {
        Twist(&self.0 - &rhs.0)
    }
}

impl Neg for &Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        Twist(-&self.0)
    }
}

impl Mul<f64> for &Twist {
    type Output = Twist;
    fn mul(self, s: f64) -> Twist {
        Twist(&self.0 * s)
    }
}

/// Matrix of the adjoint action, `T exp(xi^) = exp((Ad_T xi)^) T`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjointMatrix(DMatrix<f64>);

impl AdjointMatrix {
    pub(crate) fn new(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn apply(&self, xi: &Twist) -> Twist {
        Twist(&self.0 * &xi.0)
    }
}

/// A matrix Lie group with a left-perturbation twist parameterization.
pub trait LieGroup: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    /// Dimension of the space the group acts on (rows of the rotation).
    const SPACE_DIM: usize;
    /// Dimension of the Lie algebra, i.e. the twist length.
    const DOF: usize;

    fn identity() -> Self;
    fn compose(&self, rhs: &Self) -> Self;
    fn inverse(&self) -> Self;

    fn exp(xi: &Twist) -> Result<Self, LieError>;
    /// Principal-branch logarithm. Fails at a rotation angle of pi.
    fn log(&self) -> Result<Twist, LieError>;
    fn adjoint(&self) -> AdjointMatrix;

    /// Algebra matrix of `xi`.
    fn hat(xi: &Twist) -> Result<DMatrix<f64>, LieError>;
    fn vee(m: &DMatrix<f64>) -> Result<Twist, LieError>;
    /// Matrix of the adjoint action of the algebra on itself,
    /// `curly_hat(a) * b = [a^, b^]^vee`.
    fn curly_hat(xi: &Twist) -> Result<DMatrix<f64>, LieError>;

    /// Matrix representation (homogeneous for poses, plain for rotations).
    fn matrix(&self) -> DMatrix<f64>;
    fn from_matrix(m: &DMatrix<f64>) -> Result<Self, LieError>;

    /// `||R^T R - I||_F` of the rotation part.
    fn orthonormality_residual(&self) -> f64;
    /// Nearest element with an exactly orthonormal rotation.
    fn renormalized(&self) -> Self;

    fn renormalize_if_needed(&self) -> Self {
        if self.orthonormality_residual() > RENORMALIZE_THRESHOLD {
            self.renormalized()
        } else {
            self.clone()
        }
    }

    /// `exp(xi^) * self`.
    fn perturb(&self, xi: &Twist) -> Result<Self, LieError> {
        Ok(Self::exp(xi)?.compose(self))
    }

    /// `log(self * reference^-1)`, the left twist taking `reference` to `self`.
    fn log_relative_to(&self, reference: &Self) -> Result<Twist, LieError> {
        self.compose(&reference.inverse()).log()
    }
}

/// Truncated Baker-Campbell-Hausdorff series for `log(exp(xi1^) exp(xi2^))`.
///
/// Order 1 is `xi1 + xi2`, order 2 adds `curly(xi1) xi2 / 2`, order 3 adds
/// `(curly(xi1)^2 xi2 + curly(xi2)^2 xi1) / 12`.
pub fn bch_approx<G: LieGroup>(xi1: &Twist, xi2: &Twist, order: u8) -> Result<Twist, LieError> {
    if !(1..=3).contains(&order) {
        return Err(LieError::UnsupportedOrder(order));
    }
    xi1.expect_dof(G::DOF)?;
    xi2.expect_dof(G::DOF)?;
    let mut out = &xi1.0 + &xi2.0;
    if order >= 2 {
        let c1 = G::curly_hat(xi1)?;
        out += &c1 * &xi2.0 * 0.5;
        if order >= 3 {
            let c2 = G::curly_hat(xi2)?;
            out += (&c1 * (&c1 * &xi2.0)) / 12.0;
            out += (&c2 * (&c2 * &xi1.0)) / 12.0;
        }
    }
    Ok(Twist(out))
}

pub(crate) fn skew3(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub(crate) fn unskew3(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

pub(crate) fn expect_shape(m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<(), LieError> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(LieError::InvalidElement(format!(
            "expected {rows}x{cols} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}
