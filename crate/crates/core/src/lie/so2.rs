use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};

use super::{expect_shape, wrap_angle, AdjointMatrix, LieError, LieGroup, Twist, LOG_PI_MARGIN};

/// Planar rotation, stored as an angle in (-pi, pi].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct So2 {
    angle: f64,
}

impl So2 {
    pub fn from_angle(angle: f64) -> Self {
        Self {
            angle: wrap_angle(angle),
        }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn matrix2(&self) -> Matrix2<f64> {
        let (s, c) = self.angle.sin_cos();
        Matrix2::new(c, -s, s, c)
    }
}

impl LieGroup for So2 {
    const SPACE_DIM: usize = 2;
    const DOF: usize = 1;

    fn identity() -> Self {
        Self { angle: 0.0 }
    }

    fn compose(&self, rhs: &Self) -> Self {
        Self::from_angle(self.angle + rhs.angle)
    }

    fn inverse(&self) -> Self {
        Self::from_angle(-self.angle)
    }

    fn exp(xi: &Twist) -> Result<Self, LieError> {
        xi.expect_dof(1)?;
        Ok(Self::from_angle(xi.as_vector()[0]))
    }

    fn log(&self) -> Result<Twist, LieError> {
        if PI - self.angle.abs() < LOG_PI_MARGIN {
            return Err(LieError::SingularLog { angle: self.angle });
        }
        Ok(Twist::zeros(1).with(0, self.angle))
    }

    fn adjoint(&self) -> AdjointMatrix {
        AdjointMatrix::new(DMatrix::identity(1, 1))
    }

    fn hat(xi: &Twist) -> Result<DMatrix<f64>, LieError> {
        xi.expect_dof(1)?;
        let p = xi.as_vector()[0];
        Ok(DMatrix::from_row_slice(2, 2, &[0.0, -p, p, 0.0]))
    }

    fn vee(m: &DMatrix<f64>) -> Result<Twist, LieError> {
        expect_shape(m, 2, 2)?;
        Ok(Twist::zeros(1).with(0, m[(1, 0)]))
    }

    fn curly_hat(xi: &Twist) -> Result<DMatrix<f64>, LieError> {
        xi.expect_dof(1)?;
        Ok(DMatrix::zeros(1, 1))
    }

    fn matrix(&self) -> DMatrix<f64> {
        let m = self.matrix2();
        DMatrix::from_column_slice(2, 2, m.as_slice())
    }

    fn from_matrix(m: &DMatrix<f64>) -> Result<Self, LieError> {
        expect_shape(m, 2, 2)?;
        Ok(Self::from_angle(m[(1, 0)].atan2(m[(0, 0)])))
    }

    fn orthonormality_residual(&self) -> f64 {
        0.0
    }

    fn renormalized(&self) -> Self {
        *self
    }
}

impl Twist {
    pub(crate) fn with(mut self, i: usize, v: f64) -> Self {
        self.0[i] = v;
        self
    }
}
