use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};

use super::{expect_shape, skew3, unskew3, AdjointMatrix, LieError, LieGroup, Twist, LOG_PI_MARGIN};

const SMALL_ANGLE: f64 = 1e-6;

/// Spatial rotation stored as a 3x3 orthonormal matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct So3 {
    matrix: Matrix3<f64>,
}

impl So3 {
    /// Wraps a matrix without checking orthonormality.
    pub fn from_matrix_unchecked(matrix: Matrix3<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix3(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn rot_x(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self::from_matrix_unchecked(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn rot_y(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self::from_matrix_unchecked(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn rot_z(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self::from_matrix_unchecked(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Rodrigues' formula.
    pub fn exp_vec(phi: &Vector3<f64>) -> Self {
        let theta2 = phi.norm_squared();
        let theta = theta2.sqrt();
        let w = skew3(phi);
        let (a, b) = if theta < SMALL_ANGLE {
            (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
        } else {
            let half = 0.5 * theta;
            (theta.sin() / theta, 2.0 * (half.sin() / theta).powi(2))
        };
        Self::from_matrix_unchecked(Matrix3::identity() + w * a + w * w * b)
    }

    /// Rotation angle in [0, pi].
    pub fn angle(&self) -> f64 {
        let r = &self.matrix;
        let s = 0.5 * unskew3(&(r - r.transpose())).norm();
        let c = 0.5 * (r.trace() - 1.0);
        s.atan2(c)
    }

    pub fn log_vec(&self) -> Result<Vector3<f64>, LieError> {
        let r = &self.matrix;
        let v = 0.5 * unskew3(&(r - r.transpose()));
        let s = v.norm();
        let c = 0.5 * (r.trace() - 1.0);
        let theta = s.atan2(c);
        if PI - theta < LOG_PI_MARGIN {
            return Err(LieError::SingularLog { angle: theta });
        }
        if theta < SMALL_ANGLE {
            return Ok(v * (1.0 + theta * theta / 6.0));
        }
        if theta < PI - 1e-3 {
            return Ok(v * (theta / s));
        }
        // Near pi the antisymmetric part vanishes; take the axis from the
        // symmetric part (1 - cos) a a^T and the sign from v.
        let b = (r + r.transpose()) * 0.5 - Matrix3::identity() * c;
        let (k, _) = (0..3)
            .map(|i| (i, b[(i, i)]))
            .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        let mut axis: Vector3<f64> = b.column(k).into_owned();
        axis /= axis.norm();
        if axis.dot(&v) < 0.0 {
            axis = -axis;
        }
        Ok(axis * theta)
    }

    /// Left Jacobian `V` of SO(3), used for the SE(3) translation.
    pub(crate) fn left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
        let theta2 = phi.norm_squared();
        let theta = theta2.sqrt();
        let w = skew3(phi);
        let (a, b) = if theta < 1e-4 {
            (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
        } else {
            let half = 0.5 * theta;
            (
                2.0 * (half.sin() / theta).powi(2),
                (theta - theta.sin()) / (theta2 * theta),
            )
        };
        Matrix3::identity() + w * a + w * w * b
    }

    pub(crate) fn left_jacobian_inverse(phi: &Vector3<f64>) -> Matrix3<f64> {
        let theta2 = phi.norm_squared();
        let theta = theta2.sqrt();
        let w = skew3(phi);
        let b = if theta < 1e-4 {
            1.0 / 12.0 + theta2 / 720.0
        } else {
            let half = 0.5 * theta;
            (1.0 - theta * theta.sin() / (4.0 * half.sin().powi(2))) / theta2
        };
        Matrix3::identity() - w * 0.5 + w * w * b
    }

    fn project(m: &Matrix3<f64>) -> Matrix3<f64> {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd u");
        let vt = svd.v_t.expect("svd v_t");
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            let mut u2 = u;
            u2.column_mut(2).neg_mut();
            r = u2 * vt;
        }
        r
    }
}

impl LieGroup for So3 {
    const SPACE_DIM: usize = 3;
    const DOF: usize = 3;

    fn identity() -> Self {
        Self::from_matrix_unchecked(Matrix3::identity())
    }

    fn compose(&self, rhs: &Self) -> Self {
        Self::from_matrix_unchecked(self.matrix * rhs.matrix)
    }

    fn inverse(&self) -> Self {
        Self::from_matrix_unchecked(self.matrix.transpose())
    }

    fn exp(xi: &Twist) -> Result<Self, LieError> {
        xi.expect_dof(3)?;
        let v = xi.as_vector();
        Ok(Self::exp_vec(&Vector3::new(v[0], v[1], v[2])))
    }

    fn log(&self) -> Result<Twist, LieError> {
        let v = self.log_vec()?;
        Twist::from_slice(v.as_slice())
    }

    fn adjoint(&self) -> AdjointMatrix {
        AdjointMatrix::new(DMatrix::from_column_slice(3, 3, self.matrix.as_slice()))
    }

    fn hat(xi: &Twist) -> Result<DMatrix<f64>, LieError> {
        xi.expect_dof(3)?;
        let v = xi.as_vector();
        let w = skew3(&Vector3::new(v[0], v[1], v[2]));
        Ok(DMatrix::from_column_slice(3, 3, w.as_slice()))
    }

    fn vee(m: &DMatrix<f64>) -> Result<Twist, LieError> {
        expect_shape(m, 3, 3)?;
        Twist::from_slice(&[m[(2, 1)], m[(0, 2)], m[(1, 0)]])
    }

    fn curly_hat(xi: &Twist) -> Result<DMatrix<f64>, LieError> {
        Self::hat(xi)
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(3, 3, self.matrix.as_slice())
    }

    fn from_matrix(m: &DMatrix<f64>) -> Result<Self, LieError> {
        expect_shape(m, 3, 3)?;
        let r = Matrix3::from_column_slice(m.as_slice());
        let residual = (r.transpose() * r - Matrix3::identity()).norm();
        if residual > 1e-6 || (r.determinant() - 1.0).abs() > 1e-6 {
            return Err(LieError::InvalidElement(format!(
                "rotation not orthonormal (residual {residual:e})"
            )));
        }
        Ok(Self::from_matrix_unchecked(Self::project(&r)))
    }

    fn orthonormality_residual(&self) -> f64 {
        (self.matrix.transpose() * self.matrix - Matrix3::identity()).norm()
    }

    fn renormalized(&self) -> Self {
        Self::from_matrix_unchecked(Self::project(&self.matrix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_about_z() {
        let r = So3::exp_vec(&Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((r.matrix3() - expected).norm() < 1e-15);
    }

    #[test]
    fn log_near_pi_branch() {
        let phi = Vector3::new(0.3, -0.5, 0.8).normalize() * (PI - 1e-5);
        let back = So3::exp_vec(&phi).log_vec().unwrap();
        assert!((back - phi).norm() < 1e-9, "{}", (back - phi).norm());
    }

    #[test]
    fn log_at_pi_rejected() {
        let r = So3::rot_z(PI);
        assert!(matches!(r.log(), Err(LieError::SingularLog { .. })));
    }

    #[test]
    fn renormalize_fixes_drift() {
        let mut m = *So3::rot_x(0.4).matrix3();
        m[(0, 1)] += 1e-6;
        let r = So3::from_matrix_unchecked(m);
        assert!(r.orthonormality_residual() > 1e-9);
        let fixed = r.renormalize_if_needed();
        assert!(fixed.orthonormality_residual() < 1e-14);
        assert!((fixed.matrix3().determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jacobian_inverse_is_inverse() {
        for phi in [
            Vector3::new(1e-7, 0.0, 0.0),
            Vector3::new(0.3, 0.1, -0.2),
            Vector3::new(1.0, 2.0, -0.5),
        ] {
            let p = So3::left_jacobian(&phi) * So3::left_jacobian_inverse(&phi);
            assert!((p - Matrix3::identity()).norm() < 1e-12);
        }
    }
}
