use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2};

use super::{expect_shape, AdjointMatrix, LieError, LieGroup, So2, Twist};

/// Rigid-body transform in the plane. Twists are `(rho_x, rho_y, phi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Se2 {
    rotation: So2,
    translation: Vector2<f64>,
}

impl Se2 {
    pub fn new(rotation: So2, translation: Vector2<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_xy_theta(x: f64, y: f64, theta: f64) -> Self {
        Self::new(So2::from_angle(theta), Vector2::new(x, y))
    }

    pub fn rotation(&self) -> &So2 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector2<f64> {
        &self.translation
    }

    pub fn x(&self) -> f64 {
        self.translation.x
    }

    pub fn y(&self) -> f64 {
        self.translation.y
    }

    pub fn theta(&self) -> f64 {
        self.rotation.angle()
    }

    pub fn homogeneous(&self) -> Matrix3<f64> {
        let r = self.rotation.matrix2();
        Matrix3::new(
            r[(0, 0)],
            r[(0, 1)],
            self.translation.x,
            r[(1, 0)],
            r[(1, 1)],
            self.translation.y,
            0.0,
            0.0,
            1.0,
        )
    }

    /// `V(phi)` with `t = V rho`; returns the (a, b) of `[[a, -b], [b, a]]`.
    fn v_coefficients(phi: f64) -> (f64, f64) {
        if phi.abs() < 1e-4 {
            let p2 = phi * phi;
            (1.0 - p2 / 6.0, phi * (0.5 - p2 / 24.0))
        } else {
            let half = 0.5 * phi;
            (phi.sin() / phi, 2.0 * half.sin().powi(2) / phi)
        }
    }
}

impl LieGroup for Se2 {
    const SPACE_DIM: usize = 2;
    const DOF: usize = 3;

    fn identity() -> Self {
        Self::new(So2::identity(), Vector2::zeros())
    }

    fn compose(&self, rhs: &Self) -> Self {
        Self::new(
            self.rotation.compose(&rhs.rotation),
            self.rotation.matrix2() * rhs.translation + self.translation,
        )
    }

    fn inverse(&self) -> Self {
        let rt = self.rotation.inverse();
        Self::new(rt, -(rt.matrix2() * self.translation))
    }

    fn exp(xi: &Twist) -> Result<Self, LieError> {
        xi.expect_dof(3)?;
        let v = xi.as_vector();
        let (a, b) = Self::v_coefficients(v[2]);
        let vm = Matrix2::new(a, -b, b, a);
        Ok(Self::new(So2::from_angle(v[2]), vm * Vector2::new(v[0], v[1])))
    }

    fn log(&self) -> Result<Twist, LieError> {
        let phi = self.rotation.log()?.as_vector()[0];
        let (a, b) = Self::v_coefficients(phi);
        let det = a * a + b * b;
        let t = &self.translation;
        let rho = Vector2::new(a * t.x + b * t.y, -b * t.x + a * t.y) / det;
        Twist::from_slice(&[rho.x, rho.y, phi])
    }

    fn adjoint(&self) -> AdjointMatrix {
        let r = self.rotation.matrix2();
        let t = &self.translation;
        AdjointMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[r[(0, 0)], r[(0, 1)], t.y, r[(1, 0)], r[(1, 1)], -t.x, 0.0, 0.0, 1.0],
        ))
    }

    fn hat(xi: &Twist) -> Result<DMatrix<f64>, LieError> {
        xi.expect_dof(3)?;
        let v = xi.as_vector();
        Ok(DMatrix::from_row_slice(
            3,
            3,
            &[0.0, -v[2], v[0], v[2], 0.0, v[1], 0.0, 0.0, 0.0],
        ))
    }

    fn vee(m: &DMatrix<f64>) -> Result<Twist, LieError> {
        expect_shape(m, 3, 3)?;
        Twist::from_slice(&[m[(0, 2)], m[(1, 2)], m[(1, 0)]])
    }

    /// `[[phi J, -J rho], [0, 0]]` with `J` the 90 degree rotation.
    fn curly_hat(xi: &Twist) -> Result<DMatrix<f64>, LieError> {
        xi.expect_dof(3)?;
        let v = xi.as_vector();
        Ok(DMatrix::from_row_slice(
            3,
            3,
            &[0.0, -v[2], v[1], v[2], 0.0, -v[0], 0.0, 0.0, 0.0],
        ))
    }

    fn matrix(&self) -> DMatrix<f64> {
        let h = self.homogeneous();
        DMatrix::from_column_slice(3, 3, h.as_slice())
    }

    fn from_matrix(m: &DMatrix<f64>) -> Result<Self, LieError> {
        expect_shape(m, 3, 3)?;
        if m[(2, 0)] != 0.0 || m[(2, 1)] != 0.0 || m[(2, 2)] != 1.0 {
            return Err(LieError::InvalidElement("bottom row must be (0, 0, 1)".into()));
        }
        let r = m.view((0, 0), (2, 2));
        let residual = (r.transpose() * r - DMatrix::<f64>::identity(2, 2)).norm();
        if residual > 1e-6 {
            return Err(LieError::InvalidElement(format!(
                "rotation not orthonormal (residual {residual:e})"
            )));
        }
        Ok(Self::new(
            So2::from_angle(m[(1, 0)].atan2(m[(0, 0)])),
            Vector2::new(m[(0, 2)], m[(1, 2)]),
        ))
    }

    fn orthonormality_residual(&self) -> f64 {
        0.0
    }

    fn renormalized(&self) -> Self {
        *self
    }
}

impl std::ops::Mul for Se2 {
    type Output = Se2;
    fn mul(self, rhs: Se2) -> Se2 {
        self.compose(&rhs)
    }
}
