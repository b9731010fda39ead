use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3};

use super::{expect_shape, skew3, unskew3, AdjointMatrix, LieError, LieGroup, So3, Twist};

/// Rigid-body transform in 3D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Se3 {
    rotation: So3,
    translation: Vector3<f64>,
}

impl Se3 {
    pub fn new(rotation: So3, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(So3::identity(), t)
    }

    pub fn rotation(&self) -> &So3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix3());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.matrix3() * p + self.translation
    }

    fn split(xi: &Twist) -> Result<(Vector3<f64>, Vector3<f64>), LieError> {
        xi.expect_dof(6)?;
        let v = xi.as_vector();
        Ok((Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5])))
    }
}

impl LieGroup for Se3 {
    const SPACE_DIM: usize = 3;
    const DOF: usize = 6;

    fn identity() -> Self {
        Self::new(So3::identity(), Vector3::zeros())
    }

    fn compose(&self, rhs: &Self) -> Self {
        Self::new(
            self.rotation.compose(&rhs.rotation),
            self.rotation.matrix3() * rhs.translation + self.translation,
        )
    }

    fn inverse(&self) -> Self {
        let rt = self.rotation.inverse();
        Self::new(rt, -(rt.matrix3() * self.translation))
    }

    fn exp(xi: &Twist) -> Result<Self, LieError> {
        let (rho, phi) = Self::split(xi)?;
        Ok(Self::new(So3::exp_vec(&phi), So3::left_jacobian(&phi) * rho))
    }

    fn log(&self) -> Result<Twist, LieError> {
        let phi = self.rotation.log_vec()?;
        let rho = So3::left_jacobian_inverse(&phi) * self.translation;
        Twist::from_slice(&[rho.x, rho.y, rho.z, phi.x, phi.y, phi.z])
    }

    fn adjoint(&self) -> AdjointMatrix {
        let r = self.rotation.matrix3();
        let tr = skew3(&self.translation) * r;
        let mut m = DMatrix::zeros(6, 6);
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&tr);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
        AdjointMatrix::new(m)
    }

    fn hat(xi: &Twist) -> Result<DMatrix<f64>, LieError> {
        let (rho, phi) = Self::split(xi)?;
        let mut m = DMatrix::zeros(4, 4);
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew3(&phi));
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&rho);
        Ok(m)
    }

    fn vee(m: &DMatrix<f64>) -> Result<Twist, LieError> {
        expect_shape(m, 4, 4)?;
        let w: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let phi = unskew3(&w);
        Twist::from_slice(&[m[(0, 3)], m[(1, 3)], m[(2, 3)], phi.x, phi.y, phi.z])
    }

    fn curly_hat(xi: &Twist) -> Result<DMatrix<f64>, LieError> {
        let (rho, phi) = Self::split(xi)?;
        let pw = skew3(&phi);
        let mut m = DMatrix::zeros(6, 6);
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&pw);
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&skew3(&rho));
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&pw);
        Ok(m)
    }

    fn matrix(&self) -> DMatrix<f64> {
        let h = self.homogeneous();
        DMatrix::from_column_slice(4, 4, h.as_slice())
    }

    fn from_matrix(m: &DMatrix<f64>) -> Result<Self, LieError> {
        expect_shape(m, 4, 4)?;
        if m[(3, 0)] != 0.0 || m[(3, 1)] != 0.0 || m[(3, 2)] != 0.0 || m[(3, 3)] != 1.0 {
            return Err(LieError::InvalidElement("bottom row must be (0, 0, 0, 1)".into()));
        }
        let r = So3::from_matrix(&m.view((0, 0), (3, 3)).into_owned())?;
        Ok(Self::new(r, Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)])))
    }

    fn orthonormality_residual(&self) -> f64 {
        self.rotation.orthonormality_residual()
    }

    fn renormalized(&self) -> Self {
        Self::new(self.rotation.renormalized(), self.translation)
    }
}

impl std::ops::Mul for Se3 {
    type Output = Se3;
    fn mul(self, rhs: Se3) -> Se3 {
        self.compose(&rhs)
    }
}
