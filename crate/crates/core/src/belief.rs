//! Uncertain poses with Gaussian perturbations in the Lie algebra, and the
//! correlation-aware composition, inversion and relative-pose operations.
//!
//! A single belief is `T = exp(xi^) * T_bar` with `xi ~ N(0, Sigma)`. A joint
//! belief over `n` poses keeps one stacked covariance over
//! `(xi_1, ..., xi_n)`, so cross-correlations between poses survive until an
//! operation consumes them.
//!
//! All propagation is first order in the perturbations. Results are fresh,
//! independent beliefs: the cross-covariance between an output and its
//! inputs is not tracked.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::lie::{LieError, LieGroup};
use crate::linalg::{block, min_eigenvalue, symmetrize};

pub type PoseKey = u64;

/// Smallest eigenvalue accepted when constructing a belief.
pub const CONSTRUCTION_PSD_TOL: f64 = -1e-10;
/// Smallest eigenvalue accepted on a propagated covariance.
pub const PROPAGATION_PSD_TOL: f64 = -1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("covariance is {rows}x{cols}, expected {expected}x{expected}")]
    Shape { rows: usize, cols: usize, expected: usize },
    #[error("covariance has non-finite entries")]
    NonFinite,
    #[error("covariance is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("numerical degeneracy: propagated covariance has eigenvalue {0:e}")]
    NumericalDegeneracy(f64),
    #[error("pose key {0} not found")]
    KeyNotFound(PoseKey),
    #[error("duplicate pose key {0}")]
    DuplicateKey(PoseKey),
    #[error("degenerate pair: both entries are key {0}")]
    DegeneratePair(PoseKey),
    #[error("{keys} keys but {means} means")]
    LengthMismatch { keys: usize, means: usize },
    #[error("joint belief has no poses")]
    Empty,
    #[error(transparent)]
    Lie(#[from] LieError),
}

fn checked_cov(cov: &DMatrix<f64>, expected: usize, tol: f64) -> Result<DMatrix<f64>, BeliefError> {
    if cov.nrows() != expected || cov.ncols() != expected {
        return Err(BeliefError::Shape {
            rows: cov.nrows(),
            cols: cov.ncols(),
            expected,
        });
    }
    if cov.iter().any(|x| !x.is_finite()) {
        return Err(BeliefError::NonFinite);
    }
    let sym = symmetrize(cov);
    let min = min_eigenvalue(&sym);
    if min < tol {
        return Err(BeliefError::NotPsd(min));
    }
    Ok(sym)
}

/// Mean pose plus twist covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertainPose<G: LieGroup> {
    mean: G,
    cov: DMatrix<f64>,
}

impl<G: LieGroup> UncertainPose<G> {
    pub fn new(mean: G, cov: DMatrix<f64>) -> Result<Self, BeliefError> {
        let cov = checked_cov(&cov, G::DOF, CONSTRUCTION_PSD_TOL)?;
        Ok(Self { mean, cov })
    }

    /// A belief with zero covariance.
    pub fn certain(mean: G) -> Self {
        Self {
            mean,
            cov: DMatrix::zeros(G::DOF, G::DOF),
        }
    }

    fn propagated(mean: G, cov: DMatrix<f64>) -> Result<Self, BeliefError> {
        let cov = symmetrize(&cov);
        let min = min_eigenvalue(&cov);
        if min < PROPAGATION_PSD_TOL {
            return Err(BeliefError::NumericalDegeneracy(min));
        }
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> &G {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn into_parts(self) -> (G, DMatrix<f64>) {
        (self.mean, self.cov)
    }
}

/// Two poses with a joint `2m x 2m` covariance
/// `[[Sigma_1, Sigma_12], [Sigma_12^T, Sigma_2]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PosePairBelief<G: LieGroup> {
    first: G,
    second: G,
    cov: DMatrix<f64>,
}

impl<G: LieGroup> PosePairBelief<G> {
    pub fn new(first: G, second: G, cov: DMatrix<f64>) -> Result<Self, BeliefError> {
        let cov = checked_cov(&cov, 2 * G::DOF, CONSTRUCTION_PSD_TOL)?;
        Ok(Self { first, second, cov })
    }

    pub fn from_blocks(
        first: G,
        second: G,
        sigma1: &DMatrix<f64>,
        sigma2: &DMatrix<f64>,
        cross: &DMatrix<f64>,
    ) -> Result<Self, BeliefError> {
        let m = G::DOF;
        for b in [sigma1, sigma2, cross] {
            if b.nrows() != m || b.ncols() != m {
                return Err(BeliefError::Shape {
                    rows: b.nrows(),
                    cols: b.ncols(),
                    expected: m,
                });
            }
        }
        let mut cov = DMatrix::zeros(2 * m, 2 * m);
        cov.view_mut((0, 0), (m, m)).copy_from(sigma1);
        cov.view_mut((m, m), (m, m)).copy_from(sigma2);
        cov.view_mut((0, m), (m, m)).copy_from(cross);
        cov.view_mut((m, 0), (m, m)).copy_from(&cross.transpose());
        Self::new(first, second, cov)
    }

    pub fn independent(a: &UncertainPose<G>, b: &UncertainPose<G>) -> Self {
        let m = G::DOF;
        let mut cov = DMatrix::zeros(2 * m, 2 * m);
        cov.view_mut((0, 0), (m, m)).copy_from(&a.cov);
        cov.view_mut((m, m), (m, m)).copy_from(&b.cov);
        Self {
            first: a.mean.clone(),
            second: b.mean.clone(),
            cov,
        }
    }

    pub fn first(&self) -> &G {
        &self.first
    }

    pub fn second(&self) -> &G {
        &self.second
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn sigma1(&self) -> DMatrix<f64> {
        block(&self.cov, 0, 0, G::DOF)
    }

    pub fn sigma2(&self) -> DMatrix<f64> {
        block(&self.cov, 1, 1, G::DOF)
    }

    /// Cross-covariance `E[xi_1 xi_2^T]`.
    pub fn cross(&self) -> DMatrix<f64> {
        block(&self.cov, 0, 1, G::DOF)
    }

    /// The same pair with the cross-covariance dropped.
    pub fn without_correlation(&self) -> Self {
        let m = G::DOF;
        let mut cov = self.cov.clone();
        cov.view_mut((0, m), (m, m)).fill(0.0);
        cov.view_mut((m, 0), (m, m)).fill(0.0);
        Self {
            first: self.first.clone(),
            second: self.second.clone(),
            cov,
        }
    }

    pub fn to_joint(&self, keys: [PoseKey; 2]) -> Result<JointPoseBelief<G>, BeliefError> {
        JointPoseBelief::new(
            keys.to_vec(),
            vec![self.first.clone(), self.second.clone()],
            self.cov.clone(),
        )
    }
}

/// `n` keyed poses with one stacked `(m n) x (m n)` covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPoseBelief<G: LieGroup> {
    keys: Vec<PoseKey>,
    means: Vec<G>,
    cov: DMatrix<f64>,
}

impl<G: LieGroup> JointPoseBelief<G> {
    pub fn new(keys: Vec<PoseKey>, means: Vec<G>, cov: DMatrix<f64>) -> Result<Self, BeliefError> {
        if keys.len() != means.len() {
            return Err(BeliefError::LengthMismatch {
                keys: keys.len(),
                means: means.len(),
            });
        }
        if keys.is_empty() {
            return Err(BeliefError::Empty);
        }
        let mut seen = std::collections::HashSet::new();
        for k in &keys {
            if !seen.insert(*k) {
                return Err(BeliefError::DuplicateKey(*k));
            }
        }
        let cov = checked_cov(&cov, G::DOF * keys.len(), CONSTRUCTION_PSD_TOL)?;
        Ok(Self { keys, means, cov })
    }

    /// Joint belief over independent poses keyed `0..n`.
    pub fn from_independent(poses: &[UncertainPose<G>]) -> Result<Self, BeliefError> {
        let m = G::DOF;
        let n = poses.len();
        let mut cov = DMatrix::zeros(m * n, m * n);
        for (i, p) in poses.iter().enumerate() {
            cov.view_mut((i * m, i * m), (m, m)).copy_from(&p.cov);
        }
        Self::new(
            (0..n as PoseKey).collect(),
            poses.iter().map(|p| p.mean.clone()).collect(),
            cov,
        )
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[PoseKey] {
        &self.keys
    }

    pub fn means(&self) -> &[G] {
        &self.means
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn index_of(&self, key: PoseKey) -> Result<usize, BeliefError> {
        self.keys
            .iter()
            .position(|k| *k == key)
            .ok_or(BeliefError::KeyNotFound(key))
    }

    /// Block `(a, b)` by position.
    pub fn block(&self, a: usize, b: usize) -> DMatrix<f64> {
        block(&self.cov, a, b, G::DOF)
    }

    pub fn marginal(&self, key: PoseKey) -> Result<UncertainPose<G>, BeliefError> {
        let i = self.index_of(key)?;
        Ok(UncertainPose {
            mean: self.means[i].clone(),
            cov: self.block(i, i),
        })
    }

    /// Joint marginal of two distinct poses, in the order requested.
    pub fn marginal_pair(&self, i: PoseKey, j: PoseKey) -> Result<PosePairBelief<G>, BeliefError> {
        if i == j {
            return Err(BeliefError::DegeneratePair(i));
        }
        let a = self.index_of(i)?;
        let b = self.index_of(j)?;
        let m = G::DOF;
        let mut cov = DMatrix::zeros(2 * m, 2 * m);
        cov.view_mut((0, 0), (m, m)).copy_from(&self.block(a, a));
        cov.view_mut((0, m), (m, m)).copy_from(&self.block(a, b));
        cov.view_mut((m, 0), (m, m)).copy_from(&self.block(b, a));
        cov.view_mut((m, m), (m, m)).copy_from(&self.block(b, b));
        Ok(PosePairBelief {
            first: self.means[a].clone(),
            second: self.means[b].clone(),
            cov,
        })
    }

    /// The same poses with every cross-covariance block zeroed.
    pub fn block_diagonal(&self) -> Self {
        let m = G::DOF;
        let n = self.len();
        let mut cov = DMatrix::zeros(m * n, m * n);
        for i in 0..n {
            cov.view_mut((i * m, i * m), (m, m)).copy_from(&self.block(i, i));
        }
        Self {
            keys: self.keys.clone(),
            means: self.means.clone(),
            cov,
        }
    }
}

/// First-order pushforward of a head-to-tail chain. Block `k` of the
/// Jacobian is the adjoint of the product of the first `k` means.
fn chain_pushforward<G: LieGroup>(means: &[G], cov: &DMatrix<f64>) -> Result<UncertainPose<G>, BeliefError> {
    let m = G::DOF;
    let n = means.len();
    let mut jac = DMatrix::zeros(m, m * n);
    jac.view_mut((0, 0), (m, m)).fill_with_identity();
    let mut prefix = means[0].clone();
    for (k, next) in means.iter().enumerate().skip(1) {
        jac.view_mut((0, k * m), (m, m)).copy_from(prefix.adjoint().matrix());
        prefix = prefix.compose(next).renormalize_if_needed();
    }
    let out = &jac * cov * jac.transpose();
    UncertainPose::propagated(prefix, out)
}

/// `T_ik = T_ij T_jk` for a correlated pair.
///
/// `Sigma_ik = Sigma_ij + Ad Sigma_jk Ad^T + Sigma_ij,jk Ad^T + Ad Sigma_ij,jk^T`
/// with `Ad = Ad(T_bar_ij)`.
pub fn compose<G: LieGroup>(pair: &PosePairBelief<G>) -> Result<UncertainPose<G>, BeliefError> {
    chain_pushforward(&[pair.first.clone(), pair.second.clone()], &pair.cov)
}

/// Composes every pose of a joint belief head-to-tail, in key order.
pub fn compose_chain<G: LieGroup>(joint: &JointPoseBelief<G>) -> Result<UncertainPose<G>, BeliefError> {
    if joint.len() == 1 {
        return Ok(UncertainPose {
            mean: joint.means[0].clone(),
            cov: joint.cov.clone(),
        });
    }
    chain_pushforward(&joint.means, &joint.cov)
}

/// `T_ji = T_ij^-1`, with `Sigma_ji = Ad(T_bar^-1) Sigma Ad(T_bar^-1)^T`.
pub fn inverse<G: LieGroup>(u: &UncertainPose<G>) -> UncertainPose<G> {
    let inv = u.mean.inverse();
    let ad = inv.adjoint().into_matrix();
    let cov = symmetrize(&(&ad * &u.cov * ad.transpose()));
    UncertainPose { mean: inv, cov }
}

/// Relative pose `T_jk = T_ij^-1 T_ik` of two poses sharing base frame `i`.
///
/// `Sigma_jk = Ad (Sigma_ij + Sigma_ik - Sigma_ij,ik - Sigma_ij,ik^T) Ad^T`
/// with `Ad = Ad(T_bar_ij^-1)`. Both cross terms enter with a minus sign
/// because the perturbation of `T_ij^-1` is `-Ad xi_ij`.
pub fn between<G: LieGroup>(pair: &PosePairBelief<G>) -> Result<UncertainPose<G>, BeliefError> {
    let (mean, cov) = between_parts(pair, true);
    UncertainPose::propagated(mean, cov)
}

/// [`between`] with the cross-covariance forced to zero.
pub fn between_ignoring_correlation<G: LieGroup>(pair: &PosePairBelief<G>) -> UncertainPose<G> {
    let (mean, cov) = between_parts(pair, false);
    UncertainPose {
        mean,
        cov: symmetrize(&cov),
    }
}

fn between_parts<G: LieGroup>(pair: &PosePairBelief<G>, correlated: bool) -> (G, DMatrix<f64>) {
    let inv = pair.first.inverse();
    let mean = inv.compose(&pair.second);
    let ad = inv.adjoint().into_matrix();
    let mut inner = pair.sigma1() + pair.sigma2();
    if correlated {
        let cross = pair.cross();
        inner -= &cross;
        inner -= cross.transpose();
    }
    (mean, &ad * inner * ad.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{Se2, Se3, So3, Twist};
    use nalgebra::{DVector, Vector3};

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn sample_pose() -> Se3 {
        Se3::exp(&Twist::from_slice(&[0.5, -0.2, 1.0, 0.3, -0.4, 0.9]).unwrap()).unwrap()
    }

    #[test]
    fn construction_symmetrizes() {
        let mut c = diag(&[1.0, 2.0, 3.0]);
        c[(0, 1)] = 0.1;
        c[(1, 0)] = 0.1 + 1e-12;
        let u = UncertainPose::new(Se2::identity(), c).unwrap();
        assert_eq!(u.cov()[(0, 1)], u.cov()[(1, 0)]);
    }

    #[test]
    fn construction_rejects_indefinite() {
        let c = diag(&[1.0, -1e-3, 1.0]);
        assert!(matches!(
            UncertainPose::new(Se2::identity(), c),
            Err(BeliefError::NotPsd(_))
        ));
        assert!(matches!(
            UncertainPose::new(Se2::identity(), diag(&[1.0, 1.0])),
            Err(BeliefError::Shape { .. })
        ));
    }

    #[test]
    fn joint_rejects_duplicates() {
        let r = JointPoseBelief::new(vec![1, 1], vec![Se2::identity(), Se2::identity()], DMatrix::zeros(6, 6));
        assert_eq!(r.unwrap_err(), BeliefError::DuplicateKey(1));
    }

    #[test]
    fn marginal_pair_cases() {
        let s = diag(&[1.0, 2.0, 3.0]);
        let pair = PosePairBelief::from_blocks(
            Se2::from_xy_theta(1.0, 0.0, 0.1),
            Se2::from_xy_theta(0.0, 2.0, 0.2),
            &s,
            &(&s * 2.0),
            &(&s * 0.5),
        )
        .unwrap();
        let joint = pair.to_joint([4, 9]).unwrap();
        let back = joint.marginal_pair(4, 9).unwrap();
        assert_eq!(back, pair);
        assert_eq!(joint.marginal_pair(4, 4).unwrap_err(), BeliefError::DegeneratePair(4));
        assert_eq!(joint.marginal_pair(4, 5).unwrap_err(), BeliefError::KeyNotFound(5));
        let bd = joint.block_diagonal().marginal_pair(4, 9).unwrap();
        assert_eq!(bd.cross(), DMatrix::zeros(3, 3));
        // Reversed order swaps blocks and transposes the cross term.
        let rev = joint.marginal_pair(9, 4).unwrap();
        assert_eq!(rev.sigma1(), pair.sigma2());
        assert_eq!(rev.cross(), pair.cross().transpose());
    }

    #[test]
    fn compose_deterministic() {
        let a = sample_pose();
        let b = Se3::from_translation(Vector3::new(1.0, 2.0, 3.0));
        let pair = PosePairBelief::independent(&UncertainPose::certain(a), &UncertainPose::certain(b));
        let out = compose(&pair).unwrap();
        assert_eq!(out.mean(), &a.compose(&b));
        assert_eq!(out.cov(), &DMatrix::zeros(6, 6));
    }

    #[test]
    fn compose_identity_first_adds() {
        let s1 = diag(&[1e-3, 2e-3, 3e-3, 1e-4, 2e-4, 3e-4]);
        let s2 = diag(&[4e-3, 1e-3, 1e-3, 5e-4, 1e-4, 1e-4]);
        let pair = PosePairBelief::independent(
            &UncertainPose::new(Se3::identity(), s1.clone()).unwrap(),
            &UncertainPose::new(sample_pose(), s2.clone()).unwrap(),
        );
        let out = compose(&pair).unwrap();
        assert!((out.cov() - (s1 + s2)).norm() < 1e-18);
    }

    #[test]
    fn compose_chain_single_and_pair() {
        let s = diag(&[1e-3, 2e-3, 3e-3, 1e-4, 2e-4, 3e-4]);
        let one = JointPoseBelief::new(vec![0], vec![sample_pose()], s.clone()).unwrap();
        let out = compose_chain(&one).unwrap();
        assert_eq!(out.mean(), &sample_pose());
        assert_eq!(out.cov(), one.cov());

        let pair = PosePairBelief::from_blocks(
            sample_pose(),
            Se3::new(So3::rot_z(0.3), Vector3::new(1.0, 0.0, 0.0)),
            &s,
            &(&s * 1.5),
            &(&s * 0.4),
        )
        .unwrap();
        let via_chain = compose_chain(&pair.to_joint([0, 1]).unwrap()).unwrap();
        let direct = compose(&pair).unwrap();
        assert_eq!(via_chain, direct);
    }

    #[test]
    fn compose_matches_written_formula() {
        let s1 = diag(&[1e-3, 2e-3, 3e-3, 1e-4, 2e-4, 3e-4]);
        let s2 = diag(&[4e-3, 1e-3, 1e-3, 5e-4, 1e-4, 1e-4]);
        let mut x = &s1 * 0.3;
        x[(0, 5)] = 1e-4;
        let a = sample_pose();
        let pair = PosePairBelief::from_blocks(a, sample_pose().inverse(), &s1, &s2, &x).unwrap();
        let ad = a.adjoint().into_matrix();
        let expected = &s1 + &ad * &s2 * ad.transpose() + &x * ad.transpose() + &ad * x.transpose();
        let out = compose(&pair).unwrap();
        assert!((out.cov() - expected).norm() < 1e-15);
    }

    #[test]
    fn inverse_identity_and_involution() {
        let s = diag(&[1e-3, 2e-3, 3e-3, 1e-4, 2e-4, 3e-4]);
        let u = UncertainPose::new(Se3::identity(), s.clone()).unwrap();
        assert_eq!(inverse(&u).cov(), &s);
        let v = UncertainPose::new(sample_pose(), s).unwrap();
        let back = inverse(&inverse(&v));
        assert!((back.cov() - v.cov()).norm() < 1e-12);
        assert!((back.mean().matrix() - v.mean().matrix()).norm() < 1e-12);
    }

    #[test]
    fn between_perfect_correlation_cancels() {
        let s = diag(&[5e-3, 5e-3, 1e-5, 1e-5, 1e-5, 6e-3]);
        let t = sample_pose();
        let pair = PosePairBelief::from_blocks(t, t, &s, &s, &s).unwrap();
        let out = between(&pair).unwrap();
        assert!(out.cov().norm() < 1e-15);
        assert!((out.mean().matrix() - Se3::identity().matrix()).norm() < 1e-12);
    }

    #[test]
    fn between_zero_cross_identity_base() {
        let s1 = diag(&[1e-3, 2e-3, 3e-3, 1e-4, 2e-4, 3e-4]);
        let s2 = diag(&[4e-3, 1e-3, 1e-3, 5e-4, 1e-4, 1e-4]);
        let pair = PosePairBelief::independent(
            &UncertainPose::new(Se3::identity(), s1.clone()).unwrap(),
            &UncertainPose::new(sample_pose(), s2.clone()).unwrap(),
        );
        let out = between(&pair).unwrap();
        assert!((out.cov() - (&s1 + &s2)).norm() < 1e-18);
        assert_eq!(between_ignoring_correlation(&pair), out);
    }

    #[test]
    fn ignoring_correlation_zero_alpha() {
        let z = DMatrix::zeros(6, 6);
        let pair = PosePairBelief::from_blocks(sample_pose(), sample_pose(), &z, &z, &z).unwrap();
        assert_eq!(between_ignoring_correlation(&pair).cov(), &z);
    }
}
