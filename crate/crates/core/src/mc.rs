//! Monte-Carlo machinery: correlated twist sampling, second-moment
//! estimators about a reference pose, covariance error metrics and
//! ellipsoid containment.
//!
//! Random streams are ChaCha8 generators. Draws are produced in fixed-size
//! chunks, chunk `c` using stream `c` of the seed, so the result does not
//! depend on how many worker threads run the chunks.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::gamma::gamma_lr;
use thiserror::Error;

use crate::belief::{BeliefError, JointPoseBelief, PoseKey, PosePairBelief};
use crate::lie::{LieError, LieGroup, Se3, Twist};
use crate::linalg::{cholesky_with_jitter, psd_cholesky};

/// Draws generated per random substream.
pub const CHUNK: usize = 2048;

/// Largest tolerated fraction of samples rejected at a log singularity.
pub const MAX_SINGULAR_FRACTION: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("joint covariance is not positive semi-definite (pivot {pivot}, value {value:e})")]
    InvalidSpec { pivot: usize, value: f64 },
    #[error("covariance could not be factored for sampling (pivot {pivot})")]
    Sampling { pivot: usize },
    #[error("{excluded} of {total} samples hit a log singularity")]
    TooManySingular { excluded: usize, total: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// Odometry-chain noise model: `steps` copies of one uncertain step whose
/// consecutive perturbations are correlated with coefficient `rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainNoiseSpec<G: LieGroup> {
    pub step_mean: G,
    pub step_cov: DMatrix<f64>,
    pub steps: usize,
    pub rho: f64,
}

impl ChainNoiseSpec<Se3> {
    /// Unit forward step along x with
    /// `Sigma = diag(0.001 st, 1e-5 st, 1e-5, 1e-5, 1e-5, 0.003 sr)`.
    pub fn forward_steps(sigma_t: f64, sigma_r: f64, steps: usize, rho: f64) -> Self {
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.001 * sigma_t,
            1e-5 * sigma_t,
            1e-5,
            1e-5,
            1e-5,
            0.003 * sigma_r,
        ]));
        Self {
            step_mean: Se3::from_translation(nalgebra::Vector3::new(1.0, 0.0, 0.0)),
            step_cov: cov,
            steps,
            rho,
        }
    }
}

/// Block-tridiagonal joint belief: diagonal blocks `Sigma`, lag-one blocks
/// `rho * Sigma`, keys `0..steps`.
pub fn build_chain_joint<G: LieGroup>(spec: &ChainNoiseSpec<G>) -> Result<JointPoseBelief<G>, McError> {
    let m = G::DOF;
    let n = spec.steps;
    if n == 0 {
        return Err(McError::InvalidArgument("chain needs at least one step".into()));
    }
    if spec.step_cov.nrows() != m || spec.step_cov.ncols() != m {
        return Err(McError::InvalidArgument(format!("step covariance must be {m}x{m}")));
    }
    let mut cov = DMatrix::zeros(m * n, m * n);
    for i in 0..n {
        cov.view_mut((i * m, i * m), (m, m)).copy_from(&spec.step_cov);
        if i + 1 < n {
            let off = &spec.step_cov * spec.rho;
            cov.view_mut((i * m, (i + 1) * m), (m, m)).copy_from(&off);
            cov.view_mut(((i + 1) * m, i * m), (m, m)).copy_from(&off.transpose());
        }
    }
    psd_cholesky(&cov).map_err(|e| McError::InvalidSpec {
        pivot: e.pivot,
        value: e.value,
    })?;
    Ok(JointPoseBelief::new(
        (0..n as PoseKey).collect(),
        vec![spec.step_mean.clone(); n],
        cov,
    )?)
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn chunk_ranges(count: usize) -> Vec<(usize, usize)> {
    (0..count.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(count)))
        .collect()
}

/// Draws `count` vectors from `N(0, L L^T)` for chunk `c`.
fn draw_chunk(l: &DMatrix<f64>, seed: u64, chunk: usize, len: usize) -> DMatrix<f64> {
    let dim = l.nrows();
    let mut rng = chunk_rng(seed, chunk);
    let z = DMatrix::<f64>::from_fn(dim, len, |_, _| StandardNormal.sample(&mut rng));
    l * z
}

fn factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>, McError> {
    cholesky_with_jitter(cov).map_err(|e| McError::Sampling { pivot: e.pivot })
}

/// `count` draws from `N(0, cov)`, one per column.
pub fn sample_gaussian(cov: &DMatrix<f64>, count: usize, seed: u64) -> Result<DMatrix<f64>, McError> {
    let l = factor(cov)?;
    let chunks: Vec<DMatrix<f64>> = chunk_ranges(count)
        .into_par_iter()
        .enumerate()
        .map(|(c, (a, b))| draw_chunk(&l, seed, c, b - a))
        .collect();
    let mut out = DMatrix::zeros(cov.nrows(), count);
    for (c, chunk) in chunks.iter().enumerate() {
        out.columns_mut(c * CHUNK, chunk.ncols()).copy_from(chunk);
    }
    Ok(out)
}

/// Stacked twist draws for a joint belief.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    dof: usize,
    poses: usize,
    draws: DMatrix<f64>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.draws.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.ncols() == 0
    }

    pub fn poses(&self) -> usize {
        self.poses
    }

    /// All draws, one stacked `xi_{1:n}` per column.
    pub fn draws(&self) -> &DMatrix<f64> {
        &self.draws
    }

    /// Perturbation of pose `i` in sample `k`.
    pub fn twist(&self, k: usize, i: usize) -> Twist {
        Twist::new(
            self.draws
                .view((i * self.dof, k), (self.dof, 1))
                .into_owned()
                .column(0)
                .into_owned(),
        )
        .expect("finite draw")
    }

    /// `exp(xi_i^) * T_bar_i` for every pose of sample `k`.
    pub fn realize<G: LieGroup>(&self, k: usize, belief: &JointPoseBelief<G>) -> Result<Vec<G>, McError> {
        belief
            .means()
            .iter()
            .enumerate()
            .map(|(i, mean)| Ok(mean.perturb(&self.twist(k, i))?))
            .collect()
    }
}

pub fn sample_joint<G: LieGroup>(belief: &JointPoseBelief<G>, count: usize, seed: u64) -> Result<SampleBatch, McError> {
    if count < 2 {
        return Err(McError::InvalidArgument("need at least two samples".into()));
    }
    Ok(SampleBatch {
        dof: G::DOF,
        poses: belief.len(),
        draws: sample_gaussian(belief.cov(), count, seed)?,
    })
}

/// Monte-Carlo second moment of an output twist.
///
/// Draws `count` joint samples, realizes the poses, maps them through `f`
/// to an output twist and returns `(1/M) sum xi xi^T` over the samples that
/// did not hit a log singularity. Fails if more than 0.1% were excluded.
pub fn mc_second_moment<G, F>(
    belief: &JointPoseBelief<G>,
    count: usize,
    seed: u64,
    f: F,
) -> Result<DMatrix<f64>, McError>
where
    G: LieGroup,
    F: Fn(&[G]) -> Result<Twist, LieError> + Sync,
{
    let (sum, used, excluded, dim) = mc_fold(belief, count, seed, |poses| f(poses).map(Twist::into_vector))?;
    if used == 0 {
        return Ok(DMatrix::zeros(dim, dim));
    }
    check_exclusions(excluded, count)?;
    Ok(sum / used as f64)
}

fn check_exclusions(excluded: usize, total: usize) -> Result<(), McError> {
    if excluded as f64 > MAX_SINGULAR_FRACTION * total as f64 {
        return Err(McError::TooManySingular { excluded, total });
    }
    Ok(())
}

#[allow(clippy::type_complexity)]
fn mc_fold<G, F>(
    belief: &JointPoseBelief<G>,
    count: usize,
    seed: u64,
    f: F,
) -> Result<(DMatrix<f64>, usize, usize, usize), McError>
where
    G: LieGroup,
    F: Fn(&[G]) -> Result<DVector<f64>, LieError> + Sync,
{
    if count < 2 {
        return Err(McError::InvalidArgument("need at least two samples".into()));
    }
    let l = factor(belief.cov())?;
    let m = G::DOF;
    let n = belief.len();
    let partials: Vec<(Option<DMatrix<f64>>, usize, usize)> = chunk_ranges(count)
        .into_par_iter()
        .enumerate()
        .map(|(c, (a, b))| {
            let draws = draw_chunk(&l, seed, c, b - a);
            let mut acc: Option<DMatrix<f64>> = None;
            let mut used = 0;
            let mut excluded = 0;
            let mut poses = Vec::with_capacity(n);
            for k in 0..draws.ncols() {
                poses.clear();
                for (i, mean) in belief.means().iter().enumerate() {
                    let xi = Twist::new(draws.view((i * m, k), (m, 1)).column(0).into_owned()).expect("finite draw");
                    poses.push(G::exp(&xi).expect("dimension checked").compose(mean));
                }
                match f(&poses) {
                    Ok(v) => {
                        let outer = &v * v.transpose();
                        match acc.as_mut() {
                            Some(s) => *s += outer,
                            None => acc = Some(outer),
                        }
                        used += 1;
                    }
                    Err(LieError::SingularLog { .. }) => excluded += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok((acc, used, excluded))
        })
        .collect::<Result<_, LieError>>()?;
    let mut sum: Option<DMatrix<f64>> = None;
    let (mut used, mut excluded) = (0, 0);
    for (acc, u, e) in partials {
        used += u;
        excluded += e;
        if let Some(a) = acc {
            match sum.as_mut() {
                Some(s) => *s += a,
                None => sum = Some(a),
            }
        }
    }
    let dim = sum.as_ref().map(|s| s.nrows()).unwrap_or(m);
    Ok((sum.unwrap_or_else(|| DMatrix::zeros(dim, dim)), used, excluded, dim))
}

/// Monte-Carlo relative-pose covariance about `T_bar_12 = T_bar_1^-1 T_bar_2`:
/// `T_m = (exp(xi_1^) T_bar_1)^-1 exp(xi_2^) T_bar_2`,
/// `xi_m = log(T_m T_bar_12^-1)`, `Sigma_mc = (1/M) sum xi_m xi_m^T`.
pub fn mc_relative_cov<G: LieGroup>(
    pair: &PosePairBelief<G>,
    count: usize,
    seed: u64,
) -> Result<DMatrix<f64>, McError> {
    let joint = pair.to_joint([0, 1])?;
    let center_inv = pair.first().inverse().compose(pair.second()).inverse();
    mc_second_moment(&joint, count, seed, |p| {
        p[0].inverse().compose(&p[1]).compose(&center_inv).log()
    })
}

/// Frobenius norm of `sigma - sigma_mc`.
pub fn cov_error(sigma: &DMatrix<f64>, sigma_mc: &DMatrix<f64>) -> Result<f64, McError> {
    if sigma.shape() != sigma_mc.shape() {
        return Err(McError::InvalidArgument(format!(
            "shape mismatch: {:?} vs {:?}",
            sigma.shape(),
            sigma_mc.shape()
        )));
    }
    Ok((sigma - sigma_mc).norm())
}

/// [`cov_error`] after dividing both matrices by `||sigma_mc||_F`.
pub fn normalized_cov_error(sigma: &DMatrix<f64>, sigma_mc: &DMatrix<f64>) -> Result<f64, McError> {
    let scale = sigma_mc.norm();
    if scale == 0.0 {
        return Err(McError::InvalidArgument("reference covariance has zero norm".into()));
    }
    cov_error(&(sigma / scale), &(sigma_mc / scale))
}

/// Which channels enter the Mahalanobis distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofMode {
    Full,
    /// Only the leading `dims` translational channels.
    PositionOnly {
        dims: usize,
    },
}

/// Quantile of the chi-square distribution by bisection on its CDF.
pub fn chi_square_quantile(p: f64, dof: usize) -> f64 {
    assert!((0.0..1.0).contains(&p) && dof > 0);
    let k = dof as f64 / 2.0;
    let cdf = |x: f64| gamma_lr(k, x / 2.0);
    let mut hi = dof as f64 + 10.0;
    while cdf(hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Fraction of sample columns whose squared Mahalanobis distance under
/// `sigma` is within the `p` chi-square quantile.
pub fn containment_fraction(
    samples: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    p: f64,
    mode: DofMode,
) -> Result<f64, McError> {
    let m = sigma.nrows();
    if samples.nrows() != m || sigma.ncols() != m {
        return Err(McError::InvalidArgument(format!(
            "samples have {} channels, covariance is {}x{}",
            samples.nrows(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(McError::InvalidArgument(format!("probability {p} not in (0, 1)")));
    }
    let dims = match mode {
        DofMode::Full => m,
        DofMode::PositionOnly { dims } if dims > 0 && dims <= m => dims,
        DofMode::PositionOnly { dims } => return Err(McError::InvalidArgument(format!("{dims} position channels"))),
    };
    let sub = sigma.view((0, 0), (dims, dims)).into_owned();
    let chol = sub
        .cholesky()
        .ok_or_else(|| McError::InvalidArgument("covariance singular on selected channels".into()))?;
    let threshold = chi_square_quantile(p, dims);
    let inside = (0..samples.ncols())
        .filter(|&k| {
            let x = samples.view((0, k), (dims, 1)).into_owned();
            let y = chol.l().solve_lower_triangular(&x).expect("nonsingular factor");
            y.norm_squared() <= threshold
        })
        .count();
    Ok(inside as f64 / samples.ncols() as f64)
}
