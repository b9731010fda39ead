//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod graphs;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uncertain_pose::{LieGroup, Twist};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix exponential by its power series, stopped once a term drops below
/// 1e-16 in Frobenius norm.
pub fn exp_series(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..200 {
        term = &term * a / k as f64;
        sum += &term;
        if term.norm() < 1e-16 {
            break;
        }
    }
    sum
}

/// Matrix logarithm by the Mercator series about the identity. Only valid
/// close to the identity.
pub fn log_series(t: &DMatrix<f64>) -> DMatrix<f64> {
    let n = t.nrows();
    let x = t - DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::zeros(n, n);
    let mut power = DMatrix::<f64>::identity(n, n);
    for k in 1..400 {
        power = &power * &x;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = &power * (sign / k as f64);
        sum += &term;
        if term.norm() < 1e-17 {
            break;
        }
    }
    sum
}

pub fn random_twist<G: LieGroup>(rng: &mut impl Rng, max_norm: f64) -> Twist {
    let v = DVector::<f64>::from_fn(G::DOF, |_, _| rng.gen_range(-1.0..1.0));
    let scale = rng.gen_range(0.0..max_norm) / v.norm().max(1e-300);
    Twist::new(v * scale).unwrap()
}

/// Twist with translation up to `trans` and rotation angle up to `rot`.
pub fn random_twist_split<G: LieGroup>(rng: &mut impl Rng, trans: f64, rot: f64) -> Twist {
    let m = G::DOF;
    let nr = if G::SPACE_DIM == 2 { 1 } else { 3 };
    let nt = m - nr;
    let mut v = DVector::<f64>::zeros(m);
    let t = DVector::<f64>::from_fn(nt, |_, _| rng.gen_range(-1.0..1.0));
    let p = DVector::<f64>::from_fn(nr, |_, _| rng.gen_range(-1.0..1.0));
    let t = if nt > 0 {
        &t / t.norm() * rng.gen_range(0.0..trans)
    } else {
        t
    };
    let p = &p / p.norm() * rng.gen_range(0.0..rot);
    v.rows_mut(0, nt).copy_from(&t);
    v.rows_mut(nt, nr).copy_from(&p);
    Twist::new(v).unwrap()
}

pub fn random_pose<G: LieGroup>(rng: &mut impl Rng) -> G {
    G::exp(&random_twist_split::<G>(rng, 5.0, 3.0)).unwrap()
}

/// Sample covariance about zero, `(1/M) sum x x^T`, over columns.
pub fn second_moment(samples: &DMatrix<f64>) -> DMatrix<f64> {
    samples * samples.transpose() / samples.ncols() as f64
}

pub fn rel_frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}

/// `count` columns drawn from N(0, cov), factored through the symmetric
/// eigendecomposition so it shares no code with the library sampler.
pub fn gaussian_columns(cov: &DMatrix<f64>, count: usize, seed: u64) -> DMatrix<f64> {
    use rand_distr::StandardNormal;
    let eig = nalgebra::SymmetricEigen::new(cov.clone());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let mut r = rng(seed);
    let z = DMatrix::<f64>::from_fn(cov.nrows(), count, |_, _| r.sample(StandardNormal));
    root * z
}

/// Second moment of `f(draw)` over `count` draws from N(0, cov).
pub fn mc_oracle(
    cov: &DMatrix<f64>,
    count: usize,
    seed: u64,
    f: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> DMatrix<f64> {
    let draws = gaussian_columns(cov, count, seed);
    let cols: Vec<DVector<f64>> = draws.column_iter().map(|c| f(&c.into_owned())).collect();
    second_moment(&DMatrix::from_columns(&cols))
}

/// Random symmetric PSD matrix `A A^T` rescaled to the given trace.
pub fn random_cov(rng: &mut impl Rng, n: usize, trace: f64) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let s = &a * a.transpose();
    let t = s.trace();
    s * (trace / t)
}

pub fn twist_of(v: DVector<f64>) -> Twist {
    Twist::new(v).unwrap()
}

/// Least-squares slope of log(err) against log(s).
pub fn loglog_slope(scales: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
