mod common;

use common::*;
use nalgebra::DMatrix;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use uncertain_pose::belief::PosePairBelief;
use uncertain_pose::mc::{
    chi_square_quantile, containment_fraction, cov_error, mc_relative_cov, normalized_cov_error, sample_gaussian,
    DofMode,
};
use uncertain_pose::{LieGroup, Se3};

#[test]
fn chi_square_quantiles() {
    assert!((chi_square_quantile(0.999, 6) - 22.4577).abs() < 1e-4);
    assert!((chi_square_quantile(0.95, 3) - 7.8147).abs() < 1e-4);
    for dof in [1, 2, 3, 6, 12, 30] {
        let d = ChiSquared::new(dof as f64).unwrap();
        for p in [0.5, 0.9, 0.95, 0.999] {
            let q = chi_square_quantile(p, dof);
            assert!((d.cdf(q) - p).abs() < 1e-10, "dof {dof}, p {p}");
        }
    }
}

#[test]
fn containment_calibrated_on_own_distribution() {
    let cov = random_cov(&mut rng(1), 6, 0.05);
    let samples = gaussian_columns(&cov, 100_000, 2);
    let f = containment_fraction(&samples, &cov, 0.999, DofMode::Full).unwrap();
    assert!((f - 0.999).abs() < 0.002, "{f}");
    let f3 = containment_fraction(&samples, &cov, 0.95, DofMode::PositionOnly { dims: 3 }).unwrap();
    assert!((f3 - 0.95).abs() < 0.005, "{f3}");
}

#[test]
fn containment_is_permutation_invariant() {
    let cov = random_cov(&mut rng(3), 3, 1.0);
    let s = gaussian_columns(&cov, 1000, 4);
    let rev = DMatrix::from_fn(3, 1000, |r, c| s[(r, 999 - c)]);
    let a = containment_fraction(&s, &cov, 0.9, DofMode::Full).unwrap();
    let b = containment_fraction(&rev, &cov, 0.9, DofMode::Full).unwrap();
    assert_eq!(a, b);
}

#[test]
fn estimator_error_shrinks_like_inverse_root() {
    let cov = random_cov(&mut rng(5), 6, 1.0);
    let err = |m: usize| {
        (0..8)
            .map(|s| rel_frob(&second_moment(&sample_gaussian(&cov, m, 100 + s).unwrap()), &cov))
            .sum::<f64>()
            / 8.0
    };
    let (small, large) = (err(1_000), err(16_000));
    let ratio = small / large;
    assert!(ratio > 2.5 && ratio < 6.5, "{ratio}");
}

#[test]
fn sampler_matches_covariance_and_ignores_thread_count() {
    let cov = random_cov(&mut rng(6), 12, 2.0);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| sample_gaussian(&cov, 50_000, 9).unwrap());
    let b = four.install(|| sample_gaussian(&cov, 50_000, 9).unwrap());
    assert_eq!(a, b);
    assert!(rel_frob(&second_moment(&a), &cov) < 0.03);
}

#[test]
fn relative_cov_agrees_with_direct_sampling() {
    let mut r = rng(7);
    let a: Se3 = random_pose(&mut r);
    let b: Se3 = random_pose(&mut r);
    let pair = PosePairBelief::new(a, b, random_cov(&mut r, 12, 0.05)).unwrap();
    let lib = mc_relative_cov(&pair, 100_000, 11).unwrap();
    let center = pair.first().inverse().compose(pair.second()).inverse();
    let oracle = mc_oracle(pair.cov(), 100_000, 12, |x| {
        let t1 = Se3::exp(&twist_of(x.rows(0, 6).into_owned()))
            .unwrap()
            .compose(pair.first());
        let t2 = Se3::exp(&twist_of(x.rows(6, 6).into_owned()))
            .unwrap()
            .compose(pair.second());
        t1.inverse().compose(&t2).compose(&center).log().unwrap().into_vector()
    });
    assert!(rel_frob(&lib, &oracle) < 0.03);
}

#[test]
fn error_metrics() {
    let s = random_cov(&mut rng(8), 6, 1.0);
    let i = DMatrix::<f64>::identity(6, 6);
    assert!((cov_error(&(&s + &i), &s).unwrap() - 6f64.sqrt()).abs() < 1e-12);
    assert!((normalized_cov_error(&(&s * 2.0), &s).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(normalized_cov_error(&s, &s).unwrap(), 0.0);
    assert!(normalized_cov_error(&s, &DMatrix::zeros(6, 6)).is_err());
    assert!(cov_error(&s, &DMatrix::zeros(3, 3)).is_err());
}
