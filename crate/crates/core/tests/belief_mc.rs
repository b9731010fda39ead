mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use uncertain_pose::belief::{
    between, between_ignoring_correlation, compose, compose_chain, inverse, PosePairBelief, UncertainPose,
};
use uncertain_pose::mc::{build_chain_joint, ChainNoiseSpec};
use uncertain_pose::{LieGroup, Se2, Se3, Twist};

const M: usize = 100_000;

fn pert<G: LieGroup>(v: DVector<f64>, mean: &G) -> G {
    G::exp(&twist_of(v)).unwrap().compose(mean)
}

fn residual<G: LieGroup>(t: &G, center: &G) -> DVector<f64> {
    t.compose(&center.inverse()).log().unwrap().into_vector()
}

fn random_pair<G: LieGroup>(seed: u64, trace: f64) -> PosePairBelief<G> {
    let mut r = rng(seed);
    let a: G = random_pose(&mut r);
    let b: G = random_pose(&mut r);
    PosePairBelief::new(a, b, random_cov(&mut r, 2 * G::DOF, trace)).unwrap()
}

fn check_compose<G: LieGroup>(seed: u64) -> f64 {
    let pair = random_pair::<G>(seed, 0.05);
    let out = compose(&pair).unwrap();
    let m = G::DOF;
    let oracle = mc_oracle(pair.cov(), M, seed + 100, |x| {
        let t1 = pert(x.rows(0, m).into_owned(), pair.first());
        let t2 = pert(x.rows(m, m).into_owned(), pair.second());
        residual(&t1.compose(&t2), out.mean())
    });
    rel_frob(out.cov(), &oracle)
}

fn check_between<G: LieGroup>(seed: u64) -> f64 {
    let pair = random_pair::<G>(seed, 0.05);
    let out = between(&pair).unwrap();
    let m = G::DOF;
    let oracle = mc_oracle(pair.cov(), M, seed + 200, |x| {
        let t1 = pert(x.rows(0, m).into_owned(), pair.first());
        let t2 = pert(x.rows(m, m).into_owned(), pair.second());
        residual(&t1.inverse().compose(&t2), out.mean())
    });
    rel_frob(out.cov(), &oracle)
}

fn check_inverse<G: LieGroup>(seed: u64) -> f64 {
    let mut r = rng(seed);
    let u = UncertainPose::new(random_pose::<G>(&mut r), random_cov(&mut r, G::DOF, 0.05)).unwrap();
    let out = inverse(&u);
    let oracle = mc_oracle(u.cov(), M, seed + 300, |x| {
        residual(&pert(x.clone(), u.mean()).inverse(), out.mean())
    });
    rel_frob(out.cov(), &oracle)
}

#[test]
fn compose_matches_sampling() {
    for s in 0..3 {
        let e3 = check_compose::<Se3>(s);
        let e2 = check_compose::<Se2>(s + 10);
        assert!(e3 < 0.10 && e2 < 0.10, "seed {s}: {e3} {e2}");
    }
}

#[test]
fn between_matches_sampling() {
    for s in 0..3 {
        let e3 = check_between::<Se3>(s + 20);
        let e2 = check_between::<Se2>(s + 30);
        assert!(e3 < 0.10 && e2 < 0.10, "seed {s}: {e3} {e2}");
    }
}

#[test]
fn inverse_matches_sampling() {
    for s in 0..3 {
        let e3 = check_inverse::<Se3>(s + 40);
        let e2 = check_inverse::<Se2>(s + 50);
        assert!(e3 < 0.10 && e2 < 0.10, "seed {s}: {e3} {e2}");
    }
}

#[test]
fn inverse_pure_rotation_small_noise() {
    let mean = Se3::exp(&Twist::from_slice(&[0.0, 0.0, 0.0, 0.3, -0.2, 1.1]).unwrap()).unwrap();
    let u = UncertainPose::new(mean, diag(&[0.005, 0.005, 1e-5, 1e-5, 1e-5, 0.006]) * 0.1).unwrap();
    let out = inverse(&u);
    let oracle = mc_oracle(u.cov(), M, 7, |x| {
        residual(&pert(x.clone(), u.mean()).inverse(), out.mean())
    });
    assert!(rel_frob(out.cov(), &oracle) < 0.02);
}

#[test]
fn single_step_compose_with_correlated_cross_block() {
    let step = Se3::exp(&Twist::from_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
    let s = diag(&[0.001, 1e-5, 1e-5, 1e-5, 1e-5, 0.003]);
    let pair = PosePairBelief::from_blocks(step, step, &s, &s, &(&s * 0.4)).unwrap();
    let out = compose(&pair).unwrap();
    let oracle = mc_oracle(pair.cov(), 1_000_000, 11, |x| {
        let t1 = pert(x.rows(0, 6).into_owned(), pair.first());
        let t2 = pert(x.rows(6, 6).into_owned(), pair.second());
        residual(&t1.compose(&t2), out.mean())
    });
    assert!(rel_frob(out.cov(), &oracle) < 0.05);
}

#[test]
fn ten_step_chain_against_trajectories() {
    let joint = build_chain_joint(&ChainNoiseSpec::<Se3>::forward_steps(3.0, 3.0, 10, 0.4)).unwrap();
    let out = compose_chain(&joint).unwrap();
    let t = out.mean().translation();
    assert!((t - nalgebra::Vector3::new(10.0, 0.0, 0.0)).norm() < 1e-12);
    let oracle = mc_oracle(joint.cov(), 10_000, 12, |x| {
        let fin = joint.means().iter().enumerate().fold(Se3::identity(), |acc, (i, m)| {
            acc.compose(&pert(x.rows(6 * i, 6).into_owned(), m))
        });
        residual(&fin, out.mean())
    });
    assert!(rel_frob(out.cov(), &oracle) < 0.10, "{}", rel_frob(out.cov(), &oracle));
}

#[test]
fn between_recovers_composed_increment() {
    // T_ik = T_ij T_jk with independent T_jk; between(T_ij, T_ik) returns T_jk.
    let mut r = rng(60);
    let tij: Se3 = random_pose(&mut r);
    let tjk: Se3 = random_pose(&mut r);
    let sij = random_cov(&mut r, 6, 0.01);
    let sjk = random_cov(&mut r, 6, 0.01);
    let ad = tij.adjoint().into_matrix();
    let sik = &sij + &ad * &sjk * ad.transpose();
    let pair = PosePairBelief::from_blocks(tij, tij.compose(&tjk), &sij, &sik, &sij).unwrap();
    let out = between(&pair).unwrap();
    assert!((out.mean().matrix() - tjk.matrix()).norm() < 1e-9);
    assert!(rel_frob(out.cov(), &sjk) < 0.15);
}

#[test]
fn compose_cross_block_not_monotone_away_from_identity() {
    let a = Se3::exp(&Twist::from_slice(&[2.0, 0.0, 0.0, 0.0, 0.0, 2.5]).unwrap()).unwrap();
    let s = diag(&[0.01, 0.01, 0.01, 0.001, 0.001, 0.001]);
    let cov = |c: f64| {
        let p = PosePairBelief::from_blocks(a, Se3::identity(), &s, &s, &(&s * c)).unwrap();
        compose(&p).unwrap().into_parts().1
    };
    let d = cov(0.5) - cov(0.0);
    assert!(d.symmetric_eigen().eigenvalues.min() < -1e-6);
}

#[test]
fn cross_block_orders_outputs() {
    let mut r = rng(70);
    let a: Se3 = random_pose(&mut r);
    let b: Se3 = random_pose(&mut r);
    let s = random_cov(&mut r, 6, 0.02);
    let eig_min = |m: &DMatrix<f64>| m.clone().symmetric_eigen().eigenvalues.min();
    let mut prev_between: Option<DMatrix<f64>> = None;
    let mut prev_compose: Option<DMatrix<f64>> = None;
    for c in [0.0, 0.3, 0.6, 0.9] {
        let pair = PosePairBelief::from_blocks(a, b, &s, &s, &(&s * c)).unwrap();
        let bw = between(&pair).unwrap().into_parts().1;
        // For compose the added term c (S Ad^T + Ad S) is only PSD when Ad = I.
        let at_identity = PosePairBelief::from_blocks(Se3::identity(), b, &s, &s, &(&s * c)).unwrap();
        let cp = compose(&at_identity).unwrap().into_parts().1;
        if let (Some(pb), Some(pc)) = (&prev_between, &prev_compose) {
            assert!(eig_min(&(pb - &bw)) > -1e-12);
            assert!(eig_min(&(&cp - pc)) > -1e-12);
        }
        prev_between = Some(bw);
        prev_compose = Some(cp);
    }
    let pair = PosePairBelief::from_blocks(a, b, &s, &s, &(&s * 0.5)).unwrap();
    assert!(between_ignoring_correlation(&pair).cov().trace() > between(&pair).unwrap().cov().trace());
}
