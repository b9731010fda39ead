//! Graph oracles: dense information assembly and random test graphs.

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::Rng;
use uncertain_pose::graph::{PoseGraph, GAUGE_PRIOR};
use uncertain_pose::{LieGroup, Se2, Twist};

use super::rng;

pub fn exp2(v: &[f64]) -> Se2 {
    Se2::exp(&Twist::from_slice(v).unwrap()).unwrap()
}

pub fn residual(z: &Se2, ti: &Se2, tj: &Se2) -> DVector<f64> {
    z.inverse()
        .compose(&ti.inverse())
        .compose(tj)
        .log()
        .unwrap()
        .into_vector()
}

/// Dense information matrix over left perturbations, assembled from
/// central differences of the edge residuals.
pub fn dense_information(g: &PoseGraph) -> DMatrix<f64> {
    let keys: Vec<u64> = g.vertices().keys().copied().collect();
    let slot = |k: u64| keys.iter().position(|&x| x == k).unwrap();
    let n = 3 * keys.len();
    let mut info = DMatrix::zeros(n, n);
    let h = 1e-6;
    for e in g.edges() {
        let (ti, tj) = (*g.vertex(e.from).unwrap(), *g.vertex(e.to).unwrap());
        let mut jac = DMatrix::zeros(3, 6);
        for c in 0..6 {
            let mut d = [0.0; 3];
            d[c % 3] = h;
            let m: Vec<f64> = d.iter().map(|v| -v).collect();
            let (plus, minus) = if c < 3 {
                (
                    residual(&e.measurement, &exp2(&d).compose(&ti), &tj),
                    residual(&e.measurement, &exp2(&m).compose(&ti), &tj),
                )
            } else {
                (
                    residual(&e.measurement, &ti, &exp2(&d).compose(&tj)),
                    residual(&e.measurement, &ti, &exp2(&m).compose(&tj)),
                )
            };
            jac.set_column(c, &((plus - minus) / (2.0 * h)));
        }
        let w = DMatrix::from_fn(3, 3, |r, c| e.information[(r, c)]);
        let block = jac.transpose() * w * &jac;
        let idx = [3 * slot(e.from), 3 * slot(e.to)];
        for a in 0..2 {
            for b in 0..2 {
                let mut v = info.view_mut((idx[a], idx[b]), (3, 3));
                v += block.view((3 * a, 3 * b), (3, 3));
            }
        }
    }
    for d in 0..3 {
        info[(d, d)] += GAUGE_PRIOR;
    }
    info
}

/// Random connected graph: an odometry chain plus random extra edges, all
/// measurements noisy and information matrices random SPD.
pub fn random_graph(seed: u64, n: usize) -> PoseGraph {
    let mut r = rng(seed);
    let truth: Vec<Se2> = (0..n)
        .map(|_| {
            Se2::from_xy_theta(
                r.gen_range(-10.0..10.0),
                r.gen_range(-10.0..10.0),
                r.gen_range(-3.0..3.0),
            )
        })
        .collect();
    let mut g = PoseGraph::new();
    let mut edges: Vec<(usize, usize)> = (1..n).map(|k| (r.gen_range(0..k), k)).collect();
    for _ in 0..n {
        let (a, b) = (r.gen_range(0..n), r.gen_range(0..n));
        if a != b {
            edges.push((a, b));
        }
    }
    for (k, t) in truth.iter().enumerate() {
        let noise = [r.gen_range(-0.2..0.2), r.gen_range(-0.2..0.2), r.gen_range(-0.1..0.1)];
        g.add_vertex(k as u64, exp2(&noise).compose(t)).unwrap();
    }
    for (a, b) in edges {
        let noise = [
            r.gen_range(-0.05..0.05),
            r.gen_range(-0.05..0.05),
            r.gen_range(-0.02..0.02),
        ];
        let z = exp2(&noise).compose(&truth[a].inverse().compose(&truth[b]));
        let l = Matrix3::from_fn(|_, _| r.gen_range(-1.0..1.0));
        let info = l * l.transpose() * 50.0 + Matrix3::identity() * 10.0;
        g.add_edge(a as u64, b as u64, z, info);
    }
    g
}

pub fn block(m: &DMatrix<f64>, a: usize, b: usize) -> DMatrix<f64> {
    m.view((3 * a, 3 * b), (3, 3)).into_owned()
}

pub fn pair_oracle(cov: &DMatrix<f64>, a: usize, b: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(6, 6);
    out.view_mut((0, 0), (3, 3)).copy_from(&block(cov, a, a));
    out.view_mut((0, 3), (3, 3)).copy_from(&block(cov, a, b));
    out.view_mut((3, 0), (3, 3)).copy_from(&block(cov, b, a));
    out.view_mut((3, 3), (3, 3)).copy_from(&block(cov, b, b));
    out
}
