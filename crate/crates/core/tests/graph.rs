mod common;

use common::graphs::*;
use common::*;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use uncertain_pose::belief::between;
use uncertain_pose::graph::{
    grid_world, parse_graph, solve, solve_with, to_g2o, GraphError, GridWorldConfig, Marginals, PoseGraph,
    SolveOptions, SolverBackend, GAUGE_PRIOR,
};
use uncertain_pose::{LieGroup, Se2};

#[test]
fn pair_marginals_match_dense_inverse() {
    let mut r = rng(100);
    let mut checked = 0;
    for seed in 0..10 {
        let n = r.gen_range(5..=50);
        let (solved, report) = solve(&random_graph(seed, n)).unwrap();
        assert!(report.converged);
        let cov = dense_information(&solved).try_inverse().unwrap();
        let dense = Marginals::with_options(&solved, 1e-6, SolverBackend::Dense).unwrap();
        let sparse = Marginals::with_options(&solved, 1e-6, SolverBackend::Sparse).unwrap();
        for _ in 0..10 {
            let (a, b) = (r.gen_range(0..n), r.gen_range(0..n));
            if a == b {
                continue;
            }
            let oracle = pair_oracle(&cov, a, b);
            for m in [&dense, &sparse] {
                let got = m.pair(a as u64, b as u64).unwrap();
                assert!(rel_frob(got.cov(), &oracle) < 1e-6, "{}", rel_frob(got.cov(), &oracle));
            }
            checked += 1;
        }
    }
    assert!(checked >= 80);
}

#[test]
fn two_pose_closed_form() {
    let t1 = Se2::from_xy_theta(2.0, -1.0, 0.8);
    let w = Matrix3::new(40.0, 5.0, 1.0, 5.0, 30.0, -2.0, 1.0, -2.0, 90.0);
    let mut g = PoseGraph::new();
    g.add_vertex(0, Se2::identity()).unwrap();
    g.add_vertex(1, t1).unwrap();
    g.add_edge(0, 1, t1, w);
    let (solved, _) = solve(&g).unwrap();
    let pair = Marginals::new(&solved).unwrap().pair(0, 1).unwrap();

    // With J_1 = Ad(T_1^-1) and J_0 = -J_1: Sigma_00 = Sigma_01 = P^-1 and
    // Sigma_11 = P^-1 + Ad(T_1) W^-1 Ad(T_1)^T.
    let p_inv = DMatrix::<f64>::identity(3, 3) / GAUGE_PRIOR;
    let ad = t1.adjoint().into_matrix();
    let w_inv = DMatrix::from_fn(3, 3, |r, c| w.try_inverse().unwrap()[(r, c)]);
    let s11 = &p_inv + &ad * w_inv * ad.transpose();
    let mut expected = DMatrix::zeros(6, 6);
    for (a, b) in [(0, 0), (0, 3), (3, 0)] {
        expected.view_mut((a, b), (3, 3)).copy_from(&p_inv);
    }
    expected.view_mut((3, 3), (3, 3)).copy_from(&s11);
    assert!(rel_frob(pair.cov(), &expected) < 1e-6);
    assert!(rel_frob(&pair.cross(), &p_inv) < 1e-4);
    assert!(pair.cross().norm() > 0.0);
}

#[test]
fn between_is_gauge_invariant() {
    let (g, _) = grid_world(&GridWorldConfig {
        poses: 60,
        ..GridWorldConfig::default()
    });
    let moved = g.transformed(&Se2::from_xy_theta(25.0, -40.0, 2.2));
    let (a, _) = solve(&g).unwrap();
    let (b, _) = solve(&moved).unwrap();
    let (ma, mb) = (Marginals::new(&a).unwrap(), Marginals::new(&b).unwrap());
    for (i, j) in [(0, 59), (10, 20), (5, 45), (30, 31)] {
        let ra = between(&ma.pair(i, j).unwrap()).unwrap();
        let rb = between(&mb.pair(i, j).unwrap()).unwrap();
        assert!(
            rel_frob(rb.cov(), ra.cov()) < 1e-6,
            "({i},{j}) {}",
            rel_frob(rb.cov(), ra.cov())
        );
        assert!((ra.mean().matrix() - rb.mean().matrix()).norm() < 1e-6);
    }
}

#[test]
fn triangle_recovers_consistent_configuration() {
    let truth = [
        Se2::identity(),
        Se2::from_xy_theta(3.0, 0.5, 0.9),
        Se2::from_xy_theta(1.0, 4.0, -2.5),
    ];
    let mut g = PoseGraph::new();
    let mut r = rng(7);
    for (k, t) in truth.iter().enumerate() {
        let t = if k == 0 {
            *t
        } else {
            exp2(&[r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5), r.gen_range(-0.3..0.3)]).compose(t)
        };
        g.add_vertex(k as u64, t).unwrap();
    }
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        g.add_edge(
            a,
            b,
            truth[a as usize].inverse().compose(&truth[b as usize]),
            Matrix3::identity() * 100.0,
        );
    }
    let (solved, report) = solve(&g).unwrap();
    assert!(report.converged);
    assert!(report.final_chi2 < 1e-12, "{}", report.final_chi2);
    let base = solved.vertex(0).unwrap().inverse();
    for (k, t) in truth.iter().enumerate() {
        let got = base.compose(solved.vertex(k as u64).unwrap());
        assert!((got.matrix() - t.matrix()).norm() < 1e-6);
    }
}

#[test]
fn consistent_chain_needs_at_most_one_iteration() {
    let mut g = PoseGraph::new();
    let step = Se2::from_xy_theta(1.0, 0.2, 0.3);
    let mut t = Se2::identity();
    for k in 0..10u64 {
        g.add_vertex(k, t).unwrap();
        if k > 0 {
            g.add_edge(k - 1, k, step, Matrix3::identity());
        }
        t = t.compose(&step);
    }
    let (_, report) = solve(&g).unwrap();
    assert!(report.iterations <= 1);
    assert!(report.final_chi2 < 1e-20);
}

#[test]
fn covariance_insensitive_to_jacobian_step() {
    let (solved, _) = solve(&random_graph(3, 30)).unwrap();
    let a = Marginals::with_options(&solved, 1e-6, SolverBackend::Auto).unwrap();
    let b = Marginals::with_options(&solved, 5e-7, SolverBackend::Auto).unwrap();
    for (i, j) in [(0, 29), (3, 17), (12, 13)] {
        let (ca, cb) = (a.pair(i, j).unwrap(), b.pair(i, j).unwrap());
        assert!(rel_frob(cb.cov(), ca.cov()) < 1e-4);
    }
}

#[test]
fn marginal_matches_resolve_monte_carlo() {
    let cfg = GridWorldConfig {
        poses: 25,
        grid: 3,
        sigma_xy: 0.02,
        sigma_theta: 0.01,
        min_closure_gap: 6,
        seed: 4,
        ..GridWorldConfig::default()
    };
    let (noisy, truth) = grid_world(&cfg);
    let mut ideal = PoseGraph::new();
    for (k, t) in truth.iter().enumerate() {
        ideal.add_vertex(k as u64, *t).unwrap();
    }
    let edges: Vec<_> = noisy.edges().to_vec();
    for e in &edges {
        let z = truth[e.from as usize].inverse().compose(&truth[e.to as usize]);
        ideal.add_edge(e.from, e.to, z, e.information);
    }
    let (ideal, _) = solve(&ideal).unwrap();
    let (i, j) = (3u64, 20u64);
    let pair = Marginals::new(&ideal).unwrap().pair(i, j).unwrap();

    let mut r = rng(5);
    let mut cols = Vec::new();
    for _ in 0..500 {
        let mut g = PoseGraph::new();
        for (k, t) in ideal.vertices() {
            g.add_vertex(*k, *t).unwrap();
        }
        for e in &edges {
            let n = [
                r.sample::<f64, _>(rand_distr::StandardNormal) * cfg.sigma_xy,
                r.sample::<f64, _>(rand_distr::StandardNormal) * cfg.sigma_xy,
                r.sample::<f64, _>(rand_distr::StandardNormal) * cfg.sigma_theta,
            ];
            let z = truth[e.from as usize].inverse().compose(&truth[e.to as usize]);
            g.add_edge(e.from, e.to, exp2(&n).compose(&z), e.information);
        }
        let (s, _) = solve(&g).unwrap();
        let mut v = DVector::zeros(6);
        for (c, k) in [i, j].iter().enumerate() {
            let xi = s
                .vertex(*k)
                .unwrap()
                .compose(&ideal.vertex(*k).unwrap().inverse())
                .log()
                .unwrap();
            v.rows_mut(3 * c, 3).copy_from(xi.as_vector());
        }
        cols.push(v);
    }
    let mc = second_moment(&DMatrix::from_columns(&cols));
    assert!(rel_frob(pair.cov(), &mc) < 0.15, "{}", rel_frob(pair.cov(), &mc));
}

#[test]
fn nearby_pairs_are_more_correlated() {
    let (g, _) = grid_world(&GridWorldConfig::default());
    let (solved, _) = solve(&g).unwrap();
    let m = Marginals::new(&solved).unwrap();
    let coeff = |i: u64, j: u64| {
        let p = m.pair(i, j).unwrap();
        let (a, b, x) = (p.sigma1(), p.sigma2(), p.cross());
        Vector3::from_fn(|k, _| x[(k, k)] / (a[(k, k)] * b[(k, k)]).sqrt())
    };
    let (near, far) = (coeff(50, 51), coeff(50, 450));
    for k in 0..3 {
        assert!(near[k] > far[k], "channel {k}: {near} vs {far}");
    }
}

#[test]
fn g2o_round_trip_preserves_solution() {
    let g = random_graph(11, 20);
    let back = parse_graph(&to_g2o(&g)).unwrap();
    let (a, ra) = solve(&g).unwrap();
    let (b, rb) = solve(&back).unwrap();
    assert_eq!(ra.iterations, rb.iterations);
    for (k, t) in a.vertices() {
        assert!((t.matrix() - b.vertex(*k).unwrap().matrix()).norm() < 1e-9);
    }
}

#[test]
fn disconnected_graph_is_rejected() {
    let mut g = PoseGraph::new();
    for k in 0..4 {
        g.add_vertex(k, Se2::identity()).unwrap();
    }
    g.add_edge(0, 1, Se2::identity(), Matrix3::identity());
    g.add_edge(2, 3, Se2::identity(), Matrix3::identity());
    assert!(matches!(solve(&g), Err(GraphError::Disconnected(_))));
}

#[test]
fn unsolved_graph_has_no_marginals() {
    let g = random_graph(1, 5);
    assert!(matches!(Marginals::new(&g), Err(GraphError::NotSolved)));
    let opts = SolveOptions {
        max_iterations: 100,
        ..SolveOptions::default()
    };
    let (s, _) = solve_with(&g, &opts).unwrap();
    assert!(s.is_solved());
}
