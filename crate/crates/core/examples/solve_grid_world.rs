//! Generates a synthetic grid-world pose graph, solves it from odometry and
//! from ground truth, and compares both solutions against ground truth.
//!
//! `cargo run --release --example solve_grid_world -- [sigma_xy sigma_theta seed]`
use uncertain_pose::graph::{grid_world, solve, GridWorldConfig, PoseGraph};
use uncertain_pose::lie::Se2;

fn rms(g: &PoseGraph, truth: &[Se2]) -> f64 {
    let s: f64 = g
        .vertices()
        .iter()
        .map(|(&k, v)| (v.translation() - truth[k as usize].translation()).norm_squared())
        .sum();
    (s / truth.len() as f64).sqrt()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let mut cfg = GridWorldConfig::default();
    if let [sxy, sth, seed] = args[..] {
        cfg.sigma_xy = sxy;
        cfg.sigma_theta = sth;
        cfg.seed = seed as u64;
    }
    let (graph, truth) = grid_world(&cfg);
    println!("{} vertices, {} edges", graph.vertex_count(), graph.edge_count());

    let (solved, report) = solve(&graph)?;
    println!(
        "from odometry: {} iterations, chi2 {:.2} -> {:.2}, converged {}",
        report.iterations, report.initial_chi2, report.final_chi2, report.converged
    );
    println!(
        "position rms: odometry {:.3} m, solved {:.3} m",
        rms(&graph, &truth),
        rms(&solved, &truth)
    );

    let mut from_truth = PoseGraph::new();
    for (k, t) in truth.iter().enumerate() {
        from_truth.add_vertex(k as u64, *t)?;
    }
    for e in graph.edges() {
        from_truth.add_edge(e.from, e.to, e.measurement, e.information);
    }
    let (_, report) = solve(&from_truth)?;
    println!(
        "from ground truth: {} iterations, chi2 {:.2}",
        report.iterations, report.final_chi2
    );
    Ok(())
}
