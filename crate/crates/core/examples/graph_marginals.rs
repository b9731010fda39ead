//! Parses a small g2o graph, solves it and recovers the joint covariance of
//! a pose pair, then the relative pose with and without correlation.
use uncertain_pose::belief::{between, between_ignoring_correlation};
use uncertain_pose::graph::{parse_graph, solve, Marginals};

const GRAPH: &str = "\
# square with one loop closure
VERTEX_SE2 0 0 0 0
VERTEX_SE2 1 1.1 0.1 1.5
VERTEX_SE2 2 1.0 1.1 3.2
VERTEX_SE2 3 -0.1 0.9 -1.6
EDGE_SE2 0 1 1 0 1.5708 100 0 0 100 0 400
EDGE_SE2 1 2 1 0 1.5708 100 0 0 100 0 400
EDGE_SE2 2 3 1 0 1.5708 100 0 0 100 0 400
EDGE_SE2 3 0 1 0 1.5708 100 0 0 100 0 400
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = parse_graph(GRAPH)?;
    let (solved, report) = solve(&graph)?;
    println!("{report:?}");
    let marginals = Marginals::new(&solved)?;
    let pair = marginals.pair(1, 3)?;
    println!("joint covariance of poses 1 and 3:\n{:.3e}", pair.cov());
    println!("between, correlated:\n{:.3e}", between(&pair)?.cov());
    println!(
        "between, ignoring correlation:\n{:.3e}",
        between_ignoring_correlation(&pair).cov()
    );
    println!("coordinate form:\n{:.3e}", marginals.coordinate_pair(1, 3)?.cov);
    Ok(())
}
