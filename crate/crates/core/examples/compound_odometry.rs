//! Compounds a chain of correlated odometry steps and checks the predicted
//! covariance of the final pose against sampled trajectories.
use uncertain_pose::belief::compose_chain;
use uncertain_pose::mc::{build_chain_joint, containment_fraction, sample_joint, ChainNoiseSpec, DofMode};
use uncertain_pose::{LieGroup, Se3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let steps = 10;
    let joint = build_chain_joint(&ChainNoiseSpec::<Se3>::forward_steps(3.0, 3.0, steps, 0.4))?;
    let correlated = compose_chain(&joint)?;
    let independent = compose_chain(&joint.block_diagonal())?;
    println!(
        "final mean translation: {:?}",
        correlated.mean().translation().as_slice()
    );

    let batch = sample_joint(&joint, 10_000, 1)?;
    let center = correlated.mean().inverse();
    let cols = (0..batch.len())
        .map(|k| {
            let fin = batch
                .realize(k, &joint)?
                .iter()
                .fold(Se3::identity(), |acc, t| acc.compose(t));
            Ok(fin.compose(&center).log()?.into_vector())
        })
        .collect::<Result<Vec<_>, Box<dyn std::error::Error>>>()?;
    let samples = nalgebra::DMatrix::from_columns(&cols);
    for (name, belief) in [("correlated", &correlated), ("independent", &independent)] {
        let f = containment_fraction(&samples, belief.cov(), 0.999, DofMode::Full)?;
        println!(
            "{name:>12}: {:.2}% of trajectories inside the 99.9% ellipsoid",
            100.0 * f
        );
    }
    Ok(())
}
