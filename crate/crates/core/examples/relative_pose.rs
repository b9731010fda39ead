//! Relative pose of two correlated poses, with and without the cross
//! covariance, against a Monte-Carlo estimate.
use uncertain_pose::belief::{between, between_ignoring_correlation};
use uncertain_pose::experiments::reference_pair;
use uncertain_pose::mc::{cov_error, mc_relative_cov};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for alpha in [0.5, 1.0, 2.0, 4.0] {
        let pair = reference_pair(alpha);
        let mc = mc_relative_cov(&pair, 10_000, 7)?;
        let with = between(&pair)?;
        let without = between_ignoring_correlation(&pair);
        println!(
            "alpha {alpha:>3}: error with correlation {:.2e}, ignoring it {:.2e}",
            cov_error(with.cov(), &mc)?,
            cov_error(without.cov(), &mc)?
        );
    }
    let rel = between(&reference_pair(1.0))?;
    println!("relative translation: {:?}", rel.mean().translation().as_slice());
    Ok(())
}
