//! The Euler-angle coordinate baseline: head-to-tail and tail-to-tail
//! propagation with numerical Jacobians.
use nalgebra::DMatrix;
use uncertain_pose::ssc::{head_to_tail, ssc_to_pose, tail_to_tail, SscBelief, SscPose};
use uncertain_pose::LieGroup;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = SscPose::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.3)?;
    let b = SscPose::new(2.0, 0.5, 0.0, 0.0, 0.1, -0.2)?;
    let mut cov = DMatrix::from_diagonal_element(12, 12, 1e-3);
    for k in 0..6 {
        cov[(k, k + 6)] = 5e-4;
        cov[(k + 6, k)] = 5e-4;
    }
    let belief = SscBelief::new(vec![a, b], cov)?;

    let chained = head_to_tail(&belief)?;
    println!("a (+) b = {:?}", chained.mean());
    println!("as a matrix:\n{}", ssc_to_pose(chained.mean()).matrix());
    println!("covariance diagonal: {:.3e}", chained.cov().diagonal().transpose());

    let rel = tail_to_tail(&belief)?;
    println!("(-)a (+) b = {:?}", rel.mean());
    println!("covariance diagonal: {:.3e}", rel.cov().diagonal().transpose());
    Ok(())
}
