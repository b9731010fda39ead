//! Exponential, logarithm, adjoint and the BCH approximation on SE(3).
use uncertain_pose::{bch_approx, LieGroup, Se3, Twist};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Twists are ordered (rho, phi): translation part first.
    let a = Twist::from_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.3])?;
    let b = Twist::from_slice(&[0.0, 0.5, 0.1, 0.2, 0.0, 0.0])?;
    let ta = Se3::exp(&a)?;
    let tb = Se3::exp(&b)?;
    println!("exp(a) =\n{}", ta.matrix());
    println!("log(exp(a)) = {:?}", ta.log()?.as_vector().as_slice());

    // T exp(xi) = exp(Ad_T xi) T
    let moved = ta.adjoint().apply(&b);
    let lhs = ta.compose(&tb);
    let rhs = Se3::exp(&moved)?.compose(&ta);
    println!(
        "adjoint identity residual: {:.2e}",
        (lhs.matrix() - rhs.matrix()).norm()
    );

    let exact = ta.compose(&tb).log()?;
    for order in 1..=3 {
        let approx = bch_approx::<Se3>(&a, &b, order)?;
        println!(
            "BCH order {order}: error {:.3e}",
            (exact.as_vector() - approx.as_vector()).norm()
        );
    }
    Ok(())
}
