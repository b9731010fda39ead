//! Converts an Euler-coordinate belief into a Lie-algebra belief with the
//! unscented transform and compares it with first-order linearization.
use nalgebra::{DMatrix, DVector};
use uncertain_pose::convert::{linearized_convert, ut_convert_with_diagnostics, UtConfig, UtMode};
use uncertain_pose::ssc::{SscBelief, SscPose};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mean = SscPose::new(3.0, 3.0, 0.0, 0.0, 0.0, std::f64::consts::FRAC_PI_4)?;
    let cov = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.02, 0.02, 4e-5, 4e-5, 4e-5, 0.024]));
    let belief = SscBelief::single(mean, cov)?;

    for cfg in [
        UtConfig::default(),
        UtConfig {
            kappa: 0.0,
            mode: UtMode::Scaled { alpha: 0.5, beta: 2.0 },
        },
    ] {
        let (out, diag) = ut_convert_with_diagnostics(&belief, &cfg)?;
        println!(
            "{:?}: {} sigma points, residual mean {:.2e}",
            cfg.mode, diag.sigma_point_count, diag.residual_mean_norm
        );
        println!("  twist covariance diagonal {:.4e}", out.cov().diagonal().transpose());
    }
    let lin = linearized_convert(&belief)?;
    println!("linearized diagonal {:.4e}", lin.cov().diagonal().transpose());
    Ok(())
}
