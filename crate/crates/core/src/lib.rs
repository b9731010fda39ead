//! Jointly correlated uncertain rigid-body poses.
//!
//! Poses live on SE(2) or SE(3) (and the rotation groups SO(2), SO(3));
//! uncertainty is a zero-mean Gaussian twist applied on the left of a mean
//! pose. The crate propagates that uncertainty through composition,
//! inversion and relative-pose extraction while keeping cross-correlations
//! between poses, and ships the machinery used to validate it: a
//! coordinate-based (Euler angle) baseline, unscented conversion from
//! coordinate beliefs, a planar pose-graph solver with marginal covariance
//! recovery, and Monte-Carlo estimators.

pub mod belief;
pub mod convert;
pub mod experiments;
pub mod graph;
pub mod lie;
pub mod linalg;
pub mod mc;
pub mod ssc;

pub use belief::{
    between, between_ignoring_correlation, compose, compose_chain, inverse, BeliefError, JointPoseBelief, PoseKey,
    PosePairBelief, UncertainPose,
};
pub use lie::{bch_approx, AdjointMatrix, LieError, LieGroup, Se2, Se3, So2, So3, Twist};
