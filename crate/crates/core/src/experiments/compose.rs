//! Compounding of correlated odometry: Monte-Carlo trajectories against the
//! covariance each method predicts for the final pose.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Deserialize;

use super::csv::{float, Table};
use super::{
    all_methods, check_methods, check_positive, check_probability, derive_seed, usage, ExperimentError, Method,
};
use crate::belief::{compose_chain, JointPoseBelief};
use crate::lie::{LieGroup, Se3, Twist};
use crate::mc::{build_chain_joint, containment_fraction, cov_error, sample_joint, ChainNoiseSpec, DofMode};
use crate::ssc::{head_to_tail_chain, numerical_jacobian, pose_to_ssc, SscBelief, SscError, SscPose, JACOBIAN_STEP};

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVar {
    Steps,
    SigmaT,
    SigmaR,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::Steps => "steps",
            SweepVar::SigmaT => "sigma_t",
            SweepVar::SigmaR => "sigma_r",
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Containment {
    Full,
    PositionOnly,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ComposeSweepParams {
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    /// Trajectory length when not swept.
    pub steps: usize,
    pub sigma_t: f64,
    pub sigma_r: f64,
    pub rho: f64,
    pub samples: usize,
    pub probability: f64,
    pub containment: Containment,
    pub methods: Vec<Method>,
    /// Feed the step-to-step correlation into the coordinate baseline. By
    /// default it composes the relations from their marginals alone.
    pub ssc_correlated: bool,
    /// Fills the `wall_ms` column. Off by default so output bytes depend
    /// only on config and seed.
    pub record_timing: bool,
}

impl Default for ComposeSweepParams {
    fn default() -> Self {
        Self {
            sweep: SweepVar::Steps,
            values: vec![2.0, 5.0, 10.0, 15.0, 20.0],
            steps: 10,
            sigma_t: 3.0,
            sigma_r: 3.0,
            rho: 0.4,
            samples: 10_000,
            probability: 0.999,
            containment: Containment::Full,
            methods: all_methods(),
            ssc_correlated: false,
            record_timing: false,
        }
    }
}

impl ComposeSweepParams {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.values.is_empty() {
            return Err(usage("compose-sweep.values must not be empty"));
        }
        for &v in &self.values {
            check_positive("compose-sweep.values", v)?;
            if self.sweep == SweepVar::Steps && v.fract() != 0.0 {
                return Err(usage(format!("step counts must be integers, got {v}")));
            }
        }
        if self.steps == 0 {
            return Err(usage("compose-sweep.steps must be positive"));
        }
        check_positive("compose-sweep.sigma-t", self.sigma_t)?;
        check_positive("compose-sweep.sigma-r", self.sigma_r)?;
        if !(self.rho.abs() < 1.0) {
            return Err(usage(format!(
                "compose-sweep.rho must satisfy |rho| < 1, got {}",
                self.rho
            )));
        }
        if self.samples < 2 {
            return Err(usage("compose-sweep.samples must be at least 2"));
        }
        check_probability("compose-sweep.probability", self.probability)?;
        check_methods(&self.methods)
    }

    /// `(steps, sigma_t, sigma_r)` at sweep value `v`.
    fn point(&self, v: f64) -> (usize, f64, f64) {
        match self.sweep {
            SweepVar::Steps => (v as usize, self.sigma_t, self.sigma_r),
            SweepVar::SigmaT => (self.steps, v, self.sigma_r),
            SweepVar::SigmaR => (self.steps, self.sigma_t, v),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComposeRow {
    pub sweep: SweepVar,
    pub value: f64,
    pub method: Method,
    pub containment: f64,
    pub cov_error: f64,
    pub wall_ms: Option<f64>,
}

/// Coordinates of `exp(xi) * T_bar` per step, linearized at `xi = 0`.
fn ssc_first_order(joint: &JointPoseBelief<Se3>) -> Result<SscBelief, ExperimentError> {
    let n = joint.len();
    let mut jac = DMatrix::zeros(6 * n, 6 * n);
    let mut means = Vec::with_capacity(n);
    for (i, mean) in joint.means().iter().enumerate() {
        let f = |v: &[f64]| -> Result<[f64; 6], SscError> {
            let t = mean.perturb(&Twist::from_slice(v)?)?;
            Ok(pose_to_ssc(&t)?.to_array())
        };
        jac.view_mut((6 * i, 6 * i), (6, 6))
            .copy_from(&numerical_jacobian(f, &[0.0; 6], JACOBIAN_STEP)?);
        means.push(pose_to_ssc(mean)?);
    }
    Ok(SscBelief::new(means, &jac * joint.cov() * jac.transpose())?)
}

fn second_moment(samples: &DMatrix<f64>) -> DMatrix<f64> {
    samples * samples.transpose() / samples.ncols() as f64
}

fn sweep_point(params: &ComposeSweepParams, value: f64, seed: u64) -> Result<Vec<ComposeRow>, ExperimentError> {
    let (steps, sigma_t, sigma_r) = params.point(value);
    let spec = ChainNoiseSpec::<Se3>::forward_steps(sigma_t, sigma_r, steps, params.rho);
    let joint = build_chain_joint(&spec)?;
    let batch = sample_joint(&joint, params.samples, seed)?;
    let finals: Vec<Se3> = (0..batch.len())
        .into_par_iter()
        .map(|k| {
            let poses = batch.realize(k, &joint)?;
            Ok(poses.iter().fold(Se3::identity(), |acc, t| acc.compose(t)))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let mean = joint.means().iter().fold(Se3::identity(), |acc, t| acc.compose(t));

    // Residuals of the final poses in twist coordinates about the mean.
    let mean_inv = mean.inverse();
    let twists: Vec<DVector<f64>> = finals
        .par_iter()
        .map(|t| Ok(t.compose(&mean_inv).log()?.into_vector()))
        .collect::<Result<_, ExperimentError>>()?;
    let lie_samples = DMatrix::from_columns(&twists);
    let lie_mc = second_moment(&lie_samples);
    let mode = match params.containment {
        Containment::Full => DofMode::Full,
        Containment::PositionOnly => DofMode::PositionOnly { dims: 3 },
    };

    let mut rows = Vec::new();
    for &method in &params.methods {
        let start = Instant::now();
        let (cov, samples, reference) = match method {
            Method::LieCorrelated => (compose_chain(&joint)?.into_parts().1, &lie_samples, &lie_mc),
            Method::LieIndependent => (
                compose_chain(&joint.block_diagonal())?.into_parts().1,
                &lie_samples,
                &lie_mc,
            ),
            Method::Ssc => {
                let input = if params.ssc_correlated {
                    joint.clone()
                } else {
                    joint.block_diagonal()
                };
                let out = head_to_tail_chain(&ssc_first_order(&input)?)?;
                let m = out.mean().to_array();
                let cols: Vec<DVector<f64>> = finals
                    .iter()
                    .map(|t| {
                        Ok(DVector::from_row_slice(&SscPose::difference(
                            &pose_to_ssc(t)?.to_array(),
                            &m,
                        )))
                    })
                    .collect::<Result<_, SscError>>()?;
                let s = DMatrix::from_columns(&cols);
                let r = second_moment(&s);
                let wall = start.elapsed();
                let containment = containment_fraction(&s, out.cov(), params.probability, mode)?;
                rows.push(ComposeRow {
                    sweep: params.sweep,
                    value,
                    method,
                    containment,
                    cov_error: cov_error(out.cov(), &r)?,
                    wall_ms: params.record_timing.then_some(wall.as_secs_f64() * 1e3),
                });
                continue;
            }
        };
        let wall = start.elapsed();
        rows.push(ComposeRow {
            sweep: params.sweep,
            value,
            method,
            containment: containment_fraction(samples, &cov, params.probability, mode)?,
            cov_error: cov_error(&cov, reference)?,
            wall_ms: params.record_timing.then_some(wall.as_secs_f64() * 1e3),
        });
    }
    Ok(rows)
}

/// One row per sweep value and method, in sweep order.
pub fn run_compose_sweep(params: &ComposeSweepParams, seed: u64) -> Result<Vec<ComposeRow>, ExperimentError> {
    params.validate()?;
    let mut rows = Vec::new();
    for (i, &v) in params.values.iter().enumerate() {
        log::info!("compose-sweep {} = {v}", params.sweep.name());
        rows.extend(sweep_point(params, v, derive_seed(seed, 1, i as u64))?);
    }
    Ok(rows)
}

pub fn write_compose_sweep(dir: &Path, rows: &[ComposeRow]) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut t = Table::new(&["sweep_var", "value", "method", "containment", "cov_error", "wall_ms"]);
    for r in rows {
        t.row(&[
            r.sweep.name().to_string(),
            float(r.value),
            r.method.name().to_string(),
            float(r.containment),
            float(r.cov_error),
            r.wall_ms.map(float).unwrap_or_default(),
        ]);
    }
    Ok(vec![t.write(dir, "compose_sweep.csv")?])
}
