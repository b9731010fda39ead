use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::linear::{Factor, SolverBackend};
use super::{Edge, GraphError, PoseGraph, DEFAULT_JACOBIAN_STEP, GAUGE_PRIOR};
use crate::lie::{wrap_angle, LieError, LieGroup, Se2, Twist};

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Stop once `(chi2_prev - chi2) / chi2_prev` falls below this.
    pub relative_tolerance: f64,
    pub jacobian_step: f64,
    pub backend: SolverBackend,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            relative_tolerance: 1e-9,
            jacobian_step: DEFAULT_JACOBIAN_STEP,
            backend: SolverBackend::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub initial_chi2: f64,
    pub final_chi2: f64,
    pub converged: bool,
}

fn twist3(v: Vector3<f64>) -> Twist {
    Twist::from_slice(v.as_slice()).expect("finite twist")
}

fn vec3(t: &Twist) -> Vector3<f64> {
    let v = t.as_vector();
    Vector3::new(v[0], v[1], v[2])
}

/// `log(Z^-1 * Ti^-1 * Tj)`.
pub fn edge_residual(z: &Se2, ti: &Se2, tj: &Se2) -> Result<Vector3<f64>, LieError> {
    Ok(vec3(&z.inverse().compose(&ti.inverse()).compose(tj).log()?))
}

/// Residual and its central-difference Jacobians with respect to left
/// perturbations of each endpoint.
pub(crate) fn edge_linearization(
    e: &Edge,
    ti: &Se2,
    tj: &Se2,
    h: f64,
) -> Result<(Vector3<f64>, Matrix3<f64>, Matrix3<f64>), LieError> {
    let r = edge_residual(&e.measurement, ti, tj)?;
    let mut ji = Matrix3::zeros();
    let mut jj = Matrix3::zeros();
    for k in 0..3 {
        let mut d = Vector3::zeros();
        d[k] = h;
        let plus = Se2::exp(&twist3(d))?;
        let minus = Se2::exp(&twist3(-d))?;
        let ri_p = edge_residual(&e.measurement, &plus.compose(ti), tj)?;
        let ri_m = edge_residual(&e.measurement, &minus.compose(ti), tj)?;
        let rj_p = edge_residual(&e.measurement, ti, &plus.compose(tj))?;
        let rj_m = edge_residual(&e.measurement, ti, &minus.compose(tj))?;
        let mut ci = ri_p - ri_m;
        let mut cj = rj_p - rj_m;
        ci[2] = wrap_angle(ci[2]);
        cj[2] = wrap_angle(cj[2]);
        ji.set_column(k, &(ci / (2.0 * h)));
        jj.set_column(k, &(cj / (2.0 * h)));
    }
    Ok((r, ji, jj))
}

/// Normal equations at the current estimate.
pub(crate) struct Linearization {
    pub triplets: Vec<(usize, usize, f64)>,
    pub gradient: DVector<f64>,
}

fn push_block(t: &mut Vec<(usize, usize, f64)>, bi: usize, bj: usize, m: &Matrix3<f64>) {
    for r in 0..3 {
        for c in 0..3 {
            if m[(r, c)] != 0.0 {
                t.push((3 * bi + r, 3 * bj + c, m[(r, c)]));
            }
        }
    }
}

/// Assembles `J^T W J` and `J^T W r` over every edge plus the gauge prior.
/// `anchor_reference` is the pose the prior pulls the anchor towards.
pub(crate) fn linearize(g: &PoseGraph, anchor_reference: &Se2, h: f64) -> Result<Linearization, GraphError> {
    let index = g.index_map();
    let n = g.vertex_count();
    let mut triplets = Vec::with_capacity(36 * g.edge_count() + 9 * n);
    let mut gradient = DVector::zeros(3 * n);
    for e in g.edges() {
        let (a, b) = (index[&e.from], index[&e.to]);
        let (ti, tj) = (g.vertex(e.from)?, g.vertex(e.to)?);
        let (r, ji, jj) = edge_linearization(e, ti, tj, h)?;
        let w = &e.information;
        let wji = w * ji;
        let wjj = w * jj;
        push_block(&mut triplets, a, a, &(ji.transpose() * wji));
        push_block(&mut triplets, a, b, &(ji.transpose() * wjj));
        push_block(&mut triplets, b, a, &(jj.transpose() * wji));
        push_block(&mut triplets, b, b, &(jj.transpose() * wjj));
        let wr = w * r;
        let mut ga = gradient.rows_mut(3 * a, 3);
        ga += ji.transpose() * wr;
        let mut gb = gradient.rows_mut(3 * b, 3);
        gb += jj.transpose() * wr;
    }
    let anchor = g.anchor().ok_or(GraphError::Empty)?;
    let ai = index[&anchor];
    let r0 = vec3(&g.vertex(anchor)?.log_relative_to(anchor_reference)?);
    push_block(&mut triplets, ai, ai, &(Matrix3::identity() * GAUGE_PRIOR));
    let mut g0 = gradient.rows_mut(3 * ai, 3);
    g0 += r0 * GAUGE_PRIOR;
    Ok(Linearization { triplets, gradient })
}

fn chi2(g: &PoseGraph, anchor_reference: &Se2) -> Result<f64, GraphError> {
    let mut total = 0.0;
    for e in g.edges() {
        let r = edge_residual(&e.measurement, g.vertex(e.from)?, g.vertex(e.to)?)?;
        total += (r.transpose() * e.information * r)[0];
    }
    let anchor = g.anchor().ok_or(GraphError::Empty)?;
    let r0 = vec3(&g.vertex(anchor)?.log_relative_to(anchor_reference)?);
    Ok(total + GAUGE_PRIOR * r0.norm_squared())
}

/// Whitened chi2 below this is roundoff; the solve stops there.
pub const CHI2_FLOOR: f64 = 1e-16;

pub fn solve(g: &PoseGraph) -> Result<(PoseGraph, SolveReport), GraphError> {
    solve_with(g, &SolveOptions::default())
}

/// Gauss-Newton with the update `T <- exp(delta) * T` per vertex. The
/// lowest-keyed vertex is held near its initial value by the gauge prior.
pub fn solve_with(g: &PoseGraph, opts: &SolveOptions) -> Result<(PoseGraph, SolveReport), GraphError> {
    g.validate()?;
    g.check_connected()?;
    let anchor = g.anchor().ok_or(GraphError::Empty)?;
    let reference = *g.vertex(anchor)?;
    let mut work = g.clone();
    let n = work.vertex_count();

    let initial = chi2(&work, &reference)?;
    let mut current = initial;
    let mut iterations = 0;
    let mut converged = current <= CHI2_FLOOR;
    let mut increases = 0;
    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let lin = linearize(&work, &reference, opts.jacobian_step)?;
        let factor = Factor::new(3 * n, &lin.triplets, opts.backend)?;
        let rhs = DMatrix::from_column_slice(3 * n, 1, lin.gradient.as_slice());
        let step = -factor.solve(&rhs);
        for (i, pose) in work.vertices_mut().values_mut().enumerate() {
            let d = Vector3::new(step[3 * i], step[3 * i + 1], step[3 * i + 2]);
            *pose = Se2::exp(&twist3(d))?.compose(pose);
        }
        let next = chi2(&work, &reference)?;
        if !next.is_finite() {
            return Err(GraphError::Divergence { iteration: iterations });
        }
        if next > current {
            increases += 1;
            if increases >= 3 {
                return Err(GraphError::Divergence { iteration: iterations });
            }
        } else {
            increases = 0;
        }
        let rel = (current - next).abs() / current;
        log::debug!("gauss-newton iteration {iterations}: chi2 {next:.6e}");
        current = next;
        converged = rel < opts.relative_tolerance || current <= CHI2_FLOOR;
    }
    work.mark_solved();
    Ok((
        work,
        SolveReport {
            iterations,
            initial_chi2: initial,
            final_chi2: current,
            converged,
        },
    ))
}
