//! Standalone graph solve: per-vertex solution and a report row.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::csv::{float, Table};
use super::slam::input_graph;
use super::{check_file, usage, ExperimentError};
use crate::graph::{solve, GridWorldConfig, PoseGraph, SolveReport};

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SolveGraphParams {
    /// g2o/TORO file. A synthetic grid world is generated when absent.
    pub graph: Option<PathBuf>,
    pub grid_world: GridWorldConfig,
}

impl SolveGraphParams {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        match &self.graph {
            Some(p) => check_file("solve-graph.graph", p),
            None if self.grid_world.poses < 2 => Err(usage("solve-graph.grid-world.poses must be at least 2")),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveGraphOutput {
    pub graph: PoseGraph,
    pub report: SolveReport,
}

pub fn run_solve_graph(params: &SolveGraphParams) -> Result<SolveGraphOutput, ExperimentError> {
    params.validate()?;
    let graph = input_graph(&params.graph, &params.grid_world)?;
    let (graph, report) = solve(&graph)?;
    Ok(SolveGraphOutput { graph, report })
}

pub fn write_solve_graph(dir: &Path, out: &SolveGraphOutput) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut v = Table::new(&["key", "x", "y", "theta"]);
    for (k, p) in out.graph.vertices() {
        v.row(&[k.to_string(), float(p.x()), float(p.y()), float(p.theta())]);
    }
    let r = &out.report;
    let mut rep = Table::new(&[
        "vertices",
        "edges",
        "iterations",
        "initial_chi2",
        "final_chi2",
        "converged",
    ]);
    rep.row(&[
        out.graph.vertex_count().to_string(),
        out.graph.edge_count().to_string(),
        r.iterations.to_string(),
        float(r.initial_chi2),
        float(r.final_chi2),
        r.converged.to_string(),
    ]);
    Ok(vec![
        v.write(dir, "solve_graph_vertices.csv")?,
        rep.write(dir, "solve_graph_report.csv")?,
    ])
}
