//! Experiment runners behind the command-line tool. Each experiment has a
//! pure `run_*` function returning its rows and a writer producing CSV files
//! in the output directory.
//!
//! Configs are JSON documents:
//!
//! ```json
//! { "experiment": "compose-sweep", "seed": 7, "output-dir": "out",
//!   "compose-sweep": { "sweep": "steps", "values": [2, 5, 10, 15, 20] } }
//! ```
//!
//! Every section is optional and falls back to its defaults. Unknown keys are
//! rejected.

mod compose;
mod convert_demo;
mod csv;
mod relpose;
mod slam;
mod solve_graph;

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::belief::BeliefError;
use crate::convert::ConvertError;
use crate::graph::GraphError;
use crate::lie::LieError;
use crate::mc::McError;
use crate::ssc::SscError;

pub use compose::{run_compose_sweep, write_compose_sweep, ComposeRow, ComposeSweepParams, SweepVar};
pub use convert_demo::{run_convert_demo, write_convert_demo, ConvertDemoOutput, ConvertDemoParams, Locus};
pub use relpose::{reference_pair, run_relpose_alpha_sweep, write_relpose_alpha_sweep, RelposeParams, RelposeRow};
pub use slam::{run_slam_relpose, summarize, write_slam_relpose, SlamRelposeParams, SlamRow, SscReference, SummaryRow};
pub use solve_graph::{run_solve_graph, write_solve_graph, SolveGraphOutput, SolveGraphParams};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Ssc(#[from] SscError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

impl ExperimentError {
    /// 2 for usage and configuration problems, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        ExperimentError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ComposeSweep,
    RelposeAlphaSweep,
    SlamRelpose,
    ConvertDemo,
    SolveGraph,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::ComposeSweep => "compose-sweep",
            Experiment::RelposeAlphaSweep => "relpose-alpha-sweep",
            Experiment::SlamRelpose => "slam-relpose",
            Experiment::ConvertDemo => "convert-demo",
            Experiment::SolveGraph => "solve-graph",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Experiment::ComposeSweep,
            Experiment::RelposeAlphaSweep,
            Experiment::SlamRelpose,
            Experiment::ConvertDemo,
            Experiment::SolveGraph,
        ]
        .into_iter()
        .find(|e| e.name() == s)
    }
}

/// Uncertainty propagation methods compared by the experiments.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LieCorrelated,
    LieIndependent,
    Ssc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::LieCorrelated, Method::LieIndependent, Method::Ssc];

    pub fn name(&self) -> &'static str {
        match self {
            Method::LieCorrelated => "lie-correlated",
            Method::LieIndependent => "lie-independent",
            Method::Ssc => "ssc",
        }
    }
}

pub(crate) fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub compose_sweep: ComposeSweepParams,
    #[serde(default)]
    pub relpose_alpha_sweep: RelposeParams,
    #[serde(default)]
    pub slam_relpose: SlamRelposeParams,
    #[serde(default)]
    pub convert_demo: ConvertDemoParams,
    #[serde(default)]
    pub solve_graph: SolveGraphParams,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Defaults for `experiment`.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: 0,
            output_dir: default_output_dir(),
            jobs: None,
            compose_sweep: Default::default(),
            relpose_alpha_sweep: Default::default(),
            slam_relpose: Default::default(),
            convert_demo: Default::default(),
            solve_graph: Default::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Usage(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the section for the selected experiment.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.jobs == Some(0) {
            return Err(usage("jobs must be at least 1"));
        }
        match self.experiment {
            Experiment::ComposeSweep => self.compose_sweep.validate(),
            Experiment::RelposeAlphaSweep => self.relpose_alpha_sweep.validate(),
            Experiment::SlamRelpose => self.slam_relpose.validate(),
            Experiment::ConvertDemo => self.convert_demo.validate(),
            Experiment::SolveGraph => self.solve_graph.validate(),
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Usage(msg.into())
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<(), ExperimentError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("{name} must be positive, got {v}")))
    }
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<(), ExperimentError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("{name} must lie in (0, 1), got {p}")))
    }
}

pub(crate) fn check_methods(methods: &[Method]) -> Result<(), ExperimentError> {
    if methods.is_empty() {
        Err(usage("methods must not be empty"))
    } else {
        Ok(())
    }
}

pub(crate) fn check_file(name: &str, path: &Path) -> Result<(), ExperimentError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{name}: no such file {}", path.display())))
    }
}

/// Independent seed for sub-task `(a, b)` of a run (splitmix64 finalizer).
pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs the configured experiment and writes its files. Returns the paths
/// written.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, ExperimentError> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| ExperimentError::io(out, e))?;
    log::info!(
        "running {} (seed {}) into {}",
        cfg.experiment.name(),
        cfg.seed,
        out.display()
    );
    match cfg.experiment {
        Experiment::ComposeSweep => {
            let rows = run_compose_sweep(&cfg.compose_sweep, cfg.seed)?;
            write_compose_sweep(out, &rows)
        }
        Experiment::RelposeAlphaSweep => {
            let rows = run_relpose_alpha_sweep(&cfg.relpose_alpha_sweep, cfg.seed)?;
            write_relpose_alpha_sweep(out, &rows)
        }
        Experiment::SlamRelpose => {
            let rows = run_slam_relpose(&cfg.slam_relpose, cfg.seed)?;
            write_slam_relpose(out, &rows)
        }
        Experiment::ConvertDemo => {
            let result = run_convert_demo(&cfg.convert_demo, cfg.seed)?;
            write_convert_demo(out, &result)
        }
        Experiment::SolveGraph => {
            let result = run_solve_graph(&cfg.solve_graph)?;
            write_solve_graph(out, &result)
        }
    }
}
