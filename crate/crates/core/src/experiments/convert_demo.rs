//! Representation change demo. A Lie-algebra Gaussian plays the true
//! distribution; the coordinate baseline represents it by the moments of
//! its samples in `(x, y, z, phi, theta, psi)`; the unscented transform maps
//! that back to the Lie algebra. Writes 2-D position loci for all three, a
//! sample cloud, containment fractions and a matplotlib script.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use serde::Deserialize;

use super::csv::{float, Table};
use super::{check_probability, usage, ExperimentError};
use crate::convert::{ut_convert_with_diagnostics, UtConfig, UtMode};
use crate::lie::{LieGroup, Se3, So3, Twist};
use crate::mc::{chi_square_quantile, containment_fraction, sample_gaussian, DofMode};
use crate::ssc::{pose_to_ssc, SscBelief, SscPose};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ConvertDemoParams {
    pub translation: [f64; 3],
    pub yaw_deg: f64,
    /// Diagonal of the true twist covariance before scaling.
    pub sigma: [f64; 6],
    pub scale: f64,
    pub samples: usize,
    pub probability: f64,
    pub locus_points: usize,
    /// Rows of the sample cloud written for plotting.
    pub plot_samples: usize,
    pub kappa: f64,
    /// `None` for standard weights, otherwise `[alpha, beta]` of the scaled set.
    pub scaled: Option<[f64; 2]>,
}

impl Default for ConvertDemoParams {
    fn default() -> Self {
        Self {
            translation: [3.0, 3.0, 0.0],
            yaw_deg: 45.0,
            sigma: [0.005, 0.005, 1e-5, 1e-5, 1e-5, 0.006],
            scale: 4.0,
            samples: 10_000,
            probability: 0.95,
            locus_points: 181,
            plot_samples: 2000,
            kappa: 0.0,
            scaled: None,
        }
    }
}

impl ConvertDemoParams {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.sigma.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(self.scale >= 0.0) {
            return Err(usage("convert-demo.sigma and scale must be nonnegative"));
        }
        if self.samples < 2 || self.locus_points < 2 {
            return Err(usage("convert-demo.samples and locus-points must be at least 2"));
        }
        check_probability("convert-demo.probability", self.probability)?;
        self.ut_config().weights(6).map_err(|e| usage(e.to_string()))?;
        Ok(())
    }

    fn ut_config(&self) -> UtConfig {
        UtConfig {
            kappa: self.kappa,
            mode: match self.scaled {
                None => UtMode::Standard,
                Some([alpha, beta]) => UtMode::Scaled { alpha, beta },
            },
        }
    }

    pub fn mean(&self) -> Se3 {
        let [x, y, z] = self.translation;
        Se3::new(So3::rot_z(self.yaw_deg.to_radians()), Vector3::new(x, y, z))
    }

    pub fn cov(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(&self.sigma)) * self.scale
    }
}

/// Closed polyline in the x-y plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Locus {
    pub name: &'static str,
    pub points: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvertDemoOutput {
    pub loci: Vec<Locus>,
    /// Positions of the first `plot_samples` true samples.
    pub samples: Vec<[f64; 2]>,
    /// `(representation, fraction of true samples inside its ellipsoid)`.
    pub containment: Vec<(&'static str, f64)>,
    pub ssc: SscBelief,
    pub converted_cov: DMatrix<f64>,
    pub residual_mean_norm: f64,
}

/// Offsets on the `p` ellipse of the 2x2 covariance `s`, plus `s^+`.
fn ellipse(s: &DMatrix<f64>, p: f64, n: usize) -> (Vec<DVector<f64>>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(s.clone());
    let r = chi_square_quantile(p, 2).sqrt();
    let pts = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64;
            let mut u = DVector::zeros(2);
            for a in 0..2 {
                let l = eig.eigenvalues[a].max(0.0).sqrt();
                u += eig.eigenvectors.column(a) * (l * if a == 0 { t.cos() } else { t.sin() });
            }
            u * r
        })
        .collect();
    let pinv = s
        .clone()
        .pseudo_inverse(1e-300)
        .unwrap_or_else(|_| DMatrix::zeros(2, 2));
    (pts, pinv)
}

/// Positions of `exp(xi) T_bar` as `xi` runs over the `p` ellipse of the
/// translational x-y marginal, other channels at their conditional mean.
fn lie_locus(name: &'static str, mean: &Se3, cov: &DMatrix<f64>, p: f64, n: usize) -> Result<Locus, ExperimentError> {
    let sxy = cov.view((0, 0), (2, 2)).into_owned();
    let (pts, pinv) = ellipse(&sxy, p, n);
    let gain = cov.columns(0, 2) * pinv;
    let points = pts
        .iter()
        .map(|u| {
            let xi = if u.norm() == 0.0 { DVector::zeros(6) } else { &gain * u };
            let t = mean.perturb(&Twist::new(xi)?)?.translation().xy();
            Ok([t.x, t.y])
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(Locus { name, points })
}

fn fraction_or_nan(samples: &DMatrix<f64>, cov: &DMatrix<f64>, p: f64) -> f64 {
    containment_fraction(samples, cov, p, DofMode::Full).unwrap_or(f64::NAN)
}

pub fn run_convert_demo(params: &ConvertDemoParams, seed: u64) -> Result<ConvertDemoOutput, ExperimentError> {
    params.validate()?;
    let (mean, cov) = (params.mean(), params.cov());
    let p = params.probability;
    let m = params.samples;
    let xi = sample_gaussian(&cov, m, seed)?;
    let poses: Vec<Se3> = (0..m)
        .map(|k| Ok(mean.perturb(&Twist::new(xi.column(k).into_owned())?)?))
        .collect::<Result<_, ExperimentError>>()?;

    // Coordinate moments of the samples.
    let center = pose_to_ssc(&mean)?.to_array();
    let diffs: Vec<[f64; 6]> = poses
        .iter()
        .map(|t| Ok(SscPose::difference(&pose_to_ssc(t)?.to_array(), &center)))
        .collect::<Result<_, ExperimentError>>()?;
    let mut offset = [0.0; 6];
    for d in &diffs {
        for (o, v) in offset.iter_mut().zip(d) {
            *o += v / m as f64;
        }
    }
    let centered = DMatrix::from_fn(6, m, |r, k| diffs[k][r] - offset[r]);
    let ssc_cov = &centered * centered.transpose() / m as f64;
    let mut ssc_mean = center;
    for (c, o) in ssc_mean.iter_mut().zip(offset) {
        *c += o;
    }
    let ssc = SscBelief::single(SscPose::from_slice(&ssc_mean)?, ssc_cov)?;

    let (converted, diag) = ut_convert_with_diagnostics(&ssc, &params.ut_config())?;
    let cmean = converted.means()[0];
    let ccov = converted.cov().clone();

    let cinv = cmean.inverse();
    let conv_samples = DMatrix::from_columns(
        &poses
            .iter()
            .map(|t| Ok(t.compose(&cinv).log()?.into_vector()))
            .collect::<Result<Vec<_>, ExperimentError>>()?,
    );
    let containment = vec![
        ("true", fraction_or_nan(&xi, &cov, p)),
        ("ssc", fraction_or_nan(&centered, ssc.cov(), p)),
        ("converted", fraction_or_nan(&conv_samples, &ccov, p)),
    ];

    let n = params.locus_points;
    let sxy = ssc.cov().view((0, 0), (2, 2)).into_owned();
    let (pts, _) = ellipse(&sxy, p, n);
    let ssc_locus = Locus {
        name: "ssc",
        points: pts.iter().map(|u| [ssc_mean[0] + u[0], ssc_mean[1] + u[1]]).collect(),
    };
    let loci = vec![
        lie_locus("true", &mean, &cov, p, n)?,
        ssc_locus,
        lie_locus("converted", &cmean, &ccov, p, n)?,
    ];
    let samples = poses
        .iter()
        .take(params.plot_samples)
        .map(|t| [t.translation().x, t.translation().y])
        .collect();
    Ok(ConvertDemoOutput {
        loci,
        samples,
        containment,
        ssc,
        converted_cov: ccov,
        residual_mean_norm: diag.residual_mean_norm,
    })
}

const PLOT_SCRIPT: &str = r#"# Plots the convert-demo output: python3 convert_demo_plot.py [DIR]
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

d = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
colors = {"true": "tab:pink", "ssc": "tab:red", "converted": "tab:green"}

with open(d / "convert_demo_samples.csv") as f:
    pts = [(float(r["x"]), float(r["y"])) for r in csv.DictReader(f)]
plt.scatter([p[0] for p in pts], [p[1] for p in pts], s=1, c="0.6", label="samples")

loci = {}
with open(d / "convert_demo_loci.csv") as f:
    for r in csv.DictReader(f):
        loci.setdefault(r["representation"], []).append((float(r["x"]), float(r["y"])))
for name, xy in loci.items():
    plt.plot([p[0] for p in xy], [p[1] for p in xy], color=colors.get(name), label=name)

plt.axis("equal")
plt.legend()
plt.xlabel("x [m]")
plt.ylabel("y [m]")
plt.savefig(d / "convert_demo.pdf")
"#;

pub fn write_convert_demo(dir: &Path, out: &ConvertDemoOutput) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut loci = Table::new(&["representation", "point", "x", "y"]);
    for l in &out.loci {
        for (k, p) in l.points.iter().enumerate() {
            loci.row(&[l.name.to_string(), k.to_string(), float(p[0]), float(p[1])]);
        }
    }
    let mut samples = Table::new(&["sample", "x", "y"]);
    for (k, p) in out.samples.iter().enumerate() {
        samples.row(&[k.to_string(), float(p[0]), float(p[1])]);
    }
    let mut summary = Table::new(&["representation", "containment", "residual_mean_norm"]);
    for &(name, c) in &out.containment {
        let res = if name == "converted" {
            float(out.residual_mean_norm)
        } else {
            String::new()
        };
        summary.row(&[name.to_string(), float(c), res]);
    }
    let script = dir.join("convert_demo_plot.py");
    std::fs::write(&script, PLOT_SCRIPT).map_err(|e| ExperimentError::io(&script, e))?;
    Ok(vec![
        loci.write(dir, "convert_demo_loci.csv")?,
        samples.write(dir, "convert_demo_samples.csv")?,
        summary.write(dir, "convert_demo_summary.csv")?,
        script,
    ])
}
