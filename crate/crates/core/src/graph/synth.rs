//! Synthetic Manhattan-style world: a robot drives on a square grid with
//! right-angle turns, and revisits produce loop-closure edges.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;
use std::f64::consts::FRAC_PI_2;

use super::PoseGraph;
use crate::belief::PoseKey;
use crate::lie::{LieGroup, Se2, Twist};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct GridWorldConfig {
    pub poses: usize,
    /// Side length of the square grid, in cells.
    pub grid: i64,
    pub turn_probability: f64,
    pub sigma_xy: f64,
    pub sigma_theta: f64,
    /// Minimum index gap for a revisit to become a loop closure.
    pub min_closure_gap: usize,
    pub closure_probability: f64,
    pub seed: u64,
}

impl Default for GridWorldConfig {
    fn default() -> Self {
        Self {
            poses: 500,
            grid: 10,
            turn_probability: 0.3,
            sigma_xy: 0.1,
            sigma_theta: 0.05,
            min_closure_gap: 20,
            closure_probability: 0.6,
            seed: 0,
        }
    }
}

const HEADINGS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Returns the graph, initialized by chaining the noisy odometry, and the
/// ground-truth poses indexed by key.
pub fn grid_world(cfg: &GridWorldConfig) -> (PoseGraph, Vec<Se2>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nxy = Normal::new(0.0, cfg.sigma_xy).expect("finite sigma");
    let nth = Normal::new(0.0, cfg.sigma_theta).expect("finite sigma");
    let info = Matrix3::from_diagonal(&Vector3::new(
        1.0 / (cfg.sigma_xy * cfg.sigma_xy),
        1.0 / (cfg.sigma_xy * cfg.sigma_xy),
        1.0 / (cfg.sigma_theta * cfg.sigma_theta),
    ));
    let noisy = |z: &Se2, rng: &mut ChaCha8Rng| {
        let n = Twist::from_slice(&[nxy.sample(rng), nxy.sample(rng), nth.sample(rng)]).expect("finite");
        Se2::exp(&n).expect("se2 exp").compose(z)
    };

    let (mut cx, mut cy, mut dir) = (0i64, 0i64, 0usize);
    let mut cells = vec![(cx, cy, dir)];
    while cells.len() < cfg.poses {
        let mut d = dir;
        if rng.gen::<f64>() < cfg.turn_probability {
            d = if rng.gen::<bool>() {
                (dir + 1) % 4
            } else {
                (dir + 3) % 4
            };
        }
        let inside = |d: usize| {
            let (nx, ny) = (cx + HEADINGS[d].0, cy + HEADINGS[d].1);
            (0..cfg.grid).contains(&nx) && (0..cfg.grid).contains(&ny)
        };
        if !inside(d) {
            let options: Vec<usize> = [(dir + 1) % 4, (dir + 3) % 4, (dir + 2) % 4]
                .into_iter()
                .filter(|&o| inside(o))
                .collect();
            d = options[rng.gen_range(0..options.len())];
        }
        dir = d;
        cx += HEADINGS[d].0;
        cy += HEADINGS[d].1;
        cells.push((cx, cy, dir));
    }
    let truth: Vec<Se2> = cells
        .iter()
        .map(|&(x, y, d)| Se2::from_xy_theta(x as f64, y as f64, d as f64 * FRAC_PI_2))
        .collect();

    let mut g = PoseGraph::new();
    let mut estimate = truth[0];
    g.add_vertex(0, estimate).expect("fresh key");
    for k in 1..truth.len() {
        let z = noisy(&truth[k - 1].inverse().compose(&truth[k]), &mut rng);
        estimate = estimate.compose(&z);
        g.add_vertex(k as PoseKey, estimate).expect("fresh key");
        g.add_edge(k as PoseKey - 1, k as PoseKey, z, info);
    }

    let mut visits: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, &(x, y, _)) in cells.iter().enumerate() {
        let earlier = visits.entry((x, y)).or_default();
        if let Some(&prev) = earlier.iter().rev().find(|&&p| k - p >= cfg.min_closure_gap) {
            if rng.gen::<f64>() < cfg.closure_probability {
                let z = noisy(&truth[prev].inverse().compose(&truth[k]), &mut rng);
                g.add_edge(prev as PoseKey, k as PoseKey, z, info);
            }
        }
        earlier.push(k);
    }
    (g, truth)
}
