use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PosedDepth;
use crate::error::{Error, Result};
use crate::geometry::{Grid, Intrinsics};
use crate::phantom::Phantom;

fn default_cells_u() -> usize {
    128
}

fn default_cells_theta() -> usize {
    360
}

fn default_depth_tolerance() -> f64 {
    0.02
}

fn default_min_incidence() -> f64 {
    5.0
}

/// Sampling of the phantom wall and the visibility test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    /// Axial extent `[u_min, u_max]` of the surveyed wall.
    pub u_range: [f64; 2],
    #[serde(default = "default_cells_u")]
    pub cells_u: usize,
    #[serde(default = "default_cells_theta")]
    pub cells_theta: usize,
    /// Allowed depth disagreement, relative to the cell depth.
    #[serde(default = "default_depth_tolerance")]
    pub depth_tolerance: f64,
    /// Minimum elevation of the viewing ray above the wall, in degrees.
    #[serde(default = "default_min_incidence")]
    pub min_incidence_deg: f64,
}

impl CoverageConfig {
    pub fn new(u_min: f64, u_max: f64) -> Self {
        Self {
            u_range: [u_min, u_max],
            cells_u: default_cells_u(),
            cells_theta: default_cells_theta(),
            depth_tolerance: default_depth_tolerance(),
            min_incidence_deg: default_min_incidence(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.u_range;
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("coverage u range must be increasing and finite"));
        }
        if self.cells_u == 0 || self.cells_theta < 3 {
            return Err(Error::invalid("coverage grid needs at least 1 x 3 cells"));
        }
        if !(self.depth_tolerance > 0.0) {
            return Err(Error::invalid("depth tolerance must be positive"));
        }
        if !(0.0..90.0).contains(&self.min_incidence_deg) {
            return Err(Error::invalid("incidence threshold must lie in [0, 90) degrees"));
        }
        Ok(())
    }

    fn du(&self) -> f64 {
        (self.u_range[1] - self.u_range[0]) / self.cells_u as f64
    }

    fn dtheta(&self) -> f64 {
        TAU / self.cells_theta as f64
    }

    /// `(u, theta)` at the center of cell `(iu, itheta)`; theta starts at -pi.
    pub fn cell_center(&self, iu: usize, itheta: usize) -> (f64, f64) {
        (
            self.u_range[0] + (iu as f64 + 0.5) * self.du(),
            -PI + (itheta as f64 + 0.5) * self.dtheta(),
        )
    }
}

/// Connected unobserved region of the wall.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    /// Share of the surveyed wall area.
    pub area_fraction: f64,
    /// Axial extent of the covered cells.
    pub bbox_u: [f64; 2],
    /// Shortest angular interval containing the hole; may extend past pi.
    pub bbox_theta: [f64; 2],
    pub cells: usize,
}

/// Observed cells over the `(u, theta)` wall parameterization. Rows are `u`,
/// columns are `theta`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageMap {
    pub config: CoverageConfig,
    pub observed: Grid<bool>,
    /// Wall area of each cell.
    pub cell_area: Grid<f64>,
    /// Holes sorted by decreasing area.
    pub holes: Vec<Hole>,
}

impl CoverageMap {
    /// Observed share of the wall area.
    pub fn coverage(&self) -> f64 {
        let total: f64 = self.cell_area.as_slice().iter().sum();
        let seen: f64 = self
            .cell_area
            .as_slice()
            .iter()
            .zip(self.observed.as_slice())
            .filter(|(_, o)| **o)
            .map(|(a, _)| a)
            .sum();
        seen / total
    }
}

/// Marks each wall cell observed when its center projects inside some frame,
/// agrees with that frame's depth and is seen at more than the incidence
/// threshold above grazing. Unobserved cells are grouped into 4-connected
/// holes, wrapping around in theta.
pub fn coverage_holes(frames: &[PosedDepth], intrinsics: &Intrinsics<f64>, phantom: &Phantom, config: &CoverageConfig) -> Result<CoverageMap> {
    config.validate()?;
    for (depth, _) in frames {
        if depth.dims() != intrinsics.dims() {
            return Err(Error::DimensionMismatch {
                expected: intrinsics.dims(),
                actual: depth.dims(),
            });
        }
    }
    let views: Vec<_> = frames.iter().map(|(d, pose)| (d, pose.inverse(), *pose.translation())).collect();
    let (nt, nu) = (config.cells_theta, config.cells_u);
    let min_sin = config.min_incidence_deg.to_radians().sin();
    let (w, h) = intrinsics.dims();

    let cells: Vec<(bool, f64)> = (0..nu * nt)
        .into_par_iter()
        .map(|idx| {
            let (iu, it) = (idx / nt, idx % nt);
            let (u, theta) = config.cell_center(iu, it);
            let p = phantom.surface_point(u, theta);
            let normal = phantom.inward_normal(&p);
            let seen = views.iter().any(|(depth, camera_from_world, center)| {
                let view = (center - p).normalize();
                if !(normal.dot(&view) > min_sin) {
                    return false;
                }
                let pc = camera_from_world.transform_point(&p);
                if !(pc.z > 0.0) {
                    return false;
                }
                let (px, _) = intrinsics.project(&pc);
                if !(px.x >= -0.5 && px.y >= -0.5 && px.x < w as f64 - 0.5 && px.y < h as f64 - 0.5) {
                    return false;
                }
                let (x, y) = (((px.x + 0.5) as usize).min(w - 1), ((px.y + 0.5) as usize).min(h - 1));
                depth.get(x, y).is_some_and(|d| (d - pc.z).abs() <= config.depth_tolerance * pc.z)
            });
            (seen, cell_area(phantom, config, u, theta))
        })
        .collect();

    let observed = Grid::from_fn(nt, nu, |x, y| cells[y * nt + x].0);
    let cell_area = Grid::from_fn(nt, nu, |x, y| cells[y * nt + x].1);
    let holes = find_holes(&observed, &cell_area, config);
    Ok(CoverageMap {
        config: config.clone(),
        observed,
        cell_area,
        holes,
    })
}

/// `|dP/du x dP/dtheta| du dtheta` by central differences.
fn cell_area(phantom: &Phantom, config: &CoverageConfig, u: f64, theta: f64) -> f64 {
    let eps = 1e-6 * phantom.params().radius.max(1.0);
    let pu: Vector3<f64> = (phantom.surface_point(u + eps, theta) - phantom.surface_point(u - eps, theta)) / (2.0 * eps);
    let pt = (phantom.surface_point(u, theta + 1e-6) - phantom.surface_point(u, theta - 1e-6)) / 2e-6;
    pu.cross(&pt).norm() * config.du() * config.dtheta()
}

fn find_holes(observed: &Grid<bool>, area: &Grid<f64>, config: &CoverageConfig) -> Vec<Hole> {
    let (nt, nu) = observed.dims();
    let total: f64 = area.as_slice().iter().sum();
    let mut label = vec![false; nt * nu];
    let mut holes = Vec::new();
    for start in 0..nt * nu {
        if label[start] || observed.as_slice()[start] {
            continue;
        }
        label[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut members = Vec::new();
        while let Some(idx) = queue.pop_front() {
            members.push(idx);
            let (iu, it) = (idx / nt, idx % nt);
            let mut neighbors = vec![iu * nt + (it + 1) % nt, iu * nt + (it + nt - 1) % nt];
            if iu > 0 {
                neighbors.push(idx - nt);
            }
            if iu + 1 < nu {
                neighbors.push(idx + nt);
            }
            for n in neighbors {
                if !label[n] && !observed.as_slice()[n] {
                    label[n] = true;
                    queue.push_back(n);
                }
            }
        }
        let fraction = members.iter().map(|i| area.as_slice()[*i]).sum::<f64>() / total;
        let (u_lo, u_hi) = members
            .iter()
            .map(|i| i / nt)
            .fold((usize::MAX, 0), |(lo, hi), iu| (lo.min(iu), hi.max(iu)));
        let du = config.du();
        let mut columns = vec![false; nt];
        for i in &members {
            columns[i % nt] = true;
        }
        let (first, span) = angular_span(&columns);
        let dt = config.dtheta();
        let theta0 = -PI + first as f64 * dt;
        holes.push(Hole {
            area_fraction: fraction,
            bbox_u: [config.u_range[0] + u_lo as f64 * du, config.u_range[0] + (u_hi + 1) as f64 * du],
            bbox_theta: [theta0, theta0 + span as f64 * dt],
            cells: members.len(),
        });
    }
    holes.sort_by(|a, b| b.area_fraction.total_cmp(&a.area_fraction));
    holes
}

/// First column and width of the shortest circular interval covering every
/// occupied column: the complement of the longest empty run.
fn angular_span(columns: &[bool]) -> (usize, usize) {
    let n = columns.len();
    if columns.iter().all(|c| *c) {
        return (0, n);
    }
    let (mut best_end, mut best_len, mut run) = (0, 0, 0);
    for i in 0..2 * n {
        if columns[i % n] {
            run = 0;
        } else {
            run += 1;
            if run > best_len {
                best_len = run.min(n);
                best_end = i % n;
            }
        }
    }
    ((best_end + 1) % n, n - best_len)
}
