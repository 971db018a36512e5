use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PosedDepth;
use crate::error::{Error, Result};
use crate::geometry::{DepthMap, Intrinsics, Pose};

/// Voxels along the bounding-box diagonal when the size is derived.
const DIAGONAL_VOXELS: f64 = 128.0;
const TRUNCATION_VOXELS: f64 = 3.0;
/// Refuse grids that would not fit comfortably in memory.
const MAX_VOXELS: usize = 1 << 28;

/// Placement and resolution of a voxel volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// World position of voxel `(0, 0, 0)`.
    pub origin: [f64; 3],
    pub voxel_size: f64,
    pub dims: [usize; 3],
    /// Truncation distance in scene units.
    pub truncation: f64,
}

impl GridConfig {
    /// Grid covering the box `[min, max]` with the default resolution, padded
    /// by the truncation band on every side.
    pub fn from_bounds(min: Vector3<f64>, max: Vector3<f64>) -> Result<Self> {
        let diagonal = (max - min).norm();
        if !(diagonal > 0.0) || !diagonal.is_finite() {
            return Err(Error::invalid("scene bounds must have positive finite extent"));
        }
        Self::with_voxel_size(min, max, diagonal / DIAGONAL_VOXELS)
    }

    /// Grid covering `[min, max]` at a given voxel size, with a truncation of
    /// three voxels.
    pub fn with_voxel_size(min: Vector3<f64>, max: Vector3<f64>, voxel_size: f64) -> Result<Self> {
        if !(voxel_size > 0.0) || !voxel_size.is_finite() {
            return Err(Error::invalid("voxel size must be positive"));
        }
        if (0..3).any(|i| !(max[i] >= min[i])) {
            return Err(Error::invalid("bounds minimum exceeds maximum"));
        }
        let truncation = TRUNCATION_VOXELS * voxel_size;
        let origin = min.add_scalar(-truncation);
        let extent = max - min;
        let dims = [0, 1, 2].map(|i| ((extent[i] + 2.0 * truncation) / voxel_size).ceil() as usize + 1);
        let config = Self {
            origin: origin.into(),
            voxel_size,
            dims,
            truncation,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size > 0.0) || !self.voxel_size.is_finite() {
            return Err(Error::invalid("voxel size must be positive"));
        }
        if !(self.truncation > self.voxel_size) || !self.truncation.is_finite() {
            return Err(Error::invalid("truncation distance must exceed the voxel size"));
        }
        if self.dims.iter().any(|d| *d < 2) {
            return Err(Error::invalid("grid needs at least two voxels per axis"));
        }
        if self.origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid origin must be finite"));
        }
        let total = self.dims.iter().try_fold(1usize, |acc, d| acc.checked_mul(*d));
        if total.is_none_or(|t| t > MAX_VOXELS) {
            return Err(Error::invalid(format!("grid {:?} has too many voxels", self.dims)));
        }
        Ok(())
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// World position of a voxel center.
    pub fn position(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        Vector3::from(self.origin) + Vector3::new(i as f64, j as f64, k as f64) * self.voxel_size
    }
}

/// World-space bounding box of every valid backprojected pixel.
pub fn frame_bounds(frames: &[PosedDepth], intrinsics: &Intrinsics<f64>) -> Option<(Vector3<f64>, Vector3<f64>)> {
    let mut bounds: Option<(Vector3<f64>, Vector3<f64>)> = None;
    for (depth, pose) in frames {
        for (x, y, _) in depth.values().iter_xy() {
            let Some(d) = depth.get(x, y) else { continue };
            let p = pose.transform_point(&(intrinsics.ray(x as f64, y as f64) * d));
            bounds = Some(match bounds {
                None => (p, p),
                Some((lo, hi)) => (lo.inf(&p), hi.sup(&p)),
            });
        }
    }
    bounds
}

/// Truncated signed distance volume. Values are normalized by the truncation
/// distance, positive in front of the observed surface.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    config: GridConfig,
    tsdf: Vec<f64>,
    weights: Vec<f64>,
}

impl VoxelGrid {
    /// Empty (fully unobserved) volume.
    pub fn new(config: GridConfig) -> Result<Self> {
        config.validate()?;
        let n = config.voxel_count();
        Ok(Self {
            config,
            tsdf: vec![1.0; n],
            weights: vec![0.0; n],
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn dims(&self) -> [usize; 3] {
        self.config.dims
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.config.dims;
        i + nx * (j + ny * k)
    }

    pub fn tsdf(&self, i: usize, j: usize, k: usize) -> f64 {
        self.tsdf[self.index(i, j, k)]
    }

    pub fn weight(&self, i: usize, j: usize, k: usize) -> f64 {
        self.weights[self.index(i, j, k)]
    }

    pub fn is_observed(&self, i: usize, j: usize, k: usize) -> bool {
        self.weight(i, j, k) > 0.0
    }

    pub fn tsdf_values(&self) -> &[f64] {
        &self.tsdf
    }

    pub fn weight_values(&self) -> &[f64] {
        &self.weights
    }

    pub fn observed_count(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// Folds one posed depth map into the volume.
    pub fn integrate(&mut self, depth: &DepthMap<f64>, world_from_camera: &Pose<f64>, intrinsics: &Intrinsics<f64>) -> Result<()> {
        if depth.dims() != intrinsics.dims() {
            return Err(Error::DimensionMismatch {
                expected: intrinsics.dims(),
                actual: depth.dims(),
            });
        }
        let camera_from_world = world_from_camera.inverse();
        let config = &self.config;
        let [nx, ny, _] = config.dims;
        let slice = nx * ny;
        let (w, h) = depth.dims();
        let max_x = w as f64 - 0.5;
        let max_y = h as f64 - 0.5;
        self.tsdf
            .par_chunks_mut(slice)
            .zip(self.weights.par_chunks_mut(slice))
            .enumerate()
            .for_each(|(k, (tsdf, weights))| {
                for j in 0..ny {
                    for i in 0..nx {
                        let p = camera_from_world.transform_point(&config.position(i, j, k));
                        if !(p.z > 0.0) {
                            continue;
                        }
                        let (px, _) = intrinsics.project(&p);
                        if !(px.x >= -0.5 && px.y >= -0.5 && px.x < max_x && px.y < max_y) {
                            continue;
                        }
                        let (x, y) = ((px.x + 0.5) as usize, (px.y + 0.5) as usize);
                        let Some(d) = depth.get(x.min(w - 1), y.min(h - 1)) else { continue };
                        let sdf = d - p.z;
                        if sdf < -config.truncation {
                            continue;
                        }
                        let obs = (sdf / config.truncation).min(1.0);
                        let idx = i + nx * j;
                        let wt = weights[idx];
                        tsdf[idx] = (tsdf[idx] * wt + obs) / (wt + 1.0);
                        weights[idx] = wt + 1.0;
                    }
                }
            });
        Ok(())
    }
}

/// Fuses posed depth maps, in order, into a fresh volume.
pub fn fuse_tsdf(frames: &[PosedDepth], intrinsics: &Intrinsics<f64>, config: &GridConfig) -> Result<VoxelGrid> {
    if frames.is_empty() {
        return Err(Error::invalid("fusion needs at least one frame"));
    }
    let mut grid = VoxelGrid::new(config.clone())?;
    for (depth, pose) in frames {
        grid.integrate(depth, pose, intrinsics)?;
    }
    Ok(grid)
}
