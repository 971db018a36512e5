//! Projective TSDF fusion of posed depth maps, mesh extraction and surface
//! coverage on the phantom.

mod coverage;
mod marching;
mod tables;
mod tsdf;

pub use coverage::{coverage_holes, CoverageConfig, CoverageMap, Hole};
pub use marching::extract_mesh;
pub use tsdf::{frame_bounds, fuse_tsdf, GridConfig, VoxelGrid};

use crate::geometry::{DepthMap, Pose};

/// A depth map with its world-from-camera pose.
pub type PosedDepth = (DepthMap<f64>, Pose<f64>);
