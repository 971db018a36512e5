//! Depth error metrics, similarity alignment and Chamfer distances.

mod chamfer;
mod kdtree;
mod metrics;
mod procrustes;

pub use chamfer::{chamfer_distance, optimize_scale_chamfer, sample_mesh_surface, ChamferDirection, DEFAULT_SURFACE_SAMPLES};
pub use kdtree::KdTree;
pub use metrics::{depth_metrics, summarize, DepthMetrics, MetricSummary};
pub use procrustes::{align_trajectories, procrustes_align, AlignmentResult};
