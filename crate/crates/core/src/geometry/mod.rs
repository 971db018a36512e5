//! Camera model, rigid transforms, per-pixel fields and reprojection.

pub mod camera;
pub mod field;
pub mod mesh;
pub mod pose;
pub mod sample;
pub mod warp;

pub use camera::Intrinsics;
pub use field::{median, DepthMap, Grid, ImageRgb, Mask, NormalMap};
pub use mesh::Mesh;
pub use pose::{relative_pose, Pose};
pub use sample::{Bilinear, BilinearSample};
pub use warp::{backproject, project_warp, warp_field, warp_image, warp_point, Warp, WarpDerivative};
