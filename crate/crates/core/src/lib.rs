//! Normal-aware monocular colonoscopy reconstruction toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod geometry;
pub mod illumination;
pub mod integration;
pub mod io;
pub mod losses;
pub mod phantom;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

// Double-precision instantiations of the generic types.
pub type DepthMapF64 = crate::geometry::DepthMap<f64>;
pub type NormalMapF64 = crate::geometry::NormalMap<f64>;
pub type ImageRgbF64 = crate::geometry::ImageRgb<f64>;
pub type MaskF64 = crate::geometry::Mask<f64>;
pub type IntrinsicsF64 = crate::geometry::Intrinsics<f64>;
pub type PoseF64 = crate::geometry::Pose<f64>;
pub type MeshF64 = crate::geometry::Mesh<f64>;
pub type LightFieldF64 = crate::illumination::LightField<f64>;
pub type LossConfigF64 = crate::losses::LossConfig<f64>;
pub type LossReportF64 = crate::losses::LossReport<f64>;
pub type RefinementConfigF64 = crate::integration::RefinementConfig<f64>;
pub type DepthMetricsF64 = crate::evaluation::DepthMetrics<f64>;
