//! Depth and normal conversion, illumination-driven normal refinement and
//! multi-scale integration.

mod integrate;
mod multiscale;
mod normals;
mod refine;
mod resample;
mod supervision;

pub use integrate::{integrate_normals, integrate_normals_from, integrate_normals_screened, Integration};
pub use normals::normals_from_depth;
pub use resample::{area_resample_depth, area_resample_image, resize_depth_bilinear, resize_normals_bilinear};
pub use supervision::{loss_dfn, loss_gt, normal_l1, phase_losses, Phase, PhaseTerms};
pub use refine::{estimate_albedo, refine_iteration, Refinement, RefinementConfig};
pub use multiscale::{falloff_depth, refine_multiscale, MultiscaleResult, PassOutput, RefinementState};
