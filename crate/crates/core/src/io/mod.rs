//! File formats: PFM float maps, PNG images, PLY meshes, pose text files,
//! CSV energy traces and JSON/TOML configuration.

mod config;
mod pfm;
mod ply;
mod png;
mod text;

pub use config::{
    EvaluationConfig, FrameFiles, FusionConfig, PipelineConfig, SceneConfig, SceneManifest, INTRINSICS_FILE, MANIFEST_FILE,
    TRAJECTORY_FILE,
};
pub use pfm::{read_depth, read_normals, read_pfm, write_depth, write_light_field, write_normals, write_pfm, FloatMap};
pub use ply::{read_ply, write_ply, PlyFormat};
pub use png::{read_rgb, write_coverage, write_rgb};
pub use text::{
    format_trajectory, read_intrinsics, read_json, read_trajectory, write_energy_csv, write_intrinsics, write_json,
    write_trajectory,
};
