//! Pipeline configuration files (TOML or JSON) and the scene manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::DEFAULT_SURFACE_SAMPLES;
use crate::geometry::Intrinsics;
use crate::illumination::IlluminationConfig;
use crate::integration::RefinementConfig;
use crate::losses::LossConfig;
use crate::phantom::{make_phantom, PhantomParams, ViewType};

fn default_frames() -> usize {
    10
}

fn default_size() -> usize {
    64
}

fn default_fov() -> f64 {
    70.0
}

/// Phantom, trajectory and camera of a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub phantom: PhantomParams,
    pub view: ViewType,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_size")]
    pub width: usize,
    #[serde(default = "default_size")]
    pub height: usize,
    /// Horizontal field of view in degrees.
    #[serde(default = "default_fov")]
    pub hfov_deg: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            phantom: PhantomParams::default(),
            view: ViewType::DownTheBarrel,
            frames: default_frames(),
            seed: 0,
            width: default_size(),
            height: default_size(),
            hfov_deg: default_fov(),
        }
    }
}

impl SceneConfig {
    pub fn intrinsics(&self) -> Result<Intrinsics<f64>> {
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return Err(Error::invalid("field of view must lie in (0, 180) degrees"));
        }
        Intrinsics::from_fov(self.hfov_deg.to_radians(), self.width, self.height)
    }

    pub fn validate(&self) -> Result<()> {
        make_phantom(self.phantom.clone())?;
        if self.frames == 0 {
            return Err(Error::invalid("scene needs at least one frame"));
        }
        self.intrinsics().map(|_| ())
    }
}

/// `[fusion]` section.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Voxel edge length; derived from the scene bounds when absent.
    pub voxel_size: Option<f64>,
    /// Axial range for coverage; the trajectory's extent when absent.
    pub coverage_u_range: Option<[f64; 2]>,
}

/// `[evaluation]` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub surface_samples: usize,
    pub seed: u64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            surface_samples: DEFAULT_SURFACE_SAMPLES,
            seed: 0,
        }
    }
}

/// Every configuration section plus dataset and output locations.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scene: SceneConfig,
    pub losses: LossConfig<f64>,
    pub illumination: IlluminationConfig<f64>,
    pub refinement: RefinementConfig<f64>,
    pub fusion: FusionConfig,
    pub evaluation: EvaluationConfig,
    pub dataset: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl PipelineConfig {
    /// Parses TOML for `.toml` files and JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?
        };
        config.sync();
        Ok(config)
    }

    /// Propagates shared settings into the module sections.
    pub fn sync(&mut self) {
        self.refinement.mu = self.illumination.mu;
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.losses.weights.validate()?;
        self.illumination.validate()?;
        self.refinement.validate()?;
        if let Some(v) = self.fusion.voxel_size {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid("voxel size must be positive"));
            }
        }
        if self.evaluation.surface_samples == 0 {
            return Err(Error::invalid("surface sample count must be positive"));
        }
        Ok(())
    }
}

/// Per-frame file names inside a dataset directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameFiles {
    pub id: usize,
    pub image: String,
    pub depth: String,
    pub normals: String,
}

impl FrameFiles {
    pub fn for_id(id: usize) -> Self {
        Self {
            id,
            image: format!("frame_{id:04}.png"),
            depth: format!("depth_{id:04}.pfm"),
            normals: format!("normals_{id:04}.pfm"),
        }
    }
}

/// Description of a rendered dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub phantom: PhantomParams,
    pub view: ViewType,
    pub seed: u64,
    pub mu: f64,
    pub intrinsics: Intrinsics<f64>,
    /// Trajectory file in the pose text format.
    pub trajectory: String,
    pub frames: Vec<FrameFiles>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAJECTORY_FILE: &str = "trajectory.txt";
pub const INTRINSICS_FILE: &str = "intrinsics.json";
