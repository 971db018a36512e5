use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use colonorm::geometry::{DepthMap, ImageRgb, Intrinsics, NormalMap, Pose};
use colonorm::io::{self, FrameFiles, SceneManifest, MANIFEST_FILE};
use colonorm::phantom::{make_phantom, Phantom};

use crate::error::{CliError, CliResult};

/// A rendered dataset on disk.
pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: SceneManifest,
    pub poses: BTreeMap<usize, Pose<f64>>,
}

impl Dataset {
    pub fn open(dir: &Path) -> CliResult<Self> {
        let manifest: SceneManifest = io::read_json(&dir.join(MANIFEST_FILE))?;
        manifest.intrinsics.validate()?;
        let poses = io::read_trajectory(&dir.join(&manifest.trajectory))?.into_iter().collect();
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            poses,
        })
    }

    pub fn intrinsics(&self) -> &Intrinsics<f64> {
        &self.manifest.intrinsics
    }

    pub fn phantom(&self) -> CliResult<Phantom> {
        Ok(make_phantom(self.manifest.phantom.clone())?)
    }

    pub fn ids(&self) -> Vec<usize> {
        self.manifest.frames.iter().map(|f| f.id).collect()
    }

    fn files(&self, id: usize) -> CliResult<&FrameFiles> {
        self.manifest
            .frames
            .iter()
            .find(|f| f.id == id)
            .ok_or_else(|| CliError::Usage(format!("frame {id} is not in {}", self.dir.display())))
    }

    pub fn pose(&self, id: usize) -> CliResult<Pose<f64>> {
        self.poses
            .get(&id)
            .copied()
            .ok_or_else(|| CliError::Usage(format!("frame {id} has no pose in {}", self.dir.display())))
    }

    pub fn image(&self, id: usize) -> CliResult<ImageRgb<f64>> {
        Ok(io::read_rgb(&self.dir.join(&self.files(id)?.image))?)
    }

    pub fn depth(&self, id: usize) -> CliResult<DepthMap<f64>> {
        Ok(io::read_depth(&self.dir.join(&self.files(id)?.depth))?)
    }

    pub fn normals(&self, id: usize) -> CliResult<NormalMap<f64>> {
        Ok(io::read_normals(&self.dir.join(&self.files(id)?.normals))?)
    }
}

/// Per-frame prediction files named like a dataset's.
pub fn depth_path(dir: &Path, id: usize) -> PathBuf {
    dir.join(FrameFiles::for_id(id).depth)
}

pub fn normals_path(dir: &Path, id: usize) -> PathBuf {
    dir.join(FrameFiles::for_id(id).normals)
}

/// Frame ids of every `depth_NNNN.pfm` in a directory, sorted.
pub fn depth_ids(dir: &Path) -> CliResult<Vec<usize>> {
    let entries = std::fs::read_dir(dir).map_err(|e| colonorm::Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| colonorm::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(id) = name.strip_prefix("depth_").and_then(|r| r.strip_suffix(".pfm")) {
            if let Ok(id) = id.parse() {
                ids.push(id);
            }
        }
    }
    ids.sort_unstable();
    Ok(ids)
}
