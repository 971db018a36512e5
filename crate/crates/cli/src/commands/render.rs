use colonorm::io::{self, FrameFiles, PipelineConfig, SceneManifest, INTRINSICS_FILE, MANIFEST_FILE, TRAJECTORY_FILE};
use colonorm::phantom::{make_phantom, make_trajectory, render_frame, ViewType};
use rayon::prelude::*;

use super::create_dir;
use crate::args::{RenderArgs, View};
use crate::error::{in_frame, CliError, CliResult};

pub fn render(args: RenderArgs, mut config: PipelineConfig) -> CliResult<()> {
    let scene = &mut config.scene;
    if let Some(n) = args.frames {
        scene.frames = n;
    }
    if let Some(s) = args.seed {
        scene.seed = s;
    }
    if let Some(v) = args.view {
        scene.view = match v {
            View::DownTheBarrel => ViewType::DownTheBarrel,
            View::EnFace => ViewType::EnFace,
        };
    }
    if let Some(a) = args.fold_amplitude {
        scene.phantom.fold_amplitude = a;
    }
    if let Some(w) = args.width {
        scene.width = w;
    }
    if let Some(h) = args.height {
        scene.height = h;
    }
    if let Some(mu) = args.mu {
        config.illumination.mu = mu;
    }
    config.sync();
    config.validate()?;

    let scene = &config.scene;
    let mu = config.illumination.mu;
    let phantom = make_phantom(scene.phantom.clone())?;
    let k = scene.intrinsics()?;
    let trajectory = make_trajectory(&phantom, scene.view, scene.frames, scene.seed)?;
    let frames = trajectory
        .frames
        .par_iter()
        .map(|(id, pose)| render_frame(&phantom, pose, &k, mu).map_err(|e| in_frame(*id)(CliError::from(e))))
        .collect::<CliResult<Vec<_>>>()?;

    create_dir(&args.out)?;
    let mut files = Vec::with_capacity(frames.len());
    for ((id, _), frame) in trajectory.frames.iter().zip(&frames) {
        let f = FrameFiles::for_id(*id);
        io::write_rgb(&args.out.join(&f.image), &frame.image)?;
        io::write_depth(&args.out.join(&f.depth), &frame.depth)?;
        io::write_normals(&args.out.join(&f.normals), &frame.normals)?;
        files.push(f);
    }
    io::write_trajectory(&args.out.join(TRAJECTORY_FILE), &trajectory.frames)?;
    io::write_intrinsics(&args.out.join(INTRINSICS_FILE), &k)?;
    let manifest = SceneManifest {
        phantom: scene.phantom.clone(),
        view: scene.view,
        seed: scene.seed,
        mu,
        intrinsics: k,
        trajectory: TRAJECTORY_FILE.into(),
        frames: files,
    };
    io::write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    println!("rendered {} frames to {}", frames.len(), args.out.display());
    Ok(())
}

