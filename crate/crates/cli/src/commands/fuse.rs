use colonorm::fusion::{coverage_holes, extract_mesh, frame_bounds, fuse_tsdf, CoverageConfig, GridConfig};
use colonorm::integration::resize_depth_bilinear;
use colonorm::io::{self, PipelineConfig, PlyFormat};
use serde::Serialize;

use super::create_dir;
use crate::args::FuseArgs;
use crate::dataset::{depth_path, Dataset};
use crate::error::{in_frame, CliResult};

#[derive(Serialize)]
struct FusionSummary {
    frames: usize,
    voxel_size: f64,
    dims: [usize; 3],
    observed_voxels: usize,
    vertices: usize,
    triangles: usize,
    coverage: f64,
    coverage_u_range: [f64; 2],
    holes: usize,
}

pub fn fuse(args: FuseArgs, config: PipelineConfig) -> CliResult<()> {
    let data = Dataset::open(&args.frames)?;
    let k = *data.intrinsics();
    let (w, h) = k.dims();
    let mut frames = Vec::new();
    for id in data.ids() {
        let load = || -> CliResult<_> {
            let depth = match &args.depth {
                Some(dir) => io::read_depth(&depth_path(dir, id))?,
                None => data.depth(id)?,
            };
            Ok((resize_depth_bilinear(&depth, w, h), data.pose(id)?))
        };
        frames.push(load().map_err(in_frame(id))?);
    }
    let (lo, hi) = frame_bounds(&frames, &k).ok_or(colonorm::Error::EmptySupport("fusion bounds"))?;
    let grid_config = match args.voxel_size.or(config.fusion.voxel_size) {
        Some(v) => GridConfig::with_voxel_size(lo, hi, v)?,
        None => GridConfig::from_bounds(lo, hi)?,
    };
    let grid = fuse_tsdf(&frames, &k, &grid_config)?;
    let mesh = extract_mesh(&grid);

    let phantom = data.phantom()?;
    let u_range = match config.fusion.coverage_u_range {
        Some(r) => r,
        None => {
            let us: Vec<f64> = frames.iter().map(|(_, p)| phantom.tube_coords(p.translation()).u).collect();
            let lo = us.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = us.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pad = if hi - lo > 0.0 { 0.0 } else { phantom.params().radius };
            [lo - pad, hi + pad]
        }
    };
    let coverage = coverage_holes(&frames, &k, &phantom, &CoverageConfig::new(u_range[0], u_range[1]))?;

    create_dir(&args.out)?;
    io::write_ply(&args.out.join("mesh.ply"), &mesh, PlyFormat::BinaryLittleEndian)?;
    io::write_coverage(&args.out.join("coverage.png"), &coverage.observed)?;
    io::write_json(&args.out.join("holes.json"), &coverage.holes)?;
    let summary = FusionSummary {
        frames: frames.len(),
        voxel_size: grid_config.voxel_size,
        dims: grid_config.dims,
        observed_voxels: grid.observed_count(),
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        coverage: coverage.coverage(),
        coverage_u_range: u_range,
        holes: coverage.holes.len(),
    };
    io::write_json(&args.out.join("fusion.json"), &summary)?;
    println!(
        "fused {} frames: {} triangles, coverage {:.3}, {} holes",
        summary.frames, summary.triangles, summary.coverage, summary.holes
    );
    Ok(())
}
