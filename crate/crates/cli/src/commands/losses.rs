use std::path::Path;

use colonorm::geometry::{relative_pose, Grid};
use colonorm::io::{self, FloatMap, PipelineConfig};
use colonorm::losses::{loss_init_total, Frame, FramePair, LossMap};

use super::create_dir;
use crate::args::LossesArgs;
use crate::dataset::{depth_path, normals_path, Dataset};
use crate::error::{in_frame, CliError, CliResult};

fn load_frame(data: &Dataset, pred: Option<&Path>, id: usize) -> CliResult<Frame<f64>> {
    let image = data.image(id)?;
    let (depth, normals) = match pred {
        Some(dir) => (io::read_depth(&depth_path(dir, id))?, io::read_normals(&normals_path(dir, id))?),
        None => (data.depth(id)?, data.normals(id)?),
    };
    Ok(Frame { image, depth, normals })
}

fn write_map(path: &Path, values: &Grid<f64>) -> CliResult<()> {
    let (width, height) = values.dims();
    let data = values.as_slice().iter().map(|v| *v as f32).collect();
    io::write_pfm(
        path,
        &FloatMap {
            width,
            height,
            channels: 1,
            data,
        },
    )?;
    Ok(())
}

fn masked(map: &LossMap<f64>) -> Grid<f64> {
    Grid::from_fn(map.per_pixel.width(), map.per_pixel.height(), |x, y| {
        if *map.valid.get(x, y) {
            *map.per_pixel.get(x, y)
        } else {
            0.0
        }
    })
}

pub fn losses(args: LossesArgs, mut config: PipelineConfig) -> CliResult<()> {
    let w = &mut config.losses.weights;
    for (slot, flag) in [
        (&mut w.lambda1, args.lambda1),
        (&mut w.lambda2, args.lambda2),
        (&mut w.lambda3, args.lambda3),
        (&mut w.lambda4, args.lambda4),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    config.losses.weights.validate()?;
    if args.dump_maps && args.out.is_none() {
        return Err(CliError::Usage("--dump-maps needs --out".into()));
    }
    let [t, s] = [args.pair[0], args.pair[1]];
    let data = Dataset::open(&args.data)?;
    let target = load_frame(&data, args.pred.as_deref(), t).map_err(in_frame(t))?;
    let source = load_frame(&data, args.pred.as_deref(), s).map_err(in_frame(s))?;
    let pair = FramePair {
        target: &target,
        source: &source,
        pose_t_to_s: relative_pose(&data.pose(t)?, &data.pose(s)?),
        intrinsics: *data.intrinsics(),
    };
    let result = loss_init_total(&pair, &config.losses, None)?;
    if let Some(out) = &args.out {
        create_dir(out)?;
        io::write_json(&out.join(format!("losses_{t:04}_{s:04}.json")), &result.report)?;
        if args.dump_maps {
            let tag = format!("{t:04}_{s:04}");
            write_map(&out.join(format!("photo_{tag}.pfm")), &masked(&result.photo))?;
            write_map(&out.join(format!("norm_{tag}.pfm")), &masked(&result.norm))?;
            write_map(&out.join(format!("depth_{tag}.pfm")), &masked(&result.depth))?;
            write_map(&out.join(format!("orth_{tag}.pfm")), &masked(&result.orth))?;
            write_map(&out.join(format!("mask_{tag}.pfm")), result.mask.weights())?;
        }
    }
    println!("{}", serde_json::to_string_pretty(&result.report).expect("report serializes"));
    Ok(())
}
