use std::path::Path;

use colonorm::evaluation::{depth_metrics, summarize, DepthMetrics};
use colonorm::geometry::{DepthMap, Mask};
use colonorm::integration::{refine_multiscale, resize_depth_bilinear};
use colonorm::io::{self, PipelineConfig};
use rayon::prelude::*;
use serde::Serialize;

use super::{create_dir, row, Aggregate, HEADER};
use crate::args::RefineArgs;
use crate::dataset::{depth_path, normals_path, Dataset};
use crate::error::{in_frame, CliError, CliResult};

#[derive(Serialize)]
struct PassSummary {
    resolution: [usize; 2],
    albedo: f64,
    integration_residual: f64,
    energy_start: f64,
    energy_end: f64,
}

#[derive(Serialize)]
struct FrameReport {
    id: usize,
    before: DepthMetrics<f64>,
    after: DepthMetrics<f64>,
    passes: Vec<PassSummary>,
}

#[derive(Serialize)]
struct RefineReport {
    iterations: usize,
    init: String,
    frames: Vec<FrameReport>,
    before: Aggregate,
    after: Aggregate,
}

enum Init<'a> {
    Flat,
    File(&'a Path),
    Directory(&'a Path),
}

impl Init<'_> {
    fn depth(&self, id: usize, base: [usize; 2]) -> CliResult<DepthMap<f64>> {
        Ok(match self {
            Init::Flat => DepthMap::constant(base[0], base[1], 1.0),
            Init::File(p) => io::read_depth(p)?,
            Init::Directory(d) => io::read_depth(&depth_path(d, id))?,
        })
    }
}

fn compare(pred: &DepthMap<f64>, gt: &DepthMap<f64>) -> CliResult<DepthMetrics<f64>> {
    let (w, h) = gt.dims();
    let pred = resize_depth_bilinear(pred, w, h);
    Ok(depth_metrics(&pred, gt, &Mask::ones(w, h))?)
}

pub fn refine(args: RefineArgs, mut config: PipelineConfig) -> CliResult<()> {
    if let Some(n) = args.iterations {
        config.refinement.iterations = n;
    }
    config.sync();
    config.refinement.validate()?;
    let data = Dataset::open(&args.data)?;
    let ids = match &args.frames {
        Some(ids) => ids.clone(),
        None => data.ids(),
    };
    let init = match args.init.as_str() {
        "flat" => Init::Flat,
        p if Path::new(p).is_dir() => Init::Directory(Path::new(p)),
        p => Init::File(Path::new(p)),
    };
    let k = *data.intrinsics();
    let rc = &config.refinement;

    let results = ids
        .par_iter()
        .map(|&id| {
            let run = || -> CliResult<_> {
                let image = data.image(id)?;
                let gt = data.depth(id)?;
                let start = init.depth(id, rc.base_size)?;
                let result = refine_multiscale(&image, &start, &k, rc)?;
                let before = compare(&start, &gt)?;
                let after = compare(&result.state.depth, &gt)?;
                Ok((result, before, after))
            };
            run().map_err(in_frame(id))
        })
        .collect::<CliResult<Vec<_>>>()?;

    create_dir(&args.out)?;
    let mut frames = Vec::with_capacity(ids.len());
    for (&id, (result, before, after)) in ids.iter().zip(&results) {
        let dir = args.out.join(format!("frame_{id:04}"));
        create_dir(&dir)?;
        for (i, pass) in result.passes.iter().enumerate() {
            io::write_depth(&dir.join(format!("depth_pass{}.pfm", i + 1)), &pass.integrated_depth)?;
            io::write_normals(&dir.join(format!("normals_pass{}.pfm", i + 1)), &pass.refined_normals)?;
        }
        let traces: Vec<Vec<f64>> = result.passes.iter().map(|p| p.energy_trace.clone()).collect();
        io::write_energy_csv(&dir.join("energy.csv"), &traces)?;
        io::write_depth(&depth_path(&args.out, id), &result.state.depth)?;
        io::write_normals(&normals_path(&args.out, id), &result.state.normals)?;
        frames.push(FrameReport {
            id,
            before: *before,
            after: *after,
            passes: result
                .passes
                .iter()
                .map(|p| PassSummary {
                    resolution: [p.resolution.0, p.resolution.1],
                    albedo: p.albedo,
                    integration_residual: p.integration_residual,
                    energy_start: p.energy_trace.first().copied().unwrap_or(f64::NAN),
                    energy_end: p.energy_trace.last().copied().unwrap_or(f64::NAN),
                })
                .collect(),
        });
    }
    if frames.is_empty() {
        return Err(CliError::Usage("no frames selected".into()));
    }
    let before: Vec<_> = frames.iter().map(|f| f.before).collect();
    let after: Vec<_> = frames.iter().map(|f| f.after).collect();
    let report = RefineReport {
        iterations: rc.iterations,
        init: args.init.clone(),
        before: summarize(&before)?.into(),
        after: summarize(&after)?.into(),
        frames,
    };
    io::write_json(&args.out.join("refine_report.json"), &report)?;
    println!("{:<6} | {HEADER}", "");
    println!("{:<6} | {}", "before", row(&report.before, None));
    println!("{:<6} | {}", "after", row(&report.after, None));
    Ok(())
}
