use std::path::Path;

use colonorm::evaluation::{
    align_trajectories, chamfer_distance, depth_metrics, optimize_scale_chamfer, sample_mesh_surface, summarize, AlignmentResult,
    ChamferDirection, DepthMetrics,
};
use colonorm::geometry::{Mask, Mesh, Pose};
use colonorm::integration::resize_depth_bilinear;
use colonorm::io::{self, PipelineConfig, TRAJECTORY_FILE};
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{row, Aggregate, HEADER};
use crate::args::EvaluateArgs;
use crate::dataset::{depth_ids, depth_path, Dataset};
use crate::error::{in_frame, CliError, CliResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub id: usize,
    pub metrics: DepthMetrics<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub frames: Vec<usize>,
    pub metrics: DepthMetrics<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChamferReport {
    /// One-way distance from the ground-truth surface to the scaled
    /// reconstruction.
    pub distance: f64,
    pub scale: f64,
    pub alignment: AlignmentResult<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub frames: Vec<FrameMetrics>,
    pub folds: Vec<FoldMetrics>,
    /// Mean and population standard deviation across folds.
    pub aggregate: Aggregate,
    pub chamfer: Option<ChamferReport>,
}

/// Metric-wise mean of several frames.
fn mean_metrics(ms: &[DepthMetrics<f64>]) -> DepthMetrics<f64> {
    let n = ms.len() as f64;
    let avg = |f: fn(&DepthMetrics<f64>) -> f64| ms.iter().map(f).sum::<f64>() / n;
    DepthMetrics {
        abs_rel: avg(|m| m.abs_rel),
        sq_rel: avg(|m| m.sq_rel),
        rmse: avg(|m| m.rmse),
        log_rmse: avg(|m| m.log_rmse),
        scale_applied: avg(|m| m.scale_applied),
    }
}

/// Contiguous folds whose sizes differ by at most one.
fn split_folds(n: usize, folds: usize) -> Vec<std::ops::Range<usize>> {
    let (base, extra) = (n / folds, n % folds);
    let mut start = 0;
    (0..folds)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

fn surface_points(mesh: &Mesh<f64>, samples: usize, seed: u64) -> CliResult<Vec<Vector3<f64>>> {
    if mesh.triangles.is_empty() {
        Ok(mesh.vertices.clone())
    } else {
        Ok(sample_mesh_surface(mesh, samples, seed)?)
    }
}

fn chamfer(pred: &Path, gt: &Dataset, config: &PipelineConfig) -> CliResult<Option<ChamferReport>> {
    let (pred_mesh, gt_mesh) = (pred.join("mesh.ply"), gt.dir.join("mesh.ply"));
    if !pred_mesh.exists() || !gt_mesh.exists() {
        return Ok(None);
    }
    let ev = &config.evaluation;
    let gt_points = surface_points(&io::read_ply(&gt_mesh)?, ev.surface_samples, ev.seed)?;
    let recon = surface_points(&io::read_ply(&pred_mesh)?, ev.surface_samples, ev.seed.wrapping_add(1))?;
    let trajectory = pred.join(TRAJECTORY_FILE);
    let alignment = if trajectory.exists() {
        let pred_poses = io::read_trajectory(&trajectory)?;
        let mut a = Vec::new();
        let mut b: Vec<Pose<f64>> = Vec::new();
        for (id, pose) in pred_poses {
            a.push(pose);
            b.push(gt.pose(id)?);
        }
        align_trajectories(&a, &b)?
    } else {
        AlignmentResult::identity()
    };
    let scale = optimize_scale_chamfer(&gt_points, &recon, &alignment)?;
    let moved: Vec<_> = recon.iter().map(|p| alignment.apply_with_scale(p, scale)).collect();
    let distance = chamfer_distance(&gt_points, &moved, ChamferDirection::OneWay)?;
    Ok(Some(ChamferReport {
        distance,
        scale,
        alignment,
    }))
}

pub fn evaluate(args: EvaluateArgs, config: PipelineConfig) -> CliResult<()> {
    let gt = Dataset::open(&args.gt)?;
    let gt_ids = gt.ids();
    let pred_ids = depth_ids(&args.pred)?;
    if pred_ids != gt_ids {
        let missing: Vec<_> = gt_ids.iter().filter(|i| !pred_ids.contains(i)).collect();
        let extra: Vec<_> = pred_ids.iter().filter(|i| !gt_ids.contains(i)).collect();
        return Err(CliError::Usage(format!(
            "prediction and ground-truth frames differ: missing predictions {missing:?}, unexpected predictions {extra:?}"
        )));
    }
    let frames = gt_ids
        .par_iter()
        .map(|&id| {
            let run = || -> CliResult<_> {
                let truth = gt.depth(id)?;
                let (w, h) = truth.dims();
                let pred = resize_depth_bilinear(&io::read_depth(&depth_path(&args.pred, id))?, w, h);
                Ok(FrameMetrics {
                    id,
                    metrics: depth_metrics(&pred, &truth, &Mask::ones(w, h))?,
                })
            };
            run().map_err(in_frame(id))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let fold_count = args.folds.unwrap_or(frames.len());
    if fold_count == 0 || fold_count > frames.len() {
        return Err(CliError::Usage(format!("fold count must lie in 1..={}", frames.len())));
    }
    let folds: Vec<FoldMetrics> = split_folds(frames.len(), fold_count)
        .into_iter()
        .map(|r| {
            let part = &frames[r];
            FoldMetrics {
                frames: part.iter().map(|f| f.id).collect(),
                metrics: mean_metrics(&part.iter().map(|f| f.metrics).collect::<Vec<_>>()),
            }
        })
        .collect();
    let fold_metrics: Vec<_> = folds.iter().map(|f| f.metrics).collect();
    let report = EvaluationReport {
        aggregate: summarize(&fold_metrics)?.into(),
        chamfer: chamfer(&args.pred, &gt, &config)?,
        frames,
        folds,
    };
    if let Some(path) = &args.report {
        io::write_json(path, &report)?;
    }
    println!("{HEADER}");
    println!("{}", row(&report.aggregate, report.chamfer.as_ref().map(|c| c.distance)));
    Ok(())
}
