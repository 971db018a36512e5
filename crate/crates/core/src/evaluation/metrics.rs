use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::field::{check_dims, median};
use crate::geometry::{DepthMap, Mask};
use crate::scalar::Real;

/// Median-scaled depth errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics<T> {
    pub abs_rel: T,
    pub sq_rel: T,
    pub rmse: T,
    pub log_rmse: T,
    /// Factor the prediction was multiplied by before comparison.
    pub scale_applied: T,
}

/// Scales `pred` so its median over the support matches that of `gt`, then
/// averages the standard monocular depth errors. The support is every pixel
/// with positive mask weight where both maps are valid.
pub fn depth_metrics<T: Real>(pred: &DepthMap<T>, gt: &DepthMap<T>, mask: &Mask<T>) -> Result<DepthMetrics<T>> {
    check_dims(gt.dims(), pred.dims())?;
    check_dims(gt.dims(), mask.dims())?;
    let (w, h) = gt.dims();
    let mut pairs = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) > T::zero() {
                if let (Some(p), Some(g)) = (pred.get(x, y), gt.get(x, y)) {
                    pairs.push((p, g));
                }
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptySupport("depth metrics"));
    }
    let mut ps: Vec<T> = pairs.iter().map(|p| p.0).collect();
    let mut gs: Vec<T> = pairs.iter().map(|p| p.1).collect();
    let scale = median(&mut gs).expect("non-empty") / median(&mut ps).expect("non-empty");
    let mut acc = [T::zero(); 4];
    for (p, g) in &pairs {
        let d = *p * scale;
        let diff = d - *g;
        acc[0] += diff.abs() / *g;
        acc[1] += diff * diff / *g;
        acc[2] += diff * diff;
        let l = d.ln() - g.ln();
        acc[3] += l * l;
    }
    let n = T::from_usize_lossy(pairs.len());
    Ok(DepthMetrics {
        abs_rel: acc[0] / n,
        sq_rel: acc[1] / n,
        rmse: (acc[2] / n).sqrt(),
        log_rmse: (acc[3] / n).sqrt(),
        scale_applied: scale,
    })
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Real> MetricSummary<T> {
    pub fn of(values: &[T]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = T::from_usize_lossy(values.len());
        let mean = values.iter().fold(T::zero(), |a, v| a + *v) / n;
        let var = values.iter().fold(T::zero(), |a, v| a + (*v - mean) * (*v - mean)) / n;
        Some(Self { mean, std: var.sqrt() })
    }
}

/// Per-metric summaries in the order abs_rel, sq_rel, rmse, log_rmse.
pub fn summarize<T: Real>(metrics: &[DepthMetrics<T>]) -> Result<[MetricSummary<T>; 4]> {
    let column = |f: fn(&DepthMetrics<T>) -> T| {
        let v: Vec<T> = metrics.iter().map(f).collect();
        MetricSummary::of(&v).ok_or(Error::EmptySupport("metric summary"))
    };
    Ok([
        column(|m| m.abs_rel)?,
        column(|m| m.sq_rel)?,
        column(|m| m.rmse)?,
        column(|m| m.log_rmse)?,
    ])
}
