//! Supervised and self-consistency losses of the refinement stage, and the
//! three training phases that combine them.

use super::normals_from_depth;
use super::resample::{area_resample_depth, resize_depth_bilinear, resize_normals_bilinear};
use crate::error::{Error, Result};
use crate::geometry::field::check_dims;
use crate::geometry::{DepthMap, Intrinsics, NormalMap};
use crate::scalar::Real;

/// Mean over commonly valid pixels of the L1 distance between normal maps.
pub fn normal_l1<T: Real>(a: &NormalMap<T>, b: &NormalMap<T>) -> Result<T> {
    check_dims(a.dims(), b.dims())?;
    let (w, h) = a.dims();
    let mut sum = T::zero();
    let mut count = 0usize;
    for y in 0..h {
        for x in 0..w {
            if let (Some(p), Some(q)) = (a.get(x, y), b.get(x, y)) {
                sum += (p - q).abs().sum();
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptySupport("normal L1"));
    }
    Ok(sum / T::from_usize_lossy(count))
}

fn ground_truth_at<T: Real>(gt_depth: &DepthMap<T>, gt_normals: &NormalMap<T>, dims: (usize, usize)) -> (DepthMap<T>, NormalMap<T>) {
    let (w, h) = dims;
    let depth = if w <= gt_depth.width() && h <= gt_depth.height() {
        area_resample_depth(gt_depth, w, h)
    } else {
        resize_depth_bilinear(gt_depth, w, h)
    };
    (depth, resize_normals_bilinear(gt_normals, w, h))
}

/// `sum_i |N - N_i|_1 + |D - a_i D_i|_1` with `a_i = median(D) / median(D_i)`;
/// ground truth is resampled to each prediction's resolution and each term
/// is a per-pixel mean.
pub fn loss_gt<T: Real>(
    pred_depths: &[DepthMap<T>],
    pred_normals: &[NormalMap<T>],
    gt_depth: &DepthMap<T>,
    gt_normals: &NormalMap<T>,
) -> Result<T> {
    if pred_depths.is_empty() || pred_depths.len() != pred_normals.len() {
        return Err(Error::invalid("need one normal map per depth prediction"));
    }
    check_dims(gt_depth.dims(), gt_normals.dims())?;
    let mut total = T::zero();
    for (d_i, n_i) in pred_depths.iter().zip(pred_normals) {
        check_dims(d_i.dims(), n_i.dims())?;
        let (gt_d, gt_n) = ground_truth_at(gt_depth, gt_normals, d_i.dims());
        let med_pred = d_i
            .median()
            .ok_or_else(|| Error::invalid("prediction has no valid depth"))?;
        if !(med_pred > T::zero()) {
            return Err(Error::invalid("median predicted depth must be positive"));
        }
        let med_gt = gt_d.median().ok_or(Error::EmptySupport("ground-truth depth"))?;
        let alpha = med_gt / med_pred;
        let (w, h) = d_i.dims();
        let mut sum = T::zero();
        let mut count = 0usize;
        for y in 0..h {
            for x in 0..w {
                if let (Some(g), Some(p)) = (gt_d.get(x, y), d_i.get(x, y)) {
                    sum += (g - alpha * p).abs();
                    count += 1;
                }
            }
        }
        if count == 0 {
            return Err(Error::EmptySupport("supervised depth"));
        }
        total += normal_l1(&gt_n, n_i)? + sum / T::from_usize_lossy(count);
    }
    Ok(total)
}

/// `sum_i |N'_i - N_i|_1` where `N'_i` are the normals of the integrated
/// depth `i`. `intrinsics` may be given at any resolution; it is rescaled to
/// each map.
pub fn loss_dfn<T: Real>(integrated_depths: &[DepthMap<T>], input_normals: &[NormalMap<T>], intrinsics: &Intrinsics<T>) -> Result<T> {
    if integrated_depths.len() != input_normals.len() {
        return Err(Error::invalid("need one normal map per integrated depth"));
    }
    let mut total = T::zero();
    for (d, n) in integrated_depths.iter().zip(input_normals) {
        check_dims(d.dims(), n.dims())?;
        let k = intrinsics.scaled_to(d.width(), d.height());
        let derived = normals_from_depth(d, &k)?;
        total += normal_l1(&derived, n)?;
    }
    Ok(total)
}

/// Refinement training phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Normal refinement against an analytic integrator.
    NormalRefinement,
    /// Integration module alone.
    Integration,
    /// Both modules jointly.
    Joint,
}

impl TryFrom<u8> for Phase {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Phase::NormalRefinement),
            2 => Ok(Phase::Integration),
            3 => Ok(Phase::Joint),
            _ => Err(Error::invalid(format!("unknown training phase {v}"))),
        }
    }
}

/// Loss terms a phase draws from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseTerms<T> {
    pub gt: T,
    /// Normal consistency between refined normals of a frame pair.
    pub norm: T,
    pub dfn: T,
}

pub fn phase_losses<T: Real>(phase: u8, terms: &PhaseTerms<T>, lambda1: T, lambda2: T) -> Result<T> {
    Ok(match Phase::try_from(phase)? {
        Phase::NormalRefinement => terms.gt + lambda1 * terms.norm,
        Phase::Integration => terms.dfn,
        Phase::Joint => terms.gt + lambda1 * terms.norm + lambda2 * terms.dfn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid;
    use nalgebra::Vector3;

    fn facing(w: usize, h: usize) -> NormalMap<f64> {
        NormalMap::constant(w, h, Vector3::new(0.0, 0.0, -1.0))
    }

    #[test]
    fn identical_predictions_cost_nothing() {
        let d = DepthMap::from_fn(8, 8, |x, y| 1.0 + 0.1 * (x + y) as f64);
        let n = facing(8, 8);
        assert_eq!(loss_gt(std::slice::from_ref(&d), std::slice::from_ref(&n), &d, &n).unwrap(), 0.0);
    }

    #[test]
    fn median_scaling_absorbs_depth_scale() {
        let d = DepthMap::from_fn(8, 8, |x, y| 1.0 + 0.1 * (x + y) as f64);
        let n = facing(8, 8);
        let v = loss_gt(&[d.scaled(2.0)], std::slice::from_ref(&n), &d, &n).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn hand_two_by_two() {
        let gt = DepthMap::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let pred = DepthMap::constant(2, 2, 2.0);
        let gt_n = facing(2, 2);
        let mut vecs = Grid::filled(2, 2, Vector3::new(0.0, 0.0, -1.0));
        vecs.set(1, 0, Vector3::new(0.6, 0.0, -0.8));
        let pred_n = NormalMap::from_vectors(vecs);
        // alpha = 2.5 / 2; |1-2.5| + |2-2.5| + |3-2.5| + |4-2.5| = 4 over 4 pixels
        // normals: one pixel with L1 0.6 + 0.2 over 4 pixels
        let v = loss_gt(&[pred], &[pred_n], &gt, &gt_n).unwrap();
        assert!((v - 1.2).abs() < 1e-12, "{v}");
    }

    #[test]
    fn multi_scale_sums_terms() {
        let gt = DepthMap::constant(8, 8, 3.0);
        let n = facing(8, 8);
        let coarse = DepthMap::constant(4, 4, 1.0);
        let v = loss_gt(&[coarse, DepthMap::constant(8, 8, 5.0)], &[facing(4, 4), n.clone()], &gt, &n).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn dfn_plane_versus_tilted_normals() {
        let k = Intrinsics::new(1.0, 1.0, 0.0, 0.0, 8, 8).unwrap();
        let plane = DepthMap::from_fn(8, 8, |x, _| 1.0 / (1.0 - 0.1 * x as f64));
        let consistent = NormalMap::constant(8, 8, Vector3::new(0.1, 0.0, -1.0));
        assert!(loss_dfn(std::slice::from_ref(&plane), &[consistent], &k).unwrap() < 1e-6);

        let s = 1.01f64.sqrt();
        let expected = (0.1 + s - 1.0) / s;
        let v = loss_dfn(std::slice::from_ref(&plane), &[facing(8, 8)], &k).unwrap();
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
        let scaled = loss_dfn(&[plane.scaled(3.0)], &[facing(8, 8)], &k).unwrap();
        assert!((scaled - v).abs() < 1e-12);
    }

    #[test]
    fn phases() {
        let t = PhaseTerms {
            gt: 1.0,
            norm: 2.0,
            dfn: 4.0,
        };
        assert_eq!(phase_losses(1, &t, 0.1, 0.5).unwrap(), 1.2);
        assert_eq!(phase_losses(2, &t, 0.1, 0.5).unwrap(), 4.0);
        assert_eq!(phase_losses(3, &t, 0.1, 0.5).unwrap(), 3.2);
        assert_eq!(phase_losses(3, &t, 0.1, 0.0).unwrap(), phase_losses(1, &t, 0.1, 0.0).unwrap());
        assert!(phase_losses(4, &t, 0.1, 0.5).is_err());
    }
}
