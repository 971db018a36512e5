//! Symmetric relative depth consistency.

use nalgebra::Vector2;

use super::normal::sign;
use super::{masked_mean, LossMap};
use crate::error::Result;
use crate::geometry::field::check_dims;
use crate::geometry::{warp_point, Bilinear, DepthMap, Grid, Intrinsics, Mask, Pose};
use crate::scalar::Real;

/// `|a - b| / (a + b)` with `a` the source depth sampled at the reprojected
/// pixel and `b` the reprojected depth.
pub fn loss_depth_consistency<T: Real>(
    depth_s: &DepthMap<T>,
    depth_t: &DepthMap<T>,
    pose_t_to_s: &Pose<T>,
    intrinsics: &Intrinsics<T>,
    mask: &Mask<T>,
) -> Result<LossMap<T>> {
    let dims = depth_t.dims();
    check_dims(dims, depth_s.dims())?;
    check_dims(dims, intrinsics.dims())?;
    check_dims(dims, mask.dims())?;
    let (w, h) = dims;
    let mut per_pixel = Grid::filled(w, h, T::zero());
    let mut valid = Grid::filled(w, h, false);
    for y in 0..h {
        for x in 0..w {
            let Some(d) = depth_t.get(x, y) else { continue };
            let p = Vector2::new(T::from_usize_lossy(x), T::from_usize_lossy(y));
            let (warp, _) = warp_point(intrinsics, pose_t_to_s, &p, d);
            if !warp.in_bounds {
                continue;
            }
            let Some((a, _, _)) = depth_s.sample_with_gradient(warp.pixel.x, warp.pixel.y) else {
                continue;
            };
            per_pixel.set(x, y, relative_difference(a, warp.depth));
            valid.set(x, y, true);
        }
    }
    masked_mean(per_pixel, valid, Some(mask), "depth consistency")
}

#[inline]
pub fn relative_difference<T: Real>(a: T, b: T) -> T {
    (a - b).abs() / (a + b)
}

/// Analytic derivatives of [`loss_depth_consistency`] with respect to the
/// target depth and the source depth, in that order.
pub fn depth_consistency_gradients<T: Real>(
    depth_s: &DepthMap<T>,
    depth_t: &DepthMap<T>,
    pose_t_to_s: &Pose<T>,
    intrinsics: &Intrinsics<T>,
    mask: &Mask<T>,
) -> Result<(Grid<T>, Grid<T>)> {
    let loss = loss_depth_consistency(depth_s, depth_t, pose_t_to_s, intrinsics, mask)?;
    let (w, h) = depth_t.dims();
    let mut grad_t = Grid::filled(w, h, T::zero());
    let mut grad_s = Grid::filled(w, h, T::zero());
    let two = T::lit(2.0);
    for y in 0..h {
        for x in 0..w {
            if !loss.valid.get(x, y) {
                continue;
            }
            let Some(d) = depth_t.get(x, y) else { continue };
            let p = Vector2::new(T::from_usize_lossy(x), T::from_usize_lossy(y));
            let (warp, der) = warp_point(intrinsics, pose_t_to_s, &p, d);
            let Some((a, ax, ay)) = depth_s.sample_with_gradient(warp.pixel.x, warp.pixel.y) else {
                continue;
            };
            let b = warp.depth;
            let scale = mask.get(x, y) / loss.support;
            let s = sign(a - b);
            let denom = (a + b) * (a + b);
            let da = ax * der.d_pixel.x + ay * der.d_pixel.y;
            let db = der.d_depth;
            grad_t.set(x, y, scale * s * two * (b * da - a * db) / denom);

            let dl_da = scale * s * two * b / denom;
            if let Some(bl) = Bilinear::locate(warp.pixel.x, warp.pixel.y, w, h) {
                let wts = bl.weights();
                for (i, (cx, cy)) in bl.corners().into_iter().enumerate() {
                    let cur = *grad_s.get(cx, cy);
                    grad_s.set(cx, cy, cur + dl_da * wts[i]);
                }
            }
        }
    }
    Ok((grad_t, grad_s))
}
