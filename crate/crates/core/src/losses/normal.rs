//! Normal consistency between a target and source normal map.

use nalgebra::Vector2;

use super::{masked_mean, LossMap};
use crate::error::Result;
use crate::geometry::field::check_dims;
use crate::geometry::{warp_point, DepthMap, Grid, Intrinsics, Mask, NormalMap, Pose};
use crate::scalar::Real;

fn check_inputs<T: Real>(
    normals_s: &NormalMap<T>,
    normals_t: &NormalMap<T>,
    depth_t: &DepthMap<T>,
    intrinsics: &Intrinsics<T>,
    mask: &Mask<T>,
) -> Result<()> {
    let dims = depth_t.dims();
    check_dims(dims, normals_s.dims())?;
    check_dims(dims, normals_t.dims())?;
    check_dims(dims, intrinsics.dims())?;
    check_dims(dims, mask.dims())
}

/// L1 difference between the source normals sampled at the reprojected pixel
/// and the target normals rotated into the source frame.
pub fn loss_normal_consistency<T: Real>(
    normals_s: &NormalMap<T>,
    normals_t: &NormalMap<T>,
    depth_t: &DepthMap<T>,
    pose_t_to_s: &Pose<T>,
    intrinsics: &Intrinsics<T>,
    mask: &Mask<T>,
) -> Result<LossMap<T>> {
    check_inputs(normals_s, normals_t, depth_t, intrinsics, mask)?;
    let (w, h) = depth_t.dims();
    let rot = pose_t_to_s.rotation();
    let mut per_pixel = Grid::filled(w, h, T::zero());
    let mut valid = Grid::filled(w, h, false);
    for y in 0..h {
        for x in 0..w {
            let (Some(d), Some(n_t)) = (depth_t.get(x, y), normals_t.get(x, y)) else {
                continue;
            };
            let p = Vector2::new(T::from_usize_lossy(x), T::from_usize_lossy(y));
            let (warp, _) = warp_point(intrinsics, pose_t_to_s, &p, d);
            if !warp.in_bounds {
                continue;
            }
            let Some((n_s, _, _)) = normals_s.sample_with_jacobian(warp.pixel.x, warp.pixel.y) else {
                continue;
            };
            let diff = n_s - rot * n_t;
            per_pixel.set(x, y, diff.abs().sum());
            valid.set(x, y, true);
        }
    }
    masked_mean(per_pixel, valid, Some(mask), "normal consistency")
}

/// Analytic derivative of [`loss_normal_consistency`] with respect to each
/// target depth, holding the normalizing support fixed.
pub fn normal_consistency_gradient<T: Real>(
    normals_s: &NormalMap<T>,
    normals_t: &NormalMap<T>,
    depth_t: &DepthMap<T>,
    pose_t_to_s: &Pose<T>,
    intrinsics: &Intrinsics<T>,
    mask: &Mask<T>,
) -> Result<Grid<T>> {
    let loss = loss_normal_consistency(normals_s, normals_t, depth_t, pose_t_to_s, intrinsics, mask)?;
    let (w, h) = depth_t.dims();
    let rot = pose_t_to_s.rotation();
    let mut grad = Grid::filled(w, h, T::zero());
    for y in 0..h {
        for x in 0..w {
            if !loss.valid.get(x, y) {
                continue;
            }
            let (Some(d), Some(n_t)) = (depth_t.get(x, y), normals_t.get(x, y)) else {
                continue;
            };
            let p = Vector2::new(T::from_usize_lossy(x), T::from_usize_lossy(y));
            let (warp, der) = warp_point(intrinsics, pose_t_to_s, &p, d);
            let Some((n_s, jx, jy)) = normals_s.sample_with_jacobian(warp.pixel.x, warp.pixel.y) else {
                continue;
            };
            let diff = n_s - rot * n_t;
            let dn = jx * der.d_pixel.x + jy * der.d_pixel.y;
            let dl = diff
                .iter()
                .zip(dn.iter())
                .fold(T::zero(), |acc, (e, de)| acc + sign(*e) * *de);
            grad.set(x, y, mask.get(x, y) * dl / loss.support);
        }
    }
    Ok(grad)
}

#[inline]
pub(crate) fn sign<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn k() -> Intrinsics<f64> {
        Intrinsics::new(20.0, 20.0, 7.5, 7.5, 16, 16).unwrap()
    }

    #[test]
    fn identical_maps_identity_pose() {
        let n = NormalMap::from_fn(16, 16, |x, y| Vector3::new(0.02 * x as f64, -0.01 * y as f64, -1.0));
        let d = DepthMap::constant(16, 16, 2.0);
        let l = loss_normal_consistency(&n, &n, &d, &Pose::identity(), &k(), &Mask::ones(16, 16)).unwrap();
        assert!(l.value.abs() < 1e-15);
    }

    #[test]
    fn closed_form_tilted_source() {
        let t = NormalMap::constant(16, 16, Vector3::new(0.0, 0.0, -1.0));
        let a = 0.1f64;
        let s = NormalMap::constant(16, 16, Vector3::new(a.sin(), 0.0, -a.cos()));
        let d = DepthMap::constant(16, 16, 2.0);
        let l = loss_normal_consistency(&s, &t, &d, &Pose::identity(), &k(), &Mask::ones(16, 16)).unwrap();
        let expected = a.sin().abs() + (1.0 - a.cos()).abs();
        assert!((l.value - expected).abs() < 1e-12);
        assert!((l.per_pixel.get(3, 9) - expected).abs() < 1e-12);
    }

    #[test]
    fn pure_rotation_with_rotated_normals() {
        let pose = Pose::from_axis_angle(&Vector3::new(0.3, 1.0, 0.1), 0.05, Vector3::zeros());
        let n_t = Vector3::new(0.1, -0.2, -1.0).normalize();
        let t = NormalMap::constant(16, 16, n_t);
        let s = NormalMap::constant(16, 16, pose.rotation() * n_t);
        let d = DepthMap::constant(16, 16, 3.0);
        let l = loss_normal_consistency(&s, &t, &d, &pose, &k(), &Mask::ones(16, 16)).unwrap();
        assert!(l.value < 1e-3);
    }

    #[test]
    fn all_masked_is_empty_support() {
        let n = NormalMap::constant(4, 4, Vector3::new(0.0, 0.0, -1.0));
        let d = DepthMap::constant(4, 4, 1.0);
        let k = Intrinsics::new(4.0, 4.0, 1.5, 1.5, 4, 4).unwrap();
        let m = Mask::new(Grid::filled(4, 4, 0.0)).unwrap();
        let err = loss_normal_consistency(&n, &n, &d, &Pose::identity(), &k, &m).unwrap_err();
        assert!(matches!(err, crate::Error::EmptySupport(_)));
    }
}
