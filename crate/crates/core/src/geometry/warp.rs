//! Target-to-source reprojection `K T D(p) K^-1 p`.

use nalgebra::{Vector2, Vector3};

use super::camera::Intrinsics;
use super::field::{check_dims, DepthMap, Grid, ImageRgb, Mask};
use super::pose::Pose;
use super::sample::BilinearSample;
use crate::error::Result;
use crate::scalar::Real;

/// Result of reprojecting one target pixel into the source view.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Warp<T: Real> {
    /// Perspective-divided source pixel.
    pub pixel: Vector2<T>,
    /// Third homogeneous coordinate before division.
    pub depth: T,
    /// Source pixel inside the image and depth in front of the camera.
    pub in_bounds: bool,
}

/// Derivatives of a warp with respect to the target depth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WarpDerivative<T: Real> {
    pub d_pixel: Vector2<T>,
    pub d_depth: T,
}

/// Backprojects `pixel` at `depth` into the camera frame.
pub fn backproject<T: Real>(intrinsics: &Intrinsics<T>, pixel: &Vector2<T>, depth: T) -> Result<Vector3<T>> {
    intrinsics.backproject(pixel, depth)
}

/// Warps a continuous target pixel at an explicit depth.
pub fn warp_point<T: Real>(
    intrinsics: &Intrinsics<T>,
    pose_t_to_s: &Pose<T>,
    pixel_t: &Vector2<T>,
    depth: T,
) -> (Warp<T>, WarpDerivative<T>) {
    let ray = intrinsics.ray(pixel_t.x, pixel_t.y);
    let rotated_ray = pose_t_to_s.rotation() * ray;
    let point = rotated_ray * depth + pose_t_to_s.translation();
    let k = intrinsics.matrix();
    let h = k * point;
    let dh = k * rotated_ray;
    let z = h.z;
    let pixel = Vector2::new(h.x / z, h.y / z);
    let z2 = z * z;
    let d_pixel = Vector2::new((dh.x * z - h.x * dh.z) / z2, (dh.y * z - h.y * dh.z) / z2);
    let in_bounds = z > T::zero() && z.is_finite() && intrinsics.contains(&pixel);
    (
        Warp {
            pixel,
            depth: z,
            in_bounds,
        },
        WarpDerivative {
            d_pixel,
            d_depth: dh.z,
        },
    )
}

/// Reprojects target pixel `(x, y)` into the source view using the target
/// depth. Missing depth yields an out-of-bounds result rather than an error.
pub fn project_warp<T: Real>(
    intrinsics: &Intrinsics<T>,
    pose_t_to_s: &Pose<T>,
    depth_t: &DepthMap<T>,
    x: usize,
    y: usize,
) -> Warp<T> {
    let pixel_t = Vector2::new(T::from_usize_lossy(x), T::from_usize_lossy(y));
    match depth_t.get(x, y) {
        Some(d) => warp_point(intrinsics, pose_t_to_s, &pixel_t, d).0,
        None => Warp {
            pixel: pixel_t,
            depth: T::zero(),
            in_bounds: false,
        },
    }
}

/// Warps every target pixel.
pub fn warp_field<T: Real>(
    intrinsics: &Intrinsics<T>,
    pose_t_to_s: &Pose<T>,
    depth_t: &DepthMap<T>,
) -> Grid<Warp<T>> {
    Grid::from_fn(depth_t.width(), depth_t.height(), |x, y| {
        project_warp(intrinsics, pose_t_to_s, depth_t, x, y)
    })
}

/// Resamples a source image into the target view. The returned mask is 1
/// where the warp landed inside the source image.
pub fn warp_image<T: Real>(
    source: &ImageRgb<T>,
    depth_t: &DepthMap<T>,
    pose_t_to_s: &Pose<T>,
    intrinsics: &Intrinsics<T>,
) -> Result<(ImageRgb<T>, Mask<T>)> {
    check_dims(source.dims(), depth_t.dims())?;
    check_dims(intrinsics.dims(), depth_t.dims())?;
    let warps = warp_field(intrinsics, pose_t_to_s, depth_t);
    let mut valid = Grid::filled(depth_t.width(), depth_t.height(), false);
    let image = ImageRgb::from_fn_clamped(depth_t.width(), depth_t.height(), |x, y| {
        let w = warps.get(x, y);
        if !w.in_bounds {
            return [T::zero(); 3];
        }
        match source.sample(w.pixel.x, w.pixel.y) {
            Some(v) => {
                valid.set(x, y, true);
                v
            }
            None => [T::zero(); 3],
        }
    });
    Ok((image, Mask::from_bools(&valid)))
}
