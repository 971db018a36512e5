//! Surface normals from a depth map.

use crate::error::{Error, Result};
use crate::geometry::field::check_dims;
use crate::geometry::{DepthMap, Grid, Intrinsics, NormalMap};
use crate::losses::orthogonality::{point, surface_vectors};
use crate::scalar::Real;
use nalgebra::Vector3;

/// Normal at each interior pixel from the cross product of the two diagonal
/// surface vectors, oriented toward the camera. Border pixels copy the
/// nearest interior pixel; degenerate patches are invalid.
pub fn normals_from_depth<T: Real>(depth: &DepthMap<T>, intrinsics: &Intrinsics<T>) -> Result<NormalMap<T>> {
    check_dims(depth.dims(), intrinsics.dims())?;
    let (w, h) = depth.dims();
    if w < 3 || h < 3 {
        return Err(Error::invalid("normals from depth need at least a 3x3 image"));
    }
    let interior = Grid::from_fn(w, h, |x, y| {
        if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
            return None;
        }
        let center = point(depth, intrinsics, x, y)?;
        let [a, b] = surface_vectors(depth, intrinsics, x, y)?;
        let n = a.cross(&b);
        let len = n.norm();
        if !(len > T::lit(1e-12) * a.norm() * b.norm()) || !len.is_finite() {
            return None;
        }
        let n = n / len;
        Some(if n.dot(&center) > T::zero() { -n } else { n })
    });
    let vectors = Grid::from_fn(w, h, |x, y| {
        let cx = x.clamp(1, w - 2);
        let cy = y.clamp(1, h - 2);
        interior.get(cx, cy).unwrap_or_else(Vector3::zeros)
    });
    Ok(NormalMap::from_vectors(vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_depth_faces_camera() {
        let k = Intrinsics::new(40.0, 40.0, 15.5, 15.5, 32, 32).unwrap();
        let n = normals_from_depth(&DepthMap::constant(32, 32, 2.0), &k).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                assert!((n.get(x, y).unwrap() - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn slanted_plane_matches_analytic_normal() {
        let k = Intrinsics::new(1.0, 1.0, 0.0, 0.0, 8, 8).unwrap();
        let d = DepthMap::from_fn(8, 8, |x, _| 1.0 / (1.0 - 0.1 * x as f64));
        let n = normals_from_depth(&d, &k).unwrap();
        let expected = Vector3::new(0.1, 0.0, -1.0).normalize();
        for y in 1..7 {
            for x in 1..7 {
                let v = n.get(x, y).unwrap();
                let angle = v.dot(&expected).min(1.0).acos().to_degrees();
                assert!(angle < 0.5, "angle {angle}");
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn borders_replicate_interior() {
        let k = Intrinsics::new(10.0, 10.0, 2.0, 2.0, 5, 5).unwrap();
        let d = DepthMap::from_fn(5, 5, |x, y| 1.0 + 0.05 * (x * x + y) as f64);
        let n = normals_from_depth(&d, &k).unwrap();
        assert_eq!(n.get(0, 0), n.get(1, 1));
        assert_eq!(n.get(4, 2), n.get(3, 2));
    }

    #[test]
    fn missing_depth_gives_invalid_normal() {
        let k = Intrinsics::new(10.0, 10.0, 2.0, 2.0, 5, 5).unwrap();
        let mut d = DepthMap::constant(5, 5, 1.0);
        d.invalidate(1, 1);
        let n = normals_from_depth(&d, &k).unwrap();
        assert!(n.get(2, 2).is_none());
        assert!(n.get(0, 0).is_none());
    }
}
