//! Orthogonality between predicted normals and depth-derived surface vectors.
//!
//! For an interior pixel `p` two tangent estimates are formed from its
//! diagonal neighbours, `V1 = X(tl) - X(br)` and `V2 = X(tr) - X(bl)` with
//! `X(q) = D(q) K^-1 q`. The per-pixel value is `(|N.V1| + |N.V2|) / 2`.

use nalgebra::Vector3;

use super::normal::sign;
use super::{masked_mean, LossMap};
use crate::error::{Error, Result};
use crate::geometry::field::check_dims;
use crate::geometry::{DepthMap, Grid, Intrinsics, NormalMap};
use crate::scalar::Real;

/// Diagonal neighbour pairs `(a, b)` around a pixel as `(dx, dy)` offsets.
pub(crate) const DIAGONAL_PAIRS: [((isize, isize), (isize, isize)); 2] = [((-1, -1), (1, 1)), ((1, -1), (-1, 1))];

pub(crate) fn point<T: Real>(depth: &DepthMap<T>, k: &Intrinsics<T>, x: usize, y: usize) -> Option<Vector3<T>> {
    depth
        .get(x, y)
        .map(|d| k.ray(T::from_usize_lossy(x), T::from_usize_lossy(y)) * d)
}

#[inline]
pub(crate) fn offset(x: usize, y: usize, d: (isize, isize)) -> (usize, usize) {
    ((x as isize + d.0) as usize, (y as isize + d.1) as usize)
}

/// The two diagonal surface vectors at an interior pixel.
pub(crate) fn surface_vectors<T: Real>(depth: &DepthMap<T>, k: &Intrinsics<T>, x: usize, y: usize) -> Option<[Vector3<T>; 2]> {
    let mut out = [Vector3::zeros(); 2];
    for (i, (a, b)) in DIAGONAL_PAIRS.iter().enumerate() {
        let (ax, ay) = offset(x, y, *a);
        let (bx, by) = offset(x, y, *b);
        out[i] = point(depth, k, ax, ay)? - point(depth, k, bx, by)?;
    }
    Some(out)
}

fn check<T: Real>(normals: &NormalMap<T>, depth: &DepthMap<T>, intrinsics: &Intrinsics<T>) -> Result<()> {
    check_dims(depth.dims(), normals.dims())?;
    check_dims(depth.dims(), intrinsics.dims())?;
    let (w, h) = depth.dims();
    if w < 3 || h < 3 {
        return Err(Error::invalid("orthogonality loss needs at least a 3x3 image"));
    }
    Ok(())
}

pub fn loss_orthogonality<T: Real>(normals: &NormalMap<T>, depth: &DepthMap<T>, intrinsics: &Intrinsics<T>) -> Result<LossMap<T>> {
    check(normals, depth, intrinsics)?;
    let (w, h) = depth.dims();
    let half = T::lit(0.5);
    let mut per_pixel = Grid::filled(w, h, T::zero());
    let mut valid = Grid::filled(w, h, false);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let Some(n) = normals.get(x, y) else { continue };
            let Some([v1, v2]) = surface_vectors(depth, intrinsics, x, y) else {
                continue;
            };
            per_pixel.set(x, y, (n.dot(&v1).abs() + n.dot(&v2).abs()) * half);
            valid.set(x, y, true);
        }
    }
    masked_mean(per_pixel, valid, None, "orthogonality")
}

/// Analytic derivative of [`loss_orthogonality`] with respect to every depth.
pub fn orthogonality_gradient<T: Real>(normals: &NormalMap<T>, depth: &DepthMap<T>, intrinsics: &Intrinsics<T>) -> Result<Grid<T>> {
    let loss = loss_orthogonality(normals, depth, intrinsics)?;
    let (w, h) = depth.dims();
    let half = T::lit(0.5);
    let mut grad = Grid::filled(w, h, T::zero());
    let ray = |x: usize, y: usize| intrinsics.ray(T::from_usize_lossy(x), T::from_usize_lossy(y));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if !loss.valid.get(x, y) {
                continue;
            }
            let n = normals.get(x, y).expect("valid pixel has a normal");
            let vs = surface_vectors(depth, intrinsics, x, y).expect("valid pixel has neighbours");
            for ((a, b), v) in DIAGONAL_PAIRS.iter().zip(vs.iter()) {
                let s = sign(n.dot(v)) * half / loss.support;
                let (ax, ay) = offset(x, y, *a);
                let (bx, by) = offset(x, y, *b);
                let ga = *grad.get(ax, ay) + s * n.dot(&ray(ax, ay));
                grad.set(ax, ay, ga);
                let gb = *grad.get(bx, by) - s * n.dot(&ray(bx, by));
                grad.set(bx, by, gb);
            }
        }
    }
    Ok(grad)
}
