//! Resolution changes between refinement scales.

use nalgebra::Vector3;

use crate::geometry::{BilinearSample, DepthMap, Grid, ImageRgb, NormalMap};
use crate::scalar::Real;

/// Overlap of output cell `i` (of `n_out`) with input cell `j` (of `n_in`),
/// in units of input cells.
fn overlaps<T: Real>(n_in: usize, n_out: usize) -> Vec<Vec<(usize, T)>> {
    let scale = T::from_usize_lossy(n_in) / T::from_usize_lossy(n_out);
    (0..n_out)
        .map(|i| {
            let lo = T::from_usize_lossy(i) * scale;
            let hi = T::from_usize_lossy(i + 1) * scale;
            let j0 = lo.floor().to_usize().unwrap_or(0);
            let j1 = (hi.ceil().to_usize().unwrap_or(n_in)).min(n_in);
            (j0..j1)
                .filter_map(|j| {
                    let a = T::from_usize_lossy(j).max(lo);
                    let b = T::from_usize_lossy(j + 1).min(hi);
                    (b > a).then_some((j, b - a))
                })
                .collect()
        })
        .collect()
}

/// Box-filter resampling of a weighted field; `None` entries carry no weight.
fn area_resample<T: Real, V>(
    w: usize,
    h: usize,
    out_w: usize,
    out_h: usize,
    sample: impl Fn(usize, usize) -> Option<V>,
    zero: V,
    add: impl Fn(V, V, T) -> V,
    finish: impl Fn(V, T) -> Option<V>,
) -> Grid<Option<V>>
where
    V: Clone,
{
    let ox = overlaps::<T>(w, out_w);
    let oy = overlaps::<T>(h, out_h);
    Grid::from_fn(out_w, out_h, |x, y| {
        let mut acc = zero.clone();
        let mut weight = T::zero();
        for (sy, wy) in &oy[y] {
            for (sx, wx) in &ox[x] {
                if let Some(v) = sample(*sx, *sy) {
                    acc = add(acc, v, *wx * *wy);
                    weight += *wx * *wy;
                }
            }
        }
        if weight > T::zero() {
            finish(acc, weight)
        } else {
            None
        }
    })
}

/// Area-average depth resampling over valid pixels.
pub fn area_resample_depth<T: Real>(depth: &DepthMap<T>, out_w: usize, out_h: usize) -> DepthMap<T> {
    if depth.dims() == (out_w, out_h) {
        return depth.clone();
    }
    let (w, h) = depth.dims();
    let g = area_resample(
        w,
        h,
        out_w,
        out_h,
        |x, y| depth.get(x, y),
        T::zero(),
        |a, v, wt| a + v * wt,
        |a, wt| Some(a / wt),
    );
    DepthMap::from_values(g.map(|v| v.unwrap_or(T::zero())))
}

/// Area-average image resampling.
pub fn area_resample_image<T: Real>(image: &ImageRgb<T>, out_w: usize, out_h: usize) -> ImageRgb<T> {
    if image.dims() == (out_w, out_h) {
        return image.clone();
    }
    let (w, h) = image.dims();
    let g = area_resample(
        w,
        h,
        out_w,
        out_h,
        |x, y| Some(image.get(x, y)),
        [T::zero(); 3],
        |a, v, wt| [a[0] + v[0] * wt, a[1] + v[1] * wt, a[2] + v[2] * wt],
        |a, wt| Some([a[0] / wt, a[1] / wt, a[2] / wt]),
    );
    ImageRgb::from_fn_clamped(out_w, out_h, |x, y| g.get(x, y).unwrap_or([T::zero(); 3]))
}

/// Source coordinate of an output pixel center under pixel-center alignment.
#[inline]
fn source_coord<T: Real>(i: usize, n_in: usize, n_out: usize) -> T {
    let half = T::lit(0.5);
    let c = (T::from_usize_lossy(i) + half) * T::from_usize_lossy(n_in) / T::from_usize_lossy(n_out) - half;
    c.max(T::zero()).min(T::from_usize_lossy(n_in - 1))
}

/// Bilinear depth resampling; falls back to the nearest pixel where the
/// bilinear support is incomplete.
pub fn resize_depth_bilinear<T: Real>(depth: &DepthMap<T>, out_w: usize, out_h: usize) -> DepthMap<T> {
    if depth.dims() == (out_w, out_h) {
        return depth.clone();
    }
    let (w, h) = depth.dims();
    DepthMap::from_fn(out_w, out_h, |x, y| {
        let sx = source_coord::<T>(x, w, out_w);
        let sy = source_coord::<T>(y, h, out_h);
        depth
            .sample(sx, sy)
            .or_else(|| nearest(sx, sy, w, h).and_then(|(nx, ny)| depth.get(nx, ny)))
            .unwrap_or(T::zero())
    })
}

fn nearest<T: Real>(x: T, y: T, w: usize, h: usize) -> Option<(usize, usize)> {
    let nx = x.round().to_usize()?.min(w - 1);
    let ny = y.round().to_usize()?.min(h - 1);
    Some((nx, ny))
}

/// Bilinear normal resampling with renormalization.
pub fn resize_normals_bilinear<T: Real>(normals: &NormalMap<T>, out_w: usize, out_h: usize) -> NormalMap<T> {
    if normals.dims() == (out_w, out_h) {
        return normals.clone();
    }
    let (w, h) = normals.dims();
    NormalMap::from_fn(out_w, out_h, |x, y| {
        let sx = source_coord::<T>(x, w, out_w);
        let sy = source_coord::<T>(y, h, out_h);
        normals
            .sample(sx, sy)
            .or_else(|| nearest(sx, sy, w, h).and_then(|(nx, ny)| normals.get(nx, ny)))
            .unwrap_or_else(Vector3::zeros)
    })
}
