//! Photometric reprojection error: a 0.85/0.15 blend of 3x3 SSIM and L1,
//! minimized over source views.

use super::{masked_mean, LossMap};
use crate::error::{Error, Result};
use crate::geometry::field::check_dims;
use crate::geometry::{Grid, ImageRgb, Mask};
use crate::scalar::Real;

const SSIM_WEIGHT: f64 = 0.85;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r.clamp(0, n - 1) as usize
}

/// Per-pixel `(1 - SSIM) / 2` clamped to `[0, 1]`, using 3x3 mean pooling
/// with reflection padding.
pub fn ssim_loss_map<T: Real>(a: &Grid<T>, b: &Grid<T>) -> Grid<T> {
    let (w, h) = a.dims();
    let c1 = T::lit(C1);
    let c2 = T::lit(C2);
    let ninth = T::one() / T::lit(9.0);
    let two = T::lit(2.0);
    Grid::from_fn(w, h, |x, y| {
        let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let px = reflect(x as isize + dx, w);
                let py = reflect(y as isize + dy, h);
                let va = *a.get(px, py);
                let vb = *b.get(px, py);
                mx += va;
                my += vb;
                sxx += va * va;
                syy += vb * vb;
                sxy += va * vb;
            }
        }
        mx *= ninth;
        my *= ninth;
        let var_x = sxx * ninth - mx * mx;
        let var_y = syy * ninth - my * my;
        let cov = sxy * ninth - mx * my;
        let num = (two * mx * my + c1) * (two * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        ((T::one() - num / den) / two).max(T::zero()).min(T::one())
    })
}

/// Per-pixel photometric error between a target and one (warped) source,
/// averaged over the RGB channels.
pub fn photometric_error_map<T: Real>(target: &ImageRgb<T>, source: &ImageRgb<T>) -> Result<Grid<T>> {
    check_dims(target.dims(), source.dims())?;
    let alpha = T::lit(SSIM_WEIGHT);
    let beta = T::one() - alpha;
    let third = T::one() / T::lit(3.0);
    let (w, h) = target.dims();
    let mut out = Grid::filled(w, h, T::zero());
    for c in 0..3 {
        let ta = target.channel(c);
        let sa = source.channel(c);
        let ssim = ssim_loss_map(&ta, &sa);
        for (i, o) in out.as_mut_slice().iter_mut().enumerate() {
            let l1 = (ta.as_slice()[i] - sa.as_slice()[i]).abs();
            *o += third * (alpha * ssim.as_slice()[i] + beta * l1);
        }
    }
    Ok(out)
}

/// Per-pixel minimum of the photometric error over all sources.
pub(crate) fn min_error_map<T: Real>(target: &ImageRgb<T>, sources: &[ImageRgb<T>]) -> Result<Grid<T>> {
    let mut iter = sources.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::invalid("at least one source image is required"))?;
    let mut best = photometric_error_map(target, first)?;
    for s in iter {
        let e = photometric_error_map(target, s)?;
        for (b, v) in best.as_mut_slice().iter_mut().zip(e.as_slice()) {
            if *v < *b {
                *b = *v;
            }
        }
    }
    Ok(best)
}

pub fn loss_photometric<T: Real>(target: &ImageRgb<T>, warped_sources: &[ImageRgb<T>], mask: &Mask<T>) -> Result<LossMap<T>> {
    check_dims(target.dims(), mask.dims())?;
    let per_pixel = min_error_map(target, warped_sources)?;
    let (w, h) = target.dims();
    masked_mean(per_pixel, Grid::filled(w, h, true), Some(mask), "photometric")
}
