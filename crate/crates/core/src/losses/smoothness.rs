//! Edge-aware first-order smoothness on mean-normalized depth.

use crate::error::{Error, Result};
use crate::geometry::field::check_dims;
use crate::geometry::{DepthMap, ImageRgb};
use crate::scalar::Real;

fn channel_mean_abs_diff<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    ((a[0] - b[0]).abs() + (a[1] - b[1]).abs() + (a[2] - b[2]).abs()) / T::lit(3.0)
}

/// `mean_x(|dx d*| e^-|dx I|) + mean_y(|dy d*| e^-|dy I|)` with
/// `d* = d / mean(d)`. Differences involving invalid depth are skipped.
pub fn loss_smoothness<T: Real>(depth: &DepthMap<T>, image: &ImageRgb<T>) -> Result<T> {
    check_dims(depth.dims(), image.dims())?;
    let vals = depth.valid_values();
    if vals.is_empty() {
        return Err(Error::EmptySupport("smoothness"));
    }
    let mean = vals.iter().fold(T::zero(), |a, v| a + *v) / T::from_usize_lossy(vals.len());
    let (w, h) = depth.dims();
    let term = |dx: usize, dy: usize| {
        let mut sum = T::zero();
        let mut count = 0usize;
        for y in 0..h - dy {
            for x in 0..w - dx {
                let (Some(a), Some(b)) = (depth.get(x, y), depth.get(x + dx, y + dy)) else {
                    continue;
                };
                let edge = channel_mean_abs_diff(image.get(x, y), image.get(x + dx, y + dy));
                sum += ((b - a) / mean).abs() * (-edge).exp();
                count += 1;
            }
        }
        if count == 0 {
            T::zero()
        } else {
            sum / T::from_usize_lossy(count)
        }
    };
    Ok(term(1, 0) + term(0, 1))
}
