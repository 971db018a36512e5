//! Central finite differences over depth maps, used to validate analytic
//! loss gradients.

use crate::error::{Error, Result};
use crate::geometry::{DepthMap, Grid};
use crate::scalar::Real;

/// `(L(d + h e_i) - L(d - h e_i)) / 2h` for every valid pixel `i`; invalid
/// pixels get 0.
pub fn numeric_gradient<T: Real, F>(loss_fn: F, depth: &DepthMap<T>, step: T) -> Result<Grid<T>>
where
    F: Fn(&DepthMap<T>) -> Result<T>,
{
    if !(step > T::zero()) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let (w, h) = depth.dims();
    let mut grad = Grid::filled(w, h, T::zero());
    let mut probe = depth.clone();
    let two = T::lit(2.0);
    for y in 0..h {
        for x in 0..w {
            let Some(d) = depth.get(x, y) else { continue };
            probe.set(x, y, d + step);
            let up = loss_fn(&probe)?;
            probe.set(x, y, d - step);
            let down = loss_fn(&probe)?;
            probe.set(x, y, d);
            grad.set(x, y, (up - down) / (two * step));
        }
    }
    Ok(grad)
}

/// `|a - b|_2 / |b|_2`, with `b` the reference.
pub fn relative_error<T: Real>(a: &Grid<T>, b: &Grid<T>) -> T {
    let mut num = T::zero();
    let mut den = T::zero();
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        num += (*x - *y) * (*x - *y);
        den += *y * *y;
    }
    if den > T::zero() {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let d = DepthMap::from_fn(4, 3, |x, y| 1.0 + 0.5 * x as f64 + 0.25 * y as f64);
        let g = numeric_gradient(|m: &DepthMap<f64>| Ok(m.valid_values().iter().map(|v| v * v).sum()), &d, 1e-3).unwrap();
        for y in 0..3 {
            for x in 0..4 {
                assert!((g.get(x, y) - 2.0 * d.get(x, y).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_loss() {
        let d = DepthMap::constant(3, 3, 2.0);
        let g = numeric_gradient(|_: &DepthMap<f64>| Ok(7.0), &d, 1e-4).unwrap();
        assert!(g.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn step_must_be_positive() {
        let d = DepthMap::constant(3, 3, 2.0);
        assert!(numeric_gradient(|_: &DepthMap<f64>| Ok(0.0), &d, 0.0).is_err());
    }
}
