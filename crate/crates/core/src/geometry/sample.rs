//! Bilinear lookup at continuous pixel coordinates.
//!
//! Coordinates outside `[0, W-1] x [0, H-1]` are invalid (no clamping), and so
//! is any coordinate whose four support pixels are not all valid.

use nalgebra::{Matrix3, Vector3};

use super::field::{DepthMap, Grid, ImageRgb, NormalMap};
use crate::scalar::Real;

/// Integer corner and fractional offsets of a bilinear lookup.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bilinear<T> {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub fx: T,
    pub fy: T,
}

impl<T: Real> Bilinear<T> {
    pub fn locate(x: T, y: T, width: usize, height: usize) -> Option<Self> {
        let max_x = T::from_usize_lossy(width - 1);
        let max_y = T::from_usize_lossy(height - 1);
        if !(x >= T::zero() && y >= T::zero() && x <= max_x && y <= max_y) {
            return None;
        }
        let (x0, x1, fx) = axis(x, width);
        let (y0, y1, fy) = axis(y, height);
        Some(Self {
            x0,
            y0,
            x1,
            y1,
            fx,
            fy,
        })
    }

    /// Weights for corners `(x0,y0), (x1,y0), (x0,y1), (x1,y1)`.
    #[inline]
    pub fn weights(&self) -> [T; 4] {
        let one = T::one();
        [
            (one - self.fx) * (one - self.fy),
            self.fx * (one - self.fy),
            (one - self.fx) * self.fy,
            self.fx * self.fy,
        ]
    }

    #[inline]
    pub fn corners(&self) -> [(usize, usize); 4] {
        [
            (self.x0, self.y0),
            (self.x1, self.y0),
            (self.x0, self.y1),
            (self.x1, self.y1),
        ]
    }

    /// Derivatives of the four weights with respect to x and y.
    #[inline]
    pub fn weight_gradients(&self) -> ([T; 4], [T; 4]) {
        let one = T::one();
        if self.x0 == self.x1 || self.y0 == self.y1 {
            // Degenerate single-row/column grids have no derivative along that axis.
            let dx = if self.x0 == self.x1 {
                [T::zero(); 4]
            } else {
                [-(one - self.fy), one - self.fy, -self.fy, self.fy]
            };
            let dy = if self.y0 == self.y1 {
                [T::zero(); 4]
            } else {
                [-(one - self.fx), -self.fx, one - self.fx, self.fx]
            };
            return (dx, dy);
        }
        (
            [-(one - self.fy), one - self.fy, -self.fy, self.fy],
            [-(one - self.fx), -self.fx, one - self.fx, self.fx],
        )
    }
}

fn axis<T: Real>(c: T, n: usize) -> (usize, usize, T) {
    if n == 1 {
        return (0, 0, T::zero());
    }
    let mut i0 = c.floor().to_usize().unwrap_or(0);
    if i0 >= n - 1 {
        i0 = n - 2;
    }
    (i0, i0 + 1, c - T::from_usize_lossy(i0))
}

/// A field that supports bilinear lookup.
pub trait BilinearSample<T: Real> {
    type Value;

    fn sample(&self, x: T, y: T) -> Option<Self::Value>;
}

impl<T: Real> BilinearSample<T> for Grid<T> {
    type Value = T;

    fn sample(&self, x: T, y: T) -> Option<T> {
        let b = Bilinear::locate(x, y, self.width(), self.height())?;
        let w = b.weights();
        let c = b.corners();
        Some((0..4).fold(T::zero(), |acc, i| acc + w[i] * *self.get(c[i].0, c[i].1)))
    }
}

impl<T: Real> BilinearSample<T> for DepthMap<T> {
    type Value = T;

    fn sample(&self, x: T, y: T) -> Option<T> {
        self.sample_with_gradient(x, y).map(|(v, _, _)| v)
    }
}

impl<T: Real> DepthMap<T> {
    /// Bilinear value together with its derivatives along x and y.
    pub fn sample_with_gradient(&self, x: T, y: T) -> Option<(T, T, T)> {
        let b = Bilinear::locate(x, y, self.width(), self.height())?;
        let c = b.corners();
        let mut vals = [T::zero(); 4];
        for i in 0..4 {
            vals[i] = self.get(c[i].0, c[i].1)?;
        }
        let w = b.weights();
        let (gx, gy) = b.weight_gradients();
        let mut v = T::zero();
        let mut dx = T::zero();
        let mut dy = T::zero();
        for i in 0..4 {
            v += w[i] * vals[i];
            dx += gx[i] * vals[i];
            dy += gy[i] * vals[i];
        }
        Some((v, dx, dy))
    }
}

impl<T: Real> BilinearSample<T> for NormalMap<T> {
    type Value = Vector3<T>;

    /// Interpolates and renormalizes.
    fn sample(&self, x: T, y: T) -> Option<Vector3<T>> {
        let (raw, _, _) = self.sample_raw_with_gradient(x, y)?;
        raw.try_normalize(T::lit(1e-12))
    }
}

impl<T: Real> NormalMap<T> {
    /// Un-normalized bilinear blend with its x/y derivatives.
    pub fn sample_raw_with_gradient(&self, x: T, y: T) -> Option<(Vector3<T>, Vector3<T>, Vector3<T>)> {
        let b = Bilinear::locate(x, y, self.width(), self.height())?;
        let c = b.corners();
        let w = b.weights();
        let (gx, gy) = b.weight_gradients();
        let mut v = Vector3::zeros();
        let mut dx = Vector3::zeros();
        let mut dy = Vector3::zeros();
        for i in 0..4 {
            let n = self.get(c[i].0, c[i].1)?;
            v += n * w[i];
            dx += n * gx[i];
            dy += n * gy[i];
        }
        Some((v, dx, dy))
    }

    /// Renormalized sample and the Jacobian of the unit vector with respect to
    /// the coordinates, as columns `(d/dx, d/dy)`.
    pub fn sample_with_jacobian(&self, x: T, y: T) -> Option<(Vector3<T>, Vector3<T>, Vector3<T>)> {
        let (raw, dx, dy) = self.sample_raw_with_gradient(x, y)?;
        let len = raw.norm();
        if !(len > T::lit(1e-12)) {
            return None;
        }
        let n = raw / len;
        let proj = (Matrix3::identity() - n * n.transpose()) / len;
        Some((n, proj * dx, proj * dy))
    }
}

impl<T: Real> BilinearSample<T> for ImageRgb<T> {
    type Value = [T; 3];

    fn sample(&self, x: T, y: T) -> Option<[T; 3]> {
        let b = Bilinear::locate(x, y, self.width(), self.height())?;
        let w = b.weights();
        let c = b.corners();
        let mut out = [T::zero(); 3];
        for i in 0..4 {
            let p = self.get(c[i].0, c[i].1);
            for ch in 0..3 {
                out[ch] += w[i] * p[ch];
            }
        }
        Some(out)
    }
}
