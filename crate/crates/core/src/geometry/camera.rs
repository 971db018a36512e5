use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pinhole intrinsics. Pixel coordinates put integer values at pixel centers,
/// so the image domain is `[0, width-1] x [0, height-1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> Intrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    /// Intrinsics with the principal point at the image center and a horizontal
    /// field of view of `hfov` radians.
    pub fn from_fov(hfov: T, width: usize, height: usize) -> Result<Self> {
        let half = T::lit(0.5);
        let w = T::from_usize_lossy(width);
        let h = T::from_usize_lossy(height);
        let f = half * w / (half * hfov).tan();
        Self::new(f, f, half * (w - T::one()), half * (h - T::one()), width, height)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image size must be non-zero"));
        }
        if !(self.fx > T::zero() && self.fy > T::zero()) {
            return Err(Error::invalid("focal lengths must be positive"));
        }
        let w = T::from_usize_lossy(self.width);
        let h = T::from_usize_lossy(self.height);
        if !(self.cx >= T::zero() && self.cx < w && self.cy >= T::zero() && self.cy < h) {
            return Err(Error::invalid("principal point must lie inside the image"));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn matrix(&self) -> Matrix3<T> {
        Matrix3::new(
            self.fx,
            T::zero(),
            self.cx,
            T::zero(),
            self.fy,
            self.cy,
            T::zero(),
            T::zero(),
            T::one(),
        )
    }

    pub fn inverse_matrix(&self) -> Matrix3<T> {
        Matrix3::new(
            T::one() / self.fx,
            T::zero(),
            -self.cx / self.fx,
            T::zero(),
            T::one() / self.fy,
            -self.cy / self.fy,
            T::zero(),
            T::zero(),
            T::one(),
        )
    }

    /// `K^-1 (x, y, 1)`: the viewing ray through a pixel, scaled to unit depth.
    #[inline]
    pub fn ray(&self, x: T, y: T) -> Vector3<T> {
        Vector3::new((x - self.cx) / self.fx, (y - self.cy) / self.fy, T::one())
    }

    /// Whether a continuous pixel coordinate lies in the sampling domain.
    #[inline]
    pub fn contains(&self, pixel: &Vector2<T>) -> bool {
        let max_x = T::from_usize_lossy(self.width - 1);
        let max_y = T::from_usize_lossy(self.height - 1);
        pixel.x >= T::zero() && pixel.y >= T::zero() && pixel.x <= max_x && pixel.y <= max_y
    }

    /// Camera-frame point at `depth` along the ray through `pixel`.
    pub fn backproject(&self, pixel: &Vector2<T>, depth: T) -> Result<Vector3<T>> {
        if !(depth > T::zero()) || !depth.is_finite() {
            return Err(Error::invalid("backprojection depth must be positive and finite"));
        }
        if !self.contains(pixel) {
            return Err(Error::invalid("pixel outside image bounds"));
        }
        Ok(self.ray(pixel.x, pixel.y) * depth)
    }

    /// Perspective projection. Returns the divided pixel and the third
    /// homogeneous coordinate (the depth along the optical axis).
    #[inline]
    pub fn project(&self, point: &Vector3<T>) -> (Vector2<T>, T) {
        let z = point.z;
        (
            Vector2::new(
                self.fx * point.x / z + self.cx,
                self.fy * point.y / z + self.cy,
            ),
            z,
        )
    }

    /// Intrinsics for the same camera resampled to `width x height`, keeping
    /// pixel-center alignment.
    pub fn scaled_to(&self, width: usize, height: usize) -> Self {
        let half = T::lit(0.5);
        let sx = T::from_usize_lossy(width) / T::from_usize_lossy(self.width);
        let sy = T::from_usize_lossy(height) / T::from_usize_lossy(self.height);
        let cx = ((self.cx + half) * sx - half).max(T::zero());
        let cy = ((self.cy + half) * sy - half).max(T::zero());
        Self {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx,
            cy,
            width,
            height,
        }
    }

    pub fn cast<U: Real>(&self) -> Intrinsics<U> {
        Intrinsics {
            fx: U::lit(self.fx.as_f64()),
            fy: U::lit(self.fy.as_f64()),
            cx: U::lit(self.cx.as_f64()),
            cy: U::lit(self.cy.as_f64()),
            width: self.width,
            height: self.height,
        }
    }
}
