//! Co-located point-light model: per-pixel light direction and attenuation,
//! plus Lambertian shading driven by them.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::field::check_dims;
use crate::geometry::{DepthMap, Grid, ImageRgb, Intrinsics, NormalMap};
use crate::scalar::Real;

/// `[illumination]` configuration section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct IlluminationConfig<T> {
    /// Angular falloff exponent of the light.
    pub mu: T,
}

impl<T: Real> Default for IlluminationConfig<T> {
    fn default() -> Self {
        Self { mu: T::lit(2.0) }
    }
}

impl<T: Real> IlluminationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.mu >= T::zero() && self.mu.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid("attenuation exponent mu must be non-negative"))
        }
    }
}

/// Direction from each surface point to the light, and the light's
/// attenuation at that point.
#[derive(Clone, Debug, PartialEq)]
pub struct LightField<T: Real> {
    directions: Grid<Vector3<T>>,
    attenuation: Grid<T>,
    valid: Grid<bool>,
    mu: T,
}

impl<T: Real> LightField<T> {
    /// Light position; the light sits at the camera center.
    pub fn origin(&self) -> Vector3<T> {
        Vector3::zeros()
    }

    /// Light axis; parallel to the optical axis.
    pub fn axis(&self) -> Vector3<T> {
        Vector3::z()
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn dims(&self) -> (usize, usize) {
        self.attenuation.dims()
    }

    #[inline]
    pub fn direction(&self, x: usize, y: usize) -> Option<Vector3<T>> {
        self.valid.get(x, y).then(|| *self.directions.get(x, y))
    }

    #[inline]
    pub fn attenuation(&self, x: usize, y: usize) -> Option<T> {
        self.valid.get(x, y).then(|| *self.attenuation.get(x, y))
    }

    pub fn directions(&self) -> &Grid<Vector3<T>> {
        &self.directions
    }

    pub fn attenuations(&self) -> &Grid<T> {
        &self.attenuation
    }

    pub fn validity(&self) -> &Grid<bool> {
        &self.valid
    }
}

/// Computes the light field for a depth map. Each valid pixel is backprojected
/// to `X = D(p) K^-1 p`; the direction is `-X/|X|` and the attenuation is
/// `(-F.z)^mu / |X|^2`.
pub fn light_field<T: Real>(depth: &DepthMap<T>, intrinsics: &Intrinsics<T>, mu: T) -> Result<LightField<T>> {
    if !(mu >= T::zero()) || !mu.is_finite() {
        return Err(Error::invalid("attenuation exponent mu must be non-negative"));
    }
    check_dims(intrinsics.dims(), depth.dims())?;
    let (w, h) = depth.dims();
    let mut directions = Grid::filled(w, h, Vector3::zeros());
    let mut attenuation = Grid::filled(w, h, T::zero());
    let mut valid = Grid::filled(w, h, false);
    let axis = Vector3::z();
    for y in 0..h {
        for x in 0..w {
            let Some(d) = depth.get(x, y) else { continue };
            let point = intrinsics.ray(T::from_usize_lossy(x), T::from_usize_lossy(y)) * d;
            let dist2 = point.norm_squared();
            if !(dist2 > T::zero()) || !dist2.is_finite() {
                return Err(Error::Singular(format!(
                    "surface point at pixel ({x}, {y}) coincides with the light"
                )));
            }
            let f = -point / dist2.sqrt();
            let cos = -f.dot(&axis);
            directions.set(x, y, f);
            attenuation.set(x, y, cos.max(T::zero()).powf(mu) / dist2);
            valid.set(x, y, true);
        }
    }
    Ok(LightField {
        directions,
        attenuation,
        valid,
        mu,
    })
}

/// Surface reflectance for shading.
#[derive(Clone, Debug, PartialEq)]
pub enum Albedo<T> {
    Gray(T),
    Rgb([T; 3]),
    Map(Grid<T>),
}

impl<T: Real> Albedo<T> {
    fn at(&self, x: usize, y: usize) -> [T; 3] {
        match self {
            Albedo::Gray(a) => [*a; 3],
            Albedo::Rgb(c) => *c,
            Albedo::Map(g) => [*g.get(x, y); 3],
        }
    }

    fn validate(&self, dims: (usize, usize)) -> Result<()> {
        let ok = match self {
            Albedo::Gray(a) => *a >= T::zero(),
            Albedo::Rgb(c) => c.iter().all(|a| *a >= T::zero()),
            Albedo::Map(g) => {
                check_dims(dims, g.dims())?;
                g.as_slice().iter().all(|a| *a >= T::zero())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("albedo must be non-negative"))
        }
    }
}

/// Unclamped single-channel radiance `albedo * A * max(0, N.F)`.
#[inline]
pub fn lambertian<T: Real>(normal: &Vector3<T>, direction: &Vector3<T>, attenuation: T, albedo: T) -> T {
    albedo * attenuation * normal.dot(direction).max(T::zero())
}

/// Renders `clamp(albedo * A * max(0, N.F), 0, 1)`. Pixels without a valid
/// normal or light sample are black.
pub fn shade_lambertian<T: Real>(normals: &NormalMap<T>, field: &LightField<T>, albedo: &Albedo<T>) -> Result<ImageRgb<T>> {
    check_dims(field.dims(), normals.dims())?;
    albedo.validate(normals.dims())?;
    let (w, h) = normals.dims();
    Ok(ImageRgb::from_fn_clamped(w, h, |x, y| {
        match (normals.get(x, y), field.direction(x, y), field.attenuation(x, y)) {
            (Some(n), Some(f), Some(a)) => albedo.at(x, y).map(|rho| lambertian(&n, &f, a, rho)),
            _ => [T::zero(); 3],
        }
    }))
}

/// What the refiner sees at each pixel: the RGB image next to the light
/// direction and attenuation it was lit with. Normals travel separately.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementInput<T: Real> {
    pub image: ImageRgb<T>,
    pub field: LightField<T>,
}

impl<T: Real> RefinementInput<T> {
    pub fn new(image: ImageRgb<T>, field: LightField<T>) -> Result<Self> {
        check_dims(image.dims(), field.dims())?;
        Ok(Self { image, field })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.image.dims()
    }

    /// `[R, G, B, Fx, Fy, Fz, A]`, or `None` where the light field is invalid.
    pub fn channels(&self, x: usize, y: usize) -> Option<[T; 7]> {
        let f = self.field.direction(x, y)?;
        let a = self.field.attenuation(x, y)?;
        let [r, g, b] = self.image.get(x, y);
        Some([r, g, b, f.x, f.y, f.z, a])
    }
}
