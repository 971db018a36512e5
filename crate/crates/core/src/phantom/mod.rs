//! Procedural colon phantom: a tube around a straight or circular-arc
//! centerline with periodic haustral folds, plus camera trajectories and a
//! sphere-tracing renderer.

mod render;
mod trajectory;

pub use render::{inject_specular, render_frame, RenderedFrame};
pub use trajectory::{make_trajectory, Trajectory, ViewType};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Centerline {
    /// The world z axis.
    Straight,
    /// Circle of the given radius in the xz plane through the origin, with
    /// tangent +z at the origin and bending towards +x.
    Arc { radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomParams {
    pub centerline: Centerline,
    pub radius: f64,
    #[serde(default)]
    pub fold_amplitude: f64,
    #[serde(default = "default_wavelength")]
    pub fold_wavelength: f64,
    #[serde(default = "default_albedo")]
    pub albedo: f64,
}

fn default_wavelength() -> f64 {
    1.0
}

fn default_albedo() -> f64 {
    0.1
}

impl Default for PhantomParams {
    fn default() -> Self {
        Self {
            centerline: Centerline::Straight,
            radius: 1.0,
            fold_amplitude: 0.2,
            fold_wavelength: default_wavelength(),
            albedo: default_albedo(),
        }
    }
}

/// Tube coordinates of a point: arc length along the centerline, distance
/// from it and the angle around it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeCoords {
    pub u: f64,
    pub rho: f64,
    pub theta: f64,
}

/// Orthonormal frame of the centerline at arc length `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenterlineFrame {
    pub origin: Vector3<f64>,
    pub tangent: Vector3<f64>,
    /// Direction of `theta = 0`.
    pub normal: Vector3<f64>,
    /// Direction of `theta = pi/2`.
    pub binormal: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    params: PhantomParams,
    lipschitz: f64,
}

pub fn make_phantom(params: PhantomParams) -> Result<Phantom> {
    let p = &params;
    if !(p.radius > 0.0) || !p.radius.is_finite() {
        return Err(Error::invalid("phantom radius must be positive"));
    }
    if !(0.0..1.0).contains(&p.fold_amplitude) {
        return Err(Error::invalid("fold amplitude must lie in [0, 1)"));
    }
    if !(p.fold_wavelength > 0.0) || !p.fold_wavelength.is_finite() {
        return Err(Error::invalid("fold wavelength must be positive"));
    }
    if !(p.albedo >= 0.0) {
        return Err(Error::invalid("albedo must be non-negative"));
    }
    let max_radius = p.radius * (1.0 + p.fold_amplitude);
    let slope = p.radius * p.fold_amplitude * TAU / p.fold_wavelength;
    let stretch = match p.centerline {
        Centerline::Straight => 1.0,
        Centerline::Arc { radius } => {
            if !(radius > 2.0 * max_radius) || !radius.is_finite() {
                return Err(Error::invalid("arc radius must exceed twice the maximum tube radius"));
            }
            // |grad u| = R_c / m and m >= R_c - rho on the tube
            radius / (radius - 2.0 * max_radius)
        }
    };
    let lipschitz = 1.0 + slope * stretch;
    Ok(Phantom { params, lipschitz })
}

impl Phantom {
    pub fn params(&self) -> &PhantomParams {
        &self.params
    }

    pub fn albedo(&self) -> f64 {
        self.params.albedo
    }

    /// Upper bound on `|grad f|` in the region the renderer explores.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Wall radius at arc length `u`.
    pub fn radius_at(&self, u: f64) -> f64 {
        let p = &self.params;
        p.radius * (1.0 + p.fold_amplitude * (TAU * u / p.fold_wavelength).cos())
    }

    fn radius_slope(&self, u: f64) -> f64 {
        let p = &self.params;
        let k = TAU / p.fold_wavelength;
        -p.radius * p.fold_amplitude * k * (k * u).sin()
    }

    pub fn frame(&self, u: f64) -> CenterlineFrame {
        match self.params.centerline {
            Centerline::Straight => CenterlineFrame {
                origin: Vector3::new(0.0, 0.0, u),
                tangent: Vector3::z(),
                normal: Vector3::x(),
                binormal: Vector3::y(),
            },
            Centerline::Arc { radius } => {
                let phi = u / radius;
                let (s, c) = phi.sin_cos();
                // outward from the arc center (radius, 0, 0)
                let out = Vector3::new(-c, 0.0, s);
                CenterlineFrame {
                    origin: Vector3::new(radius, 0.0, 0.0) + out * radius,
                    tangent: Vector3::new(s, 0.0, c),
                    normal: out,
                    binormal: Vector3::y(),
                }
            }
        }
    }

    /// World point on the wall at tube coordinates `(u, theta)`.
    pub fn surface_point(&self, u: f64, theta: f64) -> Vector3<f64> {
        let f = self.frame(u);
        let (s, c) = theta.sin_cos();
        f.origin + (f.normal * c + f.binormal * s) * self.radius_at(u)
    }

    pub fn tube_coords(&self, p: &Vector3<f64>) -> TubeCoords {
        match self.params.centerline {
            Centerline::Straight => TubeCoords {
                u: p.z,
                rho: p.x.hypot(p.y),
                theta: p.y.atan2(p.x),
            },
            Centerline::Arc { radius } => {
                let qx = p.x - radius;
                let m = qx.hypot(p.z);
                let phi = p.z.atan2(-qx);
                let radial = m - radius;
                TubeCoords {
                    u: radius * phi,
                    rho: radial.hypot(p.y),
                    theta: p.y.atan2(radial),
                }
            }
        }
    }

    /// Implicit wall function `rho - r(u)`: negative inside the lumen.
    pub fn implicit(&self, p: &Vector3<f64>) -> f64 {
        let t = self.tube_coords(p);
        t.rho - self.radius_at(t.u)
    }

    /// Analytic gradient of [`Phantom::implicit`]. Points outwards.
    pub fn gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let t = self.tube_coords(p);
        let frame = self.frame(t.u);
        let offset = p - frame.origin;
        let grad_rho = if t.rho > 0.0 {
            offset / t.rho
        } else {
            Vector3::zeros()
        };
        let grad_u = match self.params.centerline {
            Centerline::Straight => Vector3::z(),
            Centerline::Arc { radius } => {
                let m = (p.x - radius).hypot(p.z);
                frame.tangent * (radius / m)
            }
        };
        grad_rho - grad_u * self.radius_slope(t.u)
    }

    /// Unit surface normal facing into the lumen.
    pub fn inward_normal(&self, p: &Vector3<f64>) -> Vector3<f64> {
        -self.gradient(p).normalize()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn folded(centerline: Centerline) -> Phantom {
        make_phantom(PhantomParams {
            centerline,
            radius: 1.0,
            fold_amplitude: 0.3,
            fold_wavelength: 1.0,
            albedo: 0.1,
        })
        .unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        let base = PhantomParams::default();
        for p in [
            PhantomParams { radius: 0.0, ..base.clone() },
            PhantomParams { fold_amplitude: 1.0, ..base.clone() },
            PhantomParams { fold_amplitude: -0.1, ..base.clone() },
            PhantomParams { fold_wavelength: 0.0, ..base.clone() },
            PhantomParams { centerline: Centerline::Arc { radius: 1.5 }, ..base.clone() },
        ] {
            assert!(make_phantom(p).is_err());
        }
    }

    #[test]
    fn cylinder_normals_are_radial() {
        let ph = make_phantom(PhantomParams { fold_amplitude: 0.0, ..PhantomParams::default() }).unwrap();
        let p = Vector3::new(0.6, 0.8, 3.0);
        assert_abs_diff_eq!(ph.implicit(&p), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ph.inward_normal(&p), Vector3::new(-0.6, -0.8, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn fold_extremes() {
        let ph = folded(Centerline::Straight);
        assert_abs_diff_eq!(ph.radius_at(0.5), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(ph.radius_at(1.0), 1.3, epsilon = 1e-15);
    }

    #[test]
    fn parametric_points_lie_on_the_zero_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for centerline in [Centerline::Straight, Centerline::Arc { radius: 6.0 }] {
            let ph = folded(centerline);
            for _ in 0..200 {
                let u = rng.random_range(-3.0..3.0);
                let theta = rng.random_range(-3.1..3.1);
                let p = ph.surface_point(u, theta);
                assert!(ph.implicit(&p).abs() < 1e-6);
                let t = ph.tube_coords(&p);
                assert_abs_diff_eq!(t.u, u, epsilon = 1e-9);
                assert_abs_diff_eq!(t.theta, theta, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for centerline in [Centerline::Straight, Centerline::Arc { radius: 6.0 }] {
            let ph = folded(centerline);
            for _ in 0..100 {
                let u = rng.random_range(-2.0..2.0);
                let theta: f64 = rng.random_range(-3.0..3.0);
                let scale = rng.random_range(0.3..1.2);
                let f = ph.frame(u);
                let p = f.origin + (f.normal * theta.cos() + f.binormal * theta.sin()) * scale;
                let h = 1e-6;
                let numeric = Vector3::from_fn(|i, _| {
                    let mut e = Vector3::zeros();
                    e[i] = h;
                    (ph.implicit(&(p + e)) - ph.implicit(&(p - e))) / (2.0 * h)
                });
                let analytic = ph.gradient(&p);
                assert!((analytic - numeric).norm() < 1e-7, "{analytic} vs {numeric}");
                assert!(analytic.norm() <= ph.lipschitz());
            }
        }
    }
}
