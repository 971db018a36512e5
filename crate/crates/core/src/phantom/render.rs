use nalgebra::Vector3;
use rayon::prelude::*;

use super::Phantom;
use crate::error::{Error, Result};
use crate::geometry::{DepthMap, Grid, ImageRgb, Intrinsics, NormalMap, Pose};
use crate::illumination::{light_field, shade_lambertian, Albedo};

const RELAXATION: f64 = 0.9;
const MAX_STEPS: usize = 256;
const NEWTON_STEPS: usize = 8;
/// Rays are abandoned beyond this many tube radii.
const MAX_DISTANCE: f64 = 60.0;

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedFrame {
    pub image: ImageRgb<f64>,
    pub depth: DepthMap<f64>,
    pub normals: NormalMap<f64>,
}

/// Ray parameter of the first wall hit along `origin + t * dir`, or `None`.
pub(crate) fn trace(phantom: &Phantom, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    let r0 = phantom.params().radius;
    let tol = 1e-5 * r0;
    let speed = dir.norm();
    let t_max = MAX_DISTANCE * r0 / speed;
    let lipschitz = phantom.lipschitz();
    let mut t = 0.0;
    let mut f = phantom.implicit(origin);
    for _ in 0..MAX_STEPS {
        if -f <= tol {
            break;
        }
        t += RELAXATION * -f / (lipschitz * speed);
        if t > t_max {
            return None;
        }
        f = phantom.implicit(&(origin + dir * t));
    }
    if -f > 0.05 * r0 {
        return None;
    }
    let marched = t;
    for _ in 0..NEWTON_STEPS {
        let p = origin + dir * t;
        let slope = phantom.gradient(&p).dot(dir);
        if !(slope > 0.0) {
            break;
        }
        t -= f / slope;
        f = phantom.implicit(&(origin + dir * t));
    }
    (f.abs() <= tol && t >= marched - tol / speed && t <= t_max).then_some(t)
}

/// Renders depth, inward camera-space normals and Lambertian RGB lit by a
/// light at the camera center with angular exponent `mu`. Rays that leave
/// the tube or fail to converge give invalid pixels.
pub fn render_frame(phantom: &Phantom, camera_to_world: &Pose<f64>, intrinsics: &Intrinsics<f64>, mu: f64) -> Result<RenderedFrame> {
    intrinsics.validate()?;
    let origin = *camera_to_world.translation();
    if !(phantom.implicit(&origin) < 0.0) {
        return Err(Error::invalid("camera lies outside the phantom"));
    }
    let (w, h) = intrinsics.dims();
    let rotation = camera_to_world.rotation();
    let rows: Vec<Vec<Option<(f64, Vector3<f64>)>>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let ray = intrinsics.ray(x as f64, y as f64);
                    let depth = trace(phantom, &origin, &(rotation * ray))?;
                    let hit = origin + rotation * ray * depth;
                    let mut n = rotation.transpose() * phantom.inward_normal(&hit);
                    if n.dot(&ray) > 0.0 {
                        n = -n;
                    }
                    Some((depth, n))
                })
                .collect()
        })
        .collect();

    let samples: Vec<_> = rows.into_iter().flatten().collect();
    let valid = Grid::new(w, h, samples.iter().map(Option::is_some).collect())?;
    let depth = DepthMap::new(Grid::new(w, h, samples.iter().map(|s| s.map_or(0.0, |v| v.0)).collect())?, valid.clone())?;
    let normals = NormalMap::new(
        Grid::new(w, h, samples.iter().map(|s| s.map_or(-Vector3::z(), |v| v.1)).collect())?,
        valid,
    )?;
    let field = light_field(&depth, intrinsics, mu)?;
    let image = shade_lambertian(&normals, &field, &Albedo::Gray(phantom.albedo()))?;
    Ok(RenderedFrame { image, depth, normals })
}

/// Saturates a disc of the image, imitating a specular highlight.
pub fn inject_specular(image: &ImageRgb<f64>, cx: f64, cy: f64, radius: f64) -> ImageRgb<f64> {
    let mut out = image.clone();
    for y in 0..image.height() {
        for x in 0..image.width() {
            if (x as f64 - cx).hypot(y as f64 - cy) <= radius {
                out.set(x, y, [1.0; 3]);
            }
        }
    }
    out
}
