use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::field::{check_dims, median};
use crate::geometry::NormalMap;
use crate::illumination::RefinementInput;
use crate::scalar::Real;

/// Settings of the multi-scale normal refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct RefinementConfig<T> {
    /// Number of refinement passes `n`.
    pub iterations: usize,
    /// `[width, height]` of the first pass.
    pub base_size: [usize; 2],
    pub upsample_factor: usize,
    pub w_shading: T,
    pub w_prior: T,
    pub w_smooth: T,
    pub lambda1: T,
    pub lambda2: T,
    pub max_optimizer_steps: usize,
    /// Weight pulling integrated log-depth towards the distance implied by
    /// the inverse-square falloff of the observed intensity.
    pub w_attenuation: T,
    /// Angular attenuation exponent of the light. Configured through the
    /// `[illumination]` section rather than this one.
    #[serde(skip)]
    pub mu: T,
    /// Known scalar albedo; estimated from the image when absent.
    pub albedo: Option<T>,
}

impl<T: Real> Default for RefinementConfig<T> {
    fn default() -> Self {
        Self {
            iterations: 4,
            base_size: [8, 8],
            upsample_factor: 2,
            w_shading: T::lit(0.1),
            w_prior: T::lit(0.01),
            w_smooth: T::lit(0.001),
            lambda1: T::lit(0.1),
            lambda2: T::lit(0.5),
            max_optimizer_steps: 200,
            w_attenuation: T::lit(0.1),
            mu: T::lit(2.0),
            albedo: None,
        }
    }
}

impl<T: Real> RefinementConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("refinement needs at least one iteration"));
        }
        if self.base_size.contains(&0) {
            return Err(Error::invalid("base resolution must be non-zero"));
        }
        if self.upsample_factor != 2 {
            return Err(Error::invalid("upsample factor is fixed at 2"));
        }
        let weights = [self.w_shading, self.w_prior, self.w_smooth, self.w_attenuation, self.lambda1, self.lambda2];
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::invalid("refinement weights must be finite and non-negative"));
        }
        if !(self.mu >= T::zero()) || !self.mu.is_finite() {
            return Err(Error::invalid("attenuation exponent mu must be non-negative"));
        }
        if let Some(a) = self.albedo {
            if !(a > T::zero()) || !a.is_finite() {
                return Err(Error::invalid("albedo must be positive"));
            }
        }
        Ok(())
    }

    /// Resolution of pass `i` (1-based) for an input of `input` pixels.
    pub fn resolution(&self, i: usize, input: (usize, usize)) -> (usize, usize) {
        let grow = |base: usize, cap: usize| {
            let shift = (i.max(1) - 1).min(usize::BITS as usize - 1) as u32;
            base.saturating_mul(1usize << shift).min(cap)
        };
        (grow(self.base_size[0], input.0), grow(self.base_size[1], input.1))
    }
}

/// Result of one refinement pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement<T: Real> {
    pub normals: NormalMap<T>,
    /// Energy before the first step and after every accepted step.
    pub energy: Vec<T>,
    pub albedo: T,
}

const CHARBONNIER: f64 = 1e-2;
const ALBEDO_EPS: f64 = 0.1;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;

/// Robust scalar albedo: median of `I / (A max(eps, N.F))` over pixels that
/// are neither dark nor saturated.
pub fn estimate_albedo<T: Real>(input: &RefinementInput<T>, normals: &NormalMap<T>) -> Result<T> {
    check_dims(input.dims(), normals.dims())?;
    let (w, h) = input.dims();
    let mut ratios = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let (Some(n), Some(f), Some(a)) = (normals.get(x, y), input.field.direction(x, y), input.field.attenuation(x, y)) else {
                continue;
            };
            let i = input.image.gray(x, y);
            if i > T::lit(0.02) && i < T::lit(0.98) && a > T::zero() {
                ratios.push(i / (a * n.dot(&f).max(T::lit(ALBEDO_EPS))));
            }
        }
    }
    median(&mut ratios).ok_or(Error::EmptySupport("albedo estimate"))
}

fn charbonnier<T: Real>(v: T) -> (T, T) {
    let eps = T::lit(CHARBONNIER);
    let r = (v * v + eps * eps).sqrt();
    (r - eps, v / r)
}

/// Flattened per-pixel data of the refinement energy.
struct Problem<T: Real> {
    width: usize,
    height: usize,
    active: Vec<bool>,
    intensity: Vec<T>,
    direction: Vec<Vector3<T>>,
    /// Albedo times attenuation.
    gain: Vec<T>,
    prior: Vec<Vector3<T>>,
    /// Intensities are divided by this so weights do not depend on exposure.
    norm: T,
    inv_count: T,
    w_shading: T,
    w_prior: T,
    w_smooth: T,
}

impl<T: Real> Problem<T> {
    fn shade(&self, i: usize, n: &Vector3<T>) -> (T, T) {
        let raw = self.gain[i] * n.dot(&self.direction[i]);
        if raw <= T::zero() {
            (T::zero(), T::zero())
        } else if raw >= T::one() {
            (T::one(), T::zero())
        } else {
            (raw, self.gain[i])
        }
    }

    fn edge(&self, a: &Vector3<T>, b: &Vector3<T>) -> (T, Vector3<T>) {
        let eps = T::lit(CHARBONNIER);
        let d = a - b;
        let r = (d.norm_squared() + eps * eps).sqrt();
        (r - eps, d / r)
    }

    fn row_energy(&self, y: usize, n: &[Vector3<T>]) -> T {
        let mut e = T::zero();
        for x in 0..self.width {
            let i = y * self.width + x;
            if !self.active[i] {
                continue;
            }
            let (s, _) = self.shade(i, &n[i]);
            let r = (s - self.intensity[i]) / self.norm;
            let d = n[i] - self.prior[i];
            let prior = charbonnier(d.x).0 + charbonnier(d.y).0 + charbonnier(d.z).0;
            let mut tv = T::zero();
            if x + 1 < self.width && self.active[i + 1] {
                tv += self.edge(&n[i], &n[i + 1]).0;
            }
            if y + 1 < self.height && self.active[i + self.width] {
                tv += self.edge(&n[i], &n[i + self.width]).0;
            }
            e += self.w_shading * r * r + self.w_prior * prior + self.w_smooth * tv;
        }
        e
    }

    fn energy(&self, n: &[Vector3<T>]) -> T {
        let rows: Vec<T> = (0..self.height).into_par_iter().map(|y| self.row_energy(y, n)).collect();
        rows.into_iter().fold(T::zero(), |a, b| a + b) * self.inv_count
    }

    /// Gradient scaled by the pixel count, projected onto the tangent planes.
    fn gradient(&self, n: &[Vector3<T>]) -> Vec<Vector3<T>> {
        let w = self.width;
        let two = T::lit(2.0);
        (0..n.len())
            .into_par_iter()
            .map(|i| {
                if !self.active[i] {
                    return Vector3::zeros();
                }
                let (x, y) = (i % w, i / w);
                let (s, ds) = self.shade(i, &n[i]);
                let r = (s - self.intensity[i]) / self.norm;
                let mut g = self.direction[i] * (two * self.w_shading * r * ds / self.norm);
                let d = n[i] - self.prior[i];
                g += Vector3::new(charbonnier(d.x).1, charbonnier(d.y).1, charbonnier(d.z).1) * self.w_prior;
                let neighbors = [
                    (x + 1 < w).then(|| i + 1),
                    (x > 0).then(|| i - 1),
                    (y + 1 < self.height).then(|| i + w),
                    (y > 0).then(|| i - w),
                ];
                for j in neighbors.into_iter().flatten() {
                    if self.active[j] {
                        g += self.edge(&n[i], &n[j]).1 * self.w_smooth;
                    }
                }
                g - n[i] * g.dot(&n[i])
            })
            .collect()
    }
}

fn step<T: Real>(n: &[Vector3<T>], g: &[Vector3<T>], eta: T) -> Vec<Vector3<T>> {
    n.iter()
        .zip(g)
        .map(|(n, g)| {
            if g.norm_squared() == T::zero() {
                *n
            } else {
                (n - g * eta).normalize()
            }
        })
        .collect()
}

/// Refines normals against the shading they should produce under `input`'s
/// light field: projected gradient descent with backtracking on
/// `w_s mean (I - shade(N))^2 + w_p mean |N - N_in|_1 + w_tv TV(N)`, with
/// Charbonnier-smoothed absolute values and intensities normalized by the
/// mean image intensity. Every accepted step lowers the energy.
pub fn refine_iteration<T: Real>(input: &RefinementInput<T>, normals_in: &NormalMap<T>, config: &RefinementConfig<T>) -> Result<Refinement<T>> {
    config.validate()?;
    check_dims(input.dims(), normals_in.dims())?;
    let albedo = match config.albedo {
        Some(a) => a,
        None => estimate_albedo(input, normals_in)?,
    };
    let (w, h) = input.dims();
    let len = w * h;
    let mut active = vec![false; len];
    let mut intensity = vec![T::zero(); len];
    let mut direction = vec![Vector3::zeros(); len];
    let mut gain = vec![T::zero(); len];
    let mut prior = vec![Vector3::zeros(); len];
    let mut count = 0usize;
    let mut total = T::zero();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            intensity[i] = input.image.gray(x, y);
            if let (Some(n), Some(f), Some(a)) = (normals_in.get(x, y), input.field.direction(x, y), input.field.attenuation(x, y)) {
                active[i] = true;
                direction[i] = f;
                gain[i] = albedo * a;
                prior[i] = n;
                count += 1;
                total += intensity[i];
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptySupport("normal refinement"));
    }
    let mean = total / T::from_usize_lossy(count);
    let problem = Problem {
        width: w,
        height: h,
        active,
        intensity,
        direction,
        gain,
        norm: if mean > T::zero() { mean } else { T::one() },
        inv_count: T::one() / T::from_usize_lossy(count),
        prior: prior.clone(),
        w_shading: config.w_shading,
        w_prior: config.w_prior,
        w_smooth: config.w_smooth,
    };

    let finite = |e: T, at: usize| {
        if e.is_finite() {
            Ok(e)
        } else {
            Err(Error::OptimizerFailure(format!("non-finite energy at step {at}")))
        }
    };
    let mut n = prior;
    let mut energy = finite(problem.energy(&n), 0)?;
    let mut trace = vec![energy];
    let mut eta = T::one();
    for k in 0..config.max_optimizer_steps {
        let g = problem.gradient(&n);
        let slope = g.iter().fold(T::zero(), |a, v| a + v.norm_squared()) * problem.inv_count;
        if !(slope > T::zero()) {
            break;
        }
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let candidate = step(&n, &g, eta);
            let e = finite(problem.energy(&candidate), k + 1)?;
            if e <= energy - T::lit(ARMIJO) * eta * slope {
                accepted = Some((candidate, e));
                break;
            }
            eta *= T::lit(0.5);
        }
        let Some((candidate, e)) = accepted else { break };
        let converged = energy - e <= T::default_epsilon() * energy.abs();
        n = candidate;
        energy = e;
        trace.push(e);
        if converged {
            break;
        }
        eta = (eta * T::lit(2.0)).min(T::lit(1e3));
    }

    let mut out = normals_in.clone();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if problem.active[i] {
                out.set(x, y, Some(n[i]));
            }
        }
    }
    Ok(Refinement {
        normals: out,
        energy: trace,
        albedo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DepthMap, Intrinsics};
    use crate::illumination::{light_field, shade_lambertian, Albedo};
    use nalgebra::{Rotation3, Unit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plane_scene() -> (RefinementInput<f64>, NormalMap<f64>, Intrinsics<f64>) {
        let k = Intrinsics::from_fov(1.2, 32, 32).unwrap();
        let normal = Vector3::new(0.3, -0.2, -1.0).normalize();
        // plane n.X = -0.5
        let depth = DepthMap::from_fn(32, 32, |x, y| -0.5 / normal.dot(&k.ray(x as f64, y as f64)));
        let gt = NormalMap::constant(32, 32, normal);
        let field = light_field(&depth, &k, 2.0).unwrap();
        let image = shade_lambertian(&gt, &field, &Albedo::Gray(0.15)).unwrap();
        (RefinementInput::new(image, field).unwrap(), gt, k)
    }

    fn mean_angle(a: &NormalMap<f64>, b: &NormalMap<f64>) -> f64 {
        let (w, h) = a.dims();
        let mut s = 0.0;
        for y in 0..h {
            for x in 0..w {
                s += a.get(x, y).unwrap().angle(&b.get(x, y).unwrap()).to_degrees();
            }
        }
        s / (w * h) as f64
    }

    #[test]
    fn albedo_is_recovered_from_consistent_normals() {
        let (input, gt, _) = plane_scene();
        assert!((estimate_albedo(&input, &gt).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn ground_truth_is_a_near_fixed_point() {
        let (input, gt, _) = plane_scene();
        let r = refine_iteration(&input, &gt, &RefinementConfig::default()).unwrap();
        assert!(mean_angle(&r.normals, &gt) < 0.5);
    }

    #[test]
    fn denoises_rotated_normals() {
        let (input, gt, _) = plane_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let noisy = NormalMap::from_fn(32, 32, |x, y| {
            let axis = Unit::new_normalize(Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            Rotation3::from_axis_angle(&axis, 10f64.to_radians()) * gt.get(x, y).unwrap()
        });
        let config = RefinementConfig {
            albedo: Some(0.15),
            w_shading: 1.0,
            w_smooth: 0.01,
            ..RefinementConfig::default()
        };
        let before = mean_angle(&noisy, &gt);
        let r = refine_iteration(&input, &noisy, &config).unwrap();
        let after = mean_angle(&r.normals, &gt);
        assert!(after <= 0.5 * before, "{before} -> {after}");
        assert!(r.energy.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.energy.len() > 1);
    }

    #[test]
    fn validates_config() {
        let bad = [
            RefinementConfig { iterations: 0, ..RefinementConfig::<f64>::default() },
            RefinementConfig { upsample_factor: 3, ..RefinementConfig::default() },
            RefinementConfig { w_prior: -1.0, ..RefinementConfig::default() },
            RefinementConfig { base_size: [0, 4], ..RefinementConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn resolution_schedule_is_capped() {
        let c = RefinementConfig::<f64> {
            base_size: [8, 6],
            ..RefinementConfig::default()
        };
        let r: Vec<_> = (1..=5).map(|i| c.resolution(i, (40, 40))).collect();
        assert_eq!(r, vec![(8, 6), (16, 12), (32, 24), (40, 40), (40, 40)]);
    }

    #[test]
    fn non_finite_input_fails() {
        let (input, gt, _) = plane_scene();
        let config = RefinementConfig {
            albedo: Some(f64::MAX),
            w_shading: f64::MAX,
            ..RefinementConfig::default()
        };
        let r = refine_iteration(&input, &gt, &config);
        assert!(matches!(r, Err(Error::OptimizerFailure(_))), "{r:?}");
    }
}
