use super::refine::{refine_iteration, RefinementConfig};
use super::resample::{area_resample_image, resize_depth_bilinear};
use super::{integrate_normals_from, integrate_normals_screened, normals_from_depth};
use crate::error::{Error, Result};
use crate::geometry::{DepthMap, ImageRgb, Intrinsics, NormalMap};
use crate::illumination::{light_field, RefinementInput};
use crate::scalar::Real;

/// Latest output of the multi-scale recursion.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementState<T: Real> {
    pub normals: NormalMap<T>,
    pub depth: DepthMap<T>,
    /// 1-based index of the pass that produced this state.
    pub scale_index: usize,
    /// Energy trace of that pass.
    pub energy_trace: Vec<T>,
}

/// Output of a single pass of the recursion.
#[derive(Clone, Debug, PartialEq)]
pub struct PassOutput<T: Real> {
    pub resolution: (usize, usize),
    pub refined_normals: NormalMap<T>,
    pub integrated_depth: DepthMap<T>,
    pub energy_trace: Vec<T>,
    pub albedo: T,
    pub integration_residual: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiscaleResult<T: Real> {
    pub state: RefinementState<T>,
    pub passes: Vec<PassOutput<T>>,
}

impl<T: Real> MultiscaleResult<T> {
    pub fn depths(&self) -> Vec<DepthMap<T>> {
        self.passes.iter().map(|p| p.integrated_depth.clone()).collect()
    }

    pub fn normals(&self) -> Vec<NormalMap<T>> {
        self.passes.iter().map(|p| p.refined_normals.clone()).collect()
    }
}

/// Depth at which a surface with the given normals would appear as bright
/// as observed: `I = albedo (cos)^mu (N.F) / (d |r|)^2` solved for `d`.
/// Dark and saturated pixels are left invalid.
pub fn falloff_depth<T: Real>(input: &RefinementInput<T>, normals: &NormalMap<T>, k: &Intrinsics<T>, albedo: T) -> DepthMap<T> {
    let (w, h) = input.dims();
    let mu = input.field.mu();
    DepthMap::from_fn(w, h, |x, y| {
        let i = input.image.gray(x, y);
        let (Some(f), Some(n)) = (input.field.direction(x, y), normals.get(x, y)) else {
            return T::zero();
        };
        if !(i > T::lit(0.02) && i < T::lit(0.98)) {
            return T::zero();
        }
        let ray = k.ray(T::from_usize_lossy(x), T::from_usize_lossy(y));
        let shading = (-f.z).max(T::zero()).powf(mu) * n.dot(&f).max(T::lit(0.1));
        (albedo * shading / i).sqrt() / ray.norm()
    })
}

fn pass<T: Real>(image: &ImageRgb<T>, depth: &DepthMap<T>, k: &Intrinsics<T>, config: &RefinementConfig<T>) -> Result<(NormalMap<T>, DepthMap<T>, Vec<T>, T, T)> {
    let field = light_field(depth, k, config.mu)?;
    let normals_in = normals_from_depth(depth, k)?;
    let input = RefinementInput::new(image.clone(), field)?;
    let refined = refine_iteration(&input, &normals_in, config)?;
    let anchor = depth.median().ok_or(Error::EmptySupport("depth anchor"))?;
    let integrated = if config.w_attenuation > T::zero() {
        let target = falloff_depth(&input, &normals_in, k, refined.albedo);
        integrate_normals_screened(&refined.normals, k, anchor, Some(depth), &target, config.w_attenuation)?
    } else {
        integrate_normals_from(&refined.normals, k, anchor, Some(depth))?
    };
    Ok((refined.normals, integrated.depth, refined.energy, refined.albedo, integrated.residual))
}

/// Runs `n` refinement passes. Pass `i` works at
/// `min(base * 2^(i-1), input)` pixels: it lights the current depth, derives
/// its normals, refines them against the downsampled image, integrates them
/// anchored at the current median depth, and hands the result on upsampled.
/// `intrinsics` describe `image`; `depth_init` may have any resolution.
pub fn refine_multiscale<T: Real>(
    image: &ImageRgb<T>,
    depth_init: &DepthMap<T>,
    intrinsics: &Intrinsics<T>,
    config: &RefinementConfig<T>,
) -> Result<MultiscaleResult<T>> {
    config.validate()?;
    intrinsics.validate()?;
    let full = image.dims();
    if intrinsics.dims() != full {
        return Err(Error::DimensionMismatch {
            expected: full,
            actual: intrinsics.dims(),
        });
    }
    let mut depth = depth_init.clone();
    let mut passes = Vec::with_capacity(config.iterations);
    for i in 1..=config.iterations {
        let (w, h) = config.resolution(i, full);
        if depth.dims() != (w, h) {
            depth = resize_depth_bilinear(&depth, w, h);
        }
        let k = intrinsics.scaled_to(w, h);
        let level = if (w, h) == full { image.clone() } else { area_resample_image(image, w, h) };
        let (normals, integrated, energy, albedo, residual) =
            pass(&level, &depth, &k, config).map_err(|e| Error::Iteration {
                iteration: i,
                source: Box::new(e),
            })?;
        depth = integrated.clone();
        passes.push(PassOutput {
            resolution: (w, h),
            refined_normals: normals,
            integrated_depth: integrated,
            energy_trace: energy,
            albedo,
            integration_residual: residual,
        });
    }
    let last = passes.last().expect("at least one pass");
    let state = RefinementState {
        normals: last.refined_normals.clone(),
        depth: last.integrated_depth.clone(),
        scale_index: passes.len(),
        energy_trace: last.energy_trace.clone(),
    };
    Ok(MultiscaleResult { state, passes })
}
