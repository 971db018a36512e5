//! The combined initialization loss over a target/source frame pair.

use super::{
    compute_masks, loss_depth_consistency, loss_normal_consistency, loss_orthogonality, loss_photometric,
    loss_smoothness, LossConfig, LossMap, LossReport,
};
use crate::error::Result;
use crate::geometry::field::check_dims;
use crate::geometry::{warp_image, DepthMap, ImageRgb, Intrinsics, Mask, NormalMap, Pose};
use crate::scalar::Real;

/// Per-frame predictions (or ground truth).
#[derive(Clone, Debug)]
pub struct Frame<T: Real> {
    pub image: ImageRgb<T>,
    pub depth: DepthMap<T>,
    pub normals: NormalMap<T>,
}

impl<T: Real> Frame<T> {
    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FramePair<'a, T: Real> {
    pub target: &'a Frame<T>,
    pub source: &'a Frame<T>,
    pub pose_t_to_s: Pose<T>,
    pub intrinsics: Intrinsics<T>,
}

/// Loss report plus the intermediate maps that produced it.
#[derive(Clone, Debug)]
pub struct InitLoss<T: Real> {
    pub report: LossReport<T>,
    pub mask: Mask<T>,
    pub warped_source: ImageRgb<T>,
    pub photo: LossMap<T>,
    pub norm: LossMap<T>,
    pub depth: LossMap<T>,
    pub orth: LossMap<T>,
}

/// Evaluates `(photo + l1 norm + l2 depth) (.) M + l3 orth + l4 smooth`.
///
/// `mask` replaces the computed auto/specular mask when given; projection
/// validity is applied either way.
pub fn loss_init_total<T: Real>(pair: &FramePair<'_, T>, config: &LossConfig<T>, mask: Option<&Mask<T>>) -> Result<InitLoss<T>> {
    config.weights.validate()?;
    let dims = pair.target.dims();
    check_dims(dims, pair.source.dims())?;
    check_dims(dims, pair.intrinsics.dims())?;
    let target = pair.target;
    let source = pair.source;
    let (warped, projected) = warp_image(&source.image, &target.depth, &pair.pose_t_to_s, &pair.intrinsics)?;
    let mask = match mask {
        Some(m) => m.intersect(&projected)?,
        None => compute_masks(
            &target.image,
            std::slice::from_ref(&source.image),
            std::slice::from_ref(&warped),
            &projected,
            config.specular_threshold,
        )?,
    };
    let photo = loss_photometric(&target.image, std::slice::from_ref(&warped), &mask)?;
    let norm = loss_normal_consistency(
        &source.normals,
        &target.normals,
        &target.depth,
        &pair.pose_t_to_s,
        &pair.intrinsics,
        &mask,
    )?;
    let depth = loss_depth_consistency(&source.depth, &target.depth, &pair.pose_t_to_s, &pair.intrinsics, &mask)?;
    let orth = loss_orthogonality(&target.normals, &target.depth, &pair.intrinsics)?;
    let smooth = loss_smoothness(&target.depth, &target.image)?;
    let report = LossReport {
        photo: photo.value,
        norm: norm.value,
        depth: depth.value,
        orth: orth.value,
        smooth,
        total: T::zero(),
        pixel_count: mask.count_nonzero(),
    }
    .with_weights(&config.weights);
    Ok(InitLoss {
        report,
        mask,
        warped_source: warped,
        photo,
        norm,
        depth,
        orth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LossWeights;
    use nalgebra::Vector3;

    fn frame(shift: f64) -> Frame<f64> {
        let image = ImageRgb::from_fn_clamped(24, 20, |x, y| {
            [0.4 + 0.25 * ((x as f64 + shift) * 0.6).sin() * ((y as f64) * 0.45).cos(); 3]
        });
        Frame {
            image,
            depth: DepthMap::from_fn(24, 20, |x, y| 2.0 + 0.01 * (x + y) as f64),
            normals: NormalMap::constant(24, 20, Vector3::new(0.05, 0.0, -1.0)),
        }
    }

    fn pair<'a>(t: &'a Frame<f64>, s: &'a Frame<f64>) -> FramePair<'a, f64> {
        FramePair {
            target: t,
            source: s,
            pose_t_to_s: Pose::from_translation(Vector3::new(0.02, 0.0, 0.0)),
            intrinsics: Intrinsics::new(30.0, 30.0, 11.5, 9.5, 24, 20).unwrap(),
        }
    }

    #[test]
    fn zero_weights_leave_photometric() {
        let (t, s) = (frame(0.0), frame(0.8));
        let cfg = LossConfig {
            weights: LossWeights {
                lambda1: 0.0,
                lambda2: 0.0,
                lambda3: 0.0,
                lambda4: 0.0,
            },
            ..LossConfig::default()
        };
        let m = Mask::ones(24, 20);
        let r = loss_init_total(&pair(&t, &s), &cfg, Some(&m)).unwrap().report;
        assert_eq!(r.total, r.photo);
    }

    #[test]
    fn linear_in_each_weight() {
        let (t, s) = (frame(0.0), frame(0.8));
        let m = Mask::ones(24, 20);
        let base = LossConfig::<f64>::default();
        let r1 = loss_init_total(&pair(&t, &s), &base, Some(&m)).unwrap().report;
        let mut doubled = base;
        doubled.weights.lambda1 *= 2.0;
        let r2 = loss_init_total(&pair(&t, &s), &doubled, Some(&m)).unwrap().report;
        assert!((r2.total - r1.total - base.weights.lambda1 * r1.norm).abs() < 1e-12);
        assert!((r1.total - r1.weighted_total(&base.weights)).abs() < 1e-12);
    }

    #[test]
    fn negative_weight_rejected() {
        let (t, s) = (frame(0.0), frame(0.8));
        let mut cfg = LossConfig::<f64>::default();
        cfg.weights.lambda3 = -1.0;
        assert!(loss_init_total(&pair(&t, &s), &cfg, None).is_err());
    }
}
