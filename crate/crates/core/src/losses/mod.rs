//! Self-supervised consistency losses for depth/normal/pose predictions.
//!
//! Each masked loss returns a [`LossMap`] holding the scalar value and the
//! per-pixel contributions. Scalars are weighted means over pixels that are
//! both valid and inside the mask; reductions run in row-major order so the
//! result does not depend on how per-pixel work was scheduled.

pub mod depth;
pub mod gradient;
pub mod mask;
pub mod normal;
pub mod orthogonality;
pub mod photometric;
pub mod smoothness;
pub mod total;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Grid, Mask};
use crate::scalar::Real;

pub use depth::{depth_consistency_gradients, loss_depth_consistency};
pub use gradient::{numeric_gradient, relative_error};
pub use mask::{compute_masks, specular_mask};
pub use normal::{loss_normal_consistency, normal_consistency_gradient};
pub use orthogonality::{loss_orthogonality, orthogonality_gradient};
pub use photometric::{loss_photometric, photometric_error_map, ssim_loss_map};
pub use smoothness::loss_smoothness;
pub use total::{loss_init_total, Frame, FramePair, InitLoss};

/// Scalar loss with its per-pixel contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct LossMap<T> {
    pub value: T,
    /// Per-pixel values (zero where not valid).
    pub per_pixel: Grid<T>,
    /// Pixels where the per-pixel value is defined.
    pub valid: Grid<bool>,
    /// Weight sum used to normalize `value`.
    pub support: T,
}

/// Weighted mean of per-pixel values over valid pixels.
pub(crate) fn masked_mean<T: Real>(
    per_pixel: Grid<T>,
    valid: Grid<bool>,
    mask: Option<&Mask<T>>,
    what: &'static str,
) -> Result<LossMap<T>> {
    let mut sum = T::zero();
    let mut support = T::zero();
    for (i, (v, ok)) in per_pixel.as_slice().iter().zip(valid.as_slice()).enumerate() {
        if !ok {
            continue;
        }
        let w = mask.map_or(T::one(), |m| m.weights().as_slice()[i]);
        sum += w * *v;
        support += w;
    }
    if !(support > T::zero()) {
        return Err(Error::EmptySupport(what));
    }
    Ok(LossMap {
        value: sum / support,
        per_pixel,
        valid,
        support,
    })
}

/// Weights of the initialization loss terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct LossWeights<T> {
    /// Normal consistency.
    pub lambda1: T,
    /// Depth consistency.
    pub lambda2: T,
    /// Depth/normal orthogonality.
    pub lambda3: T,
    /// Edge-aware smoothness.
    pub lambda4: T,
}

impl<T: Real> Default for LossWeights<T> {
    fn default() -> Self {
        Self {
            lambda1: T::lit(0.1),
            lambda2: T::lit(0.05),
            lambda3: T::lit(0.05),
            lambda4: T::lit(1e-3),
        }
    }
}

impl<T: Real> LossWeights<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda1, self.lambda2, self.lambda3, self.lambda4];
        if all.iter().all(|l| *l >= T::zero() && l.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("loss weights must be non-negative"))
        }
    }
}

/// `[losses]` configuration section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct LossConfig<T> {
    #[serde(flatten)]
    pub weights: LossWeights<T>,
    /// Target pixels with luminance above this are treated as specular.
    pub specular_threshold: T,
}

impl<T: Real> Default for LossConfig<T> {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            specular_threshold: T::lit(0.98),
        }
    }
}

/// Scalar terms of the initialization loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport<T> {
    pub photo: T,
    pub norm: T,
    pub depth: T,
    pub orth: T,
    pub smooth: T,
    pub total: T,
    pub pixel_count: usize,
}

impl<T: Real> LossReport<T> {
    /// Recomputes the weighted total from the individual terms.
    pub fn weighted_total(&self, w: &LossWeights<T>) -> T {
        self.photo + w.lambda1 * self.norm + w.lambda2 * self.depth + w.lambda3 * self.orth + w.lambda4 * self.smooth
    }

    pub fn with_weights(mut self, w: &LossWeights<T>) -> Self {
        self.total = self.weighted_total(w);
        self
    }
}
