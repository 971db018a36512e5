//! Pixel masks for the initialization loss: stationary pixels, failed
//! projections and specular highlights are excluded.

use super::photometric::min_error_map;
use crate::error::{Error, Result};
use crate::geometry::field::check_dims;
use crate::geometry::{Grid, ImageRgb, Mask};
use crate::scalar::Real;

/// 1 where the target luminance is at most `threshold`.
pub fn specular_mask<T: Real>(image: &ImageRgb<T>, threshold: T) -> Mask<T> {
    let (w, h) = image.dims();
    Mask::from_bools(&Grid::from_fn(w, h, |x, y| image.luminance(x, y) <= threshold))
}

/// Intersection of the auto-mask (warping must beat the unwarped sources),
/// the projection validity, and the specular mask.
pub fn compute_masks<T: Real>(
    image_t: &ImageRgb<T>,
    images_s: &[ImageRgb<T>],
    warped_sources: &[ImageRgb<T>],
    projection_validity: &Mask<T>,
    specular_threshold: T,
) -> Result<Mask<T>> {
    if images_s.is_empty() || images_s.len() != warped_sources.len() {
        return Err(Error::invalid("need one warped image per source image"));
    }
    check_dims(image_t.dims(), projection_validity.dims())?;
    let warped_err = min_error_map(image_t, warped_sources)?;
    let identity_err = min_error_map(image_t, images_s)?;
    let (w, h) = image_t.dims();
    let keep = Grid::from_fn(w, h, |x, y| {
        *warped_err.get(x, y) < *identity_err.get(x, y)
            && projection_validity.get(x, y) > T::zero()
            && image_t.luminance(x, y) <= specular_threshold
    });
    Ok(Mask::from_bools(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(phase: f64) -> ImageRgb<f64> {
        ImageRgb::from_fn_clamped(10, 8, |x, y| [0.4 + 0.3 * ((x as f64 + phase) * 0.9).sin() * (0.5 * y as f64).cos(); 3])
    }

    #[test]
    fn saturated_pixel_is_excluded() {
        let mut t = textured(0.0);
        t.set(4, 4, [1.0, 1.0, 1.0]);
        let s = textured(0.7);
        let m = compute_masks(&t, &[s], &[t.clone()], &Mask::ones(10, 8), 0.98).unwrap();
        assert_eq!(m.get(4, 4), 0.0);
        assert_eq!(m.get(1, 1), 1.0);
    }

    #[test]
    fn stationary_frames_are_masked() {
        let t = textured(0.0);
        let m = compute_masks(&t, std::slice::from_ref(&t), std::slice::from_ref(&t), &Mask::ones(10, 8), 0.98).unwrap();
        assert_eq!(m.count_nonzero(), 0);
    }

    #[test]
    fn invalid_projection_is_masked() {
        let t = textured(0.0);
        let s = textured(0.7);
        let mut valid = Grid::filled(10, 8, 1.0);
        valid.set(2, 3, 0.0);
        let m = compute_masks(&t, &[s], std::slice::from_ref(&t), &Mask::new(valid).unwrap(), 0.98).unwrap();
        assert_eq!(m.get(2, 3), 0.0);
    }

    #[test]
    fn mismatched_lists_rejected() {
        let t = textured(0.0);
        assert!(compute_masks(&t, std::slice::from_ref(&t), &[], &Mask::ones(10, 8), 0.98).is_err());
    }
}
