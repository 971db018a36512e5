//! 8-bit PNG images and coverage heat maps.

use std::path::Path;

use image::{GrayImage, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::{Grid, ImageRgb};

fn image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    }
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_rgb(path: &Path, image: &ImageRgb<f64>) -> Result<()> {
    let (w, h) = image.dims();
    let buf = RgbImage::from_fn(w as u32, h as u32, |x, y| image::Rgb(image.get(x as usize, y as usize).map(quantize)));
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| image_error(path, e))
}

/// Reads any PNG as RGB scaled to `[0, 1]`.
pub fn read_rgb(path: &Path) -> Result<ImageRgb<f64>> {
    let img = image::open(path).map_err(|e| image_error(path, e))?.to_rgb8();
    let (w, h) = img.dimensions();
    let pixels = Grid::from_fn(w as usize, h as usize, |x, y| {
        img.get_pixel(x as u32, y as u32).0.map(|c| c as f64 / 255.0)
    });
    ImageRgb::new(pixels)
}

/// Grayscale map of observed flags: observed cells white, the rest black.
pub fn write_coverage(path: &Path, observed: &Grid<bool>) -> Result<()> {
    let (w, h) = observed.dims();
    let buf = GrayImage::from_fn(w as u32, h as u32, |x, y| {
        image::Luma([if *observed.get(x as usize, y as usize) { 255 } else { 0 }])
    });
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| image_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb_round_trip_is_exact_on_the_8_bit_lattice() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let img = ImageRgb::from_fn_clamped(7, 4, |x, y| [x as f64 / 255.0, (10 * y) as f64 / 255.0, 1.0]);
        write_rgb(&path, &img).unwrap();
        assert_eq!(read_rgb(&path).unwrap(), img);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_rgb(Path::new("/nonexistent/x.png")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn coverage_map_is_white_where_observed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        let g = Grid::from_fn(3, 2, |x, _| x == 1);
        write_coverage(&path, &g).unwrap();
        let back = image::open(&path).unwrap().to_luma8();
        assert_eq!(back.get_pixel(1, 0).0, [255]);
        assert_eq!(back.get_pixel(0, 1).0, [0]);
    }
}
