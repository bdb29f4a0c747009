//! 8-bit RGB PNG images and binary masks.

use std::path::Path;

use image::{GrayImage, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::grid::{ColorImage, Mask};

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Reads any PNG as RGB with channels scaled to `[0, 1]`.
pub fn read_png(path: impl AsRef<Path>) -> Result<ColorImage> {
    let path = path.as_ref();
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    Ok(ColorImage::from_fn(w as usize, h as usize, |x, y| {
        let p = img.get_pixel(x as u32, y as u32).0;
        [
            p[0] as f64 / 255.0,
            p[1] as f64 / 255.0,
            p[2] as f64 / 255.0,
        ]
    }))
}

/// Writes an RGB image, clamping channels to `[0, 1]`.
pub fn write_png(image: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    let (w, h) = image.dims();
    let out = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let c = image.get(x as usize, y as usize);
        Rgb([to_u8(c[0]), to_u8(c[1]), to_u8(c[2])])
    });
    out.save(path.as_ref()).map_err(Error::from)
}

/// Writes a mask as a grayscale PNG: white where set.
pub fn write_mask_png(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let (w, h) = mask.dims();
    let out = GrayImage::from_fn(w as u32, h as u32, |x, y| {
        Luma([if *mask.get(x as usize, y as usize) {
            255
        } else {
            0
        }])
    });
    out.save(path.as_ref()).map_err(Error::from)
}
