//! PSNR and SSIM on RGB images in `[0, 1]`.

use crate::error::{Error, Result};
use crate::grid::ColorImage;

/// Returned for identical images instead of infinity.
pub const PSNR_CAP_DB: f64 = 100.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

fn check(a: &ColorImage, b: &ColorImage) -> Result<()> {
    if !a.same_dims(b) {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty image".into()));
    }
    if a.as_slice()
        .iter()
        .chain(b.as_slice())
        .flatten()
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("image".into()));
    }
    Ok(())
}

pub fn psnr(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    check(a, b)?;
    let n = (a.len() * 3) as f64;
    let mse = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]).powi(2)))
        .sum::<f64>()
        / n;
    if mse <= 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.map(|v| v / sum)
}

/// Separable same-size filtering with zero padding.
fn blur(data: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let sx = x as isize + i as isize - half;
                if sx >= 0 && (sx as usize) < w {
                    acc += kv * data[y * w + sx as usize];
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let sy = y as isize + i as isize - half;
                if sy >= 0 && (sy as usize) < h {
                    acc += kv * tmp[sy as usize * w + x];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Mean SSIM over pixels and channels: 11x11 gaussian window (sigma 1.5),
/// zero padding at the borders, constants `(0.01)^2` and `(0.03)^2`.
pub fn ssim(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    check(a, b)?;
    let (w, h) = a.dims();
    let k = gaussian_kernel();
    let mut total = 0.0;
    for c in 0..3 {
        let x: Vec<f64> = a.as_slice().iter().map(|p| p[c]).collect();
        let y: Vec<f64> = b.as_slice().iter().map(|p| p[c]).collect();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let mx = blur(&x, w, h, &k);
        let my = blur(&y, w, h, &k);
        let sxx = blur(&xx, w, h, &k);
        let syy = blur(&yy, w, h, &k);
        let sxy = blur(&xy, w, h, &k);
        for i in 0..w * h {
            let (m1, m2) = (mx[i], my[i]);
            let v1 = sxx[i] - m1 * m1;
            let v2 = syy[i] - m2 * m2;
            let cov = sxy[i] - m1 * m2;
            total += ((2.0 * m1 * m2 + C1) * (2.0 * cov + C2))
                / ((m1 * m1 + m2 * m2 + C1) * (v1 + v2 + C2));
        }
    }
    Ok(total / (3 * w * h) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> ColorImage {
        ColorImage::from_fn(20, 15, |x, y| [x as f64 / 20.0, y as f64 / 15.0, 0.5])
    }

    #[test]
    fn identical_images() {
        let a = ramp();
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_of_uniform_offset() {
        let a = ramp();
        let b = a.map(|p| [p[0] + 0.1, p[1] + 0.1, p[2] + 0.1]);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_dims() {
        let a = ramp();
        let b = ColorImage::filled(3, 3, [0.0; 3]);
        assert!(psnr(&a, &b).is_err());
        assert!(ssim(&a, &b).is_err());
    }

    #[test]
    fn kernel_is_normalized() {
        assert!((gaussian_kernel().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
