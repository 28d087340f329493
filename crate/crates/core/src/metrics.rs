//! MSE, PSNR (peak 255) and SSIM.
//!
//! SSIM uses the common parameterization: an 11x11 Gaussian window with
//! standard deviation 1.5, `K1 = 0.01`, `K2 = 0.03`, dynamic range 255, and
//! the mean over all windows that fit entirely inside the image.

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const PEAK: f64 = 255.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_GAUSSIAN_STD: f64 = 1.5;
pub const SSIM_C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
pub const SSIM_C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub mse: f64,
    /// `+inf` for identical images
    pub psnr: f64,
    pub ssim: f64,
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.same_dims(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - half;
        *v = (-x * x / (2.0 * SSIM_GAUSSIAN_STD * SSIM_GAUSSIAN_STD)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable 'valid' filtering of a row-major plane.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w - SSIM_WINDOW + 1, h - SSIM_WINDOW + 1);
    let mut tmp = vec![0.0; ow * h];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        for c in 0..ow {
            tmp[r * ow + c] = k.iter().zip(&row[c..c + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * tmp[(r + j) * ow + c])
                .sum();
        }
    }
    out
}

pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.same_dims(b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::ImageTooSmall(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let k = gaussian_kernel();
    let (x, y) = (a.data(), b.data());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let mu_x = filter_valid(x, w, h, &k);
    let mu_y = filter_valid(y, w, h, &k);
    let e_xx = filter_valid(&xx, w, h, &k);
    let e_yy = filter_valid(&yy, w, h, &k);
    let e_xy = filter_valid(&xy, w, h, &k);

    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = e_xx[i] - mx * mx;
        let vy = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
    }
    Ok(total / mu_x.len() as f64)
}

pub fn quality(reference: &GrayImage, test: &GrayImage) -> Result<QualityReport> {
    let m = mse(reference, test)?;
    Ok(QualityReport {
        mse: m,
        psnr: psnr_from_mse(m),
        ssim: ssim(reference, test)?,
    })
}

/// Formats a PSNR value for CSV output, writing `inf` for identical images.
pub fn format_psnr(psnr: f64) -> String {
    if psnr.is_infinite() {
        "inf".to_string()
    } else {
        format!("{psnr:.4}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_offset() {
        let a = GrayImage::from_fn(5, 4, |r, c| (r * 13 + c * 7) as f64).unwrap();
        let b = GrayImage::from_fn(5, 4, |r, c| (r * 13 + c * 7) as f64 + 16.0).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 256.0);
        assert_eq!(mse(&b, &a).unwrap(), 256.0);
    }

    #[test]
    fn psnr_values() {
        assert_eq!(psnr_from_mse(0.0), f64::INFINITY);
        assert_eq!(psnr_from_mse(65025.0), 0.0);
        // 10 log10(65025 / 256), evaluated independently
        assert!((psnr_from_mse(256.0) - 24.048_403_955_560_61).abs() < 1e-10);
        assert_eq!(format_psnr(f64::INFINITY), "inf");
    }

    #[test]
    fn dimension_mismatch() {
        let a = GrayImage::filled(12, 12, 0.0).unwrap();
        let b = GrayImage::filled(12, 13, 0.0).unwrap();
        assert!(matches!(mse(&a, &b), Err(Error::DimensionMismatch(..))));
        assert!(ssim(&a, &b).is_err());
    }

    #[test]
    fn ssim_too_small() {
        let a = GrayImage::filled(10, 20, 1.0).unwrap();
        assert!(matches!(ssim(&a, &a), Err(Error::ImageTooSmall(_))));
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = GrayImage::from_fn(20, 16, |r, c| ((r * 31 + c * 17) % 255) as f64).unwrap();
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_constant_images() {
        let (c, d) = (100.0, 30.0);
        let a = GrayImage::filled(16, 16, c).unwrap();
        let b = GrayImage::filled(16, 16, c + d).unwrap();
        let expected = (2.0 * c * (c + d) + SSIM_C1) / (c * c + (c + d) * (c + d) + SSIM_C1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-9);
    }
}
