//! Full-reference quality metrics on the BT.601 luminance plane.

mod fsim;
mod ssim;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use fsim::{fsim_luma, FsimReference, FSIM_MIN_DIMENSION};
pub use ssim::{ssim_luma, SSIM_MIN_DIMENSION};

use crate::error::{Error, Result};
use crate::raster::RasterImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Psnr,
    Ssim,
    Fsim,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Psnr => "psnr",
            MetricKind::Ssim => "ssim",
            MetricKind::Fsim => "fsim",
        })
    }
}

/// A metric value: dB for PSNR (`+inf` for identical inputs), `[0, 1]` for SSIM/FSIM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub kind: MetricKind,
    pub value: f64,
}

impl QualityScore {
    pub fn new(kind: MetricKind, value: f64) -> Self {
        Self { kind, value }
    }
}

/// Peak signal-to-noise ratio of the luminance planes.
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<QualityScore> {
    a.same_dimensions(b)?;
    let (la, lb) = (a.luma(), b.luma());
    let sse: f64 = la.iter().zip(&lb).map(|(x, y)| (x - y) * (x - y)).sum();
    let mse = sse / la.len() as f64;
    let value = if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    };
    Ok(QualityScore::new(MetricKind::Psnr, value))
}

/// Mean SSIM over the luminance plane (11x11 Gaussian window, sigma 1.5).
pub fn ssim(a: &RasterImage, b: &RasterImage) -> Result<QualityScore> {
    a.same_dimensions(b)?;
    let value = ssim_luma(&a.luma(), &b.luma(), a.width(), a.height())?;
    Ok(QualityScore::new(MetricKind::Ssim, value))
}

/// Luminance FSIM.
pub fn fsim(a: &RasterImage, b: &RasterImage) -> Result<QualityScore> {
    a.same_dimensions(b)?;
    let value = FsimReference::new(a)?.score(b)?;
    Ok(QualityScore::new(MetricKind::Fsim, value))
}

/// The lowest candidate FSIM accepted against a baseline FSIM at tolerance `gamma`.
pub fn tolerance_threshold(baseline_fsim: f64, gamma: f64) -> f64 {
    baseline_fsim * (1.0 - gamma)
}

/// Scalar form of [`quality_within_tolerance`].
pub fn within_tolerance(candidate_fsim: f64, baseline_fsim: f64, gamma: f64) -> bool {
    candidate_fsim >= tolerance_threshold(baseline_fsim, gamma)
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid(format!("tolerance {gamma} outside [0, 1)")));
    }
    Ok(())
}

/// True iff `FSIM(raw, candidate) >= FSIM(raw, baseline) * (1 - gamma)`.
pub fn quality_within_tolerance(
    raw: &RasterImage,
    candidate: &RasterImage,
    baseline: &RasterImage,
    gamma: f64,
) -> Result<bool> {
    check_gamma(gamma)?;
    raw.same_dimensions(candidate)?;
    raw.same_dimensions(baseline)?;
    let reference = FsimReference::new(raw)?;
    let c = reference.score(candidate)?;
    let b = reference.score(baseline)?;
    Ok(within_tolerance(c, b, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize, seed: u32) -> RasterImage {
        let data = (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as u32, (i / w) as u32);
                ((x * 7 + y * 13 + seed * 31 + (x * y) % 17) % 256) as u8
            })
            .collect();
        RasterImage::gray(w, h, data).unwrap()
    }

    #[test]
    fn psnr_identity_and_extremes() {
        let x = ramp(16, 16, 1);
        assert_eq!(psnr(&x, &x).unwrap().value, f64::INFINITY);
        let black = RasterImage::filled(8, 8, 0).unwrap();
        let white = RasterImage::filled(8, 8, 255).unwrap();
        assert_eq!(psnr(&black, &white).unwrap().value, 0.0);
        assert!(psnr(&black, &ramp(9, 8, 0)).is_err());
    }

    #[test]
    fn tolerance_examples() {
        assert!((tolerance_threshold(0.99, 0.01) - 0.9801).abs() < 1e-15);
        assert!(within_tolerance(0.985, 0.99, 0.01));
        assert!(within_tolerance(0.99, 0.99, 0.0));
        assert!(!within_tolerance(0.99 - 1e-12, 0.99, 0.0));
    }

    #[test]
    fn tolerance_predicate_on_images() {
        let raw = ramp(64, 64, 3);
        let mut noisy = raw.clone().into_data();
        for (i, v) in noisy.iter_mut().enumerate() {
            *v = v.saturating_add((i % 5) as u8);
        }
        let noisy = RasterImage::gray(64, 64, noisy).unwrap();
        assert!(quality_within_tolerance(&raw, &noisy, &noisy, 0.0).unwrap());
        assert!(quality_within_tolerance(&raw, &raw, &noisy, 0.0).unwrap());
        assert!(!quality_within_tolerance(&raw, &noisy, &raw, 0.0).unwrap());
        assert!(quality_within_tolerance(&raw, &noisy, &raw, 1.0).is_err());
    }
}
