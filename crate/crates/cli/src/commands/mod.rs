pub mod anneal;
pub mod benchmark;
pub mod cluster;
pub mod compress;
pub mod export;
pub mod metrics;
pub mod visualize;

use std::path::Path;

use jqf_core::texture::{extract_patches, TexturePatch};
use log::warn;

use crate::corpus;
use crate::error::Result;

/// Patches from every corpus image, in file order; images smaller than a patch are skipped.
pub(crate) fn corpus_patches(dir: &Path, stride: usize) -> Result<Vec<TexturePatch>> {
    let mut patches = Vec::new();
    for path in corpus::list_images(dir)? {
        let image = corpus::load(&path)?;
        match extract_patches(&image, stride, &corpus::file_name(&path)) {
            Ok(p) => patches.extend(p),
            Err(jqf_core::Error::TooSmall { .. }) => warn!("{}: smaller than one patch, skipped", path.display()),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(patches)
}

use jqf_core::metrics::FsimReference;
use jqf_core::{encode, psnr, scale_table, ssim, standard_tables, EncodeOptions, JpegBlob, QuantTable, RasterImage};
use serde::Serialize;

/// Rate and distortion of one encode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measured {
    pub size: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub fsim: f64,
}

pub(crate) fn standard_chroma(quality: u8) -> Result<QuantTable> {
    Ok(scale_table(&standard_tables().1, quality)?)
}

pub(crate) fn standard_luma(quality: u8) -> Result<QuantTable> {
    Ok(scale_table(&standard_tables().0, quality)?)
}

pub(crate) fn measure(
    image: &RasterImage,
    reference: &FsimReference,
    luma: &QuantTable,
    chroma: &QuantTable,
    options: &EncodeOptions,
) -> Result<(JpegBlob, Measured)> {
    let blob = encode(image, luma, chroma, options)?;
    let decoded = blob.decode()?;
    let m = Measured {
        size: blob.size_bytes(),
        psnr: psnr(image, &decoded)?.value,
        ssim: ssim(image, &decoded)?.value,
        fsim: reference.score(&decoded)?,
    };
    Ok((blob, m))
}

/// Quality whose tables may be re-expressed at any other quality.
pub const PORTABLE_ANNEAL_QUALITY: u8 = 50;

/// Tables annealed at the portable quality serve every target; others only their own quality.
pub fn fused_usable_at(anneal_quality: u8, quality: u8) -> bool {
    anneal_quality == PORTABLE_ANNEAL_QUALITY || anneal_quality == quality
}

pub(crate) fn sidecar(path: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

pub(crate) fn pct_delta(variant: f64, standard: f64) -> f64 {
    (variant / standard - 1.0) * 100.0
}
