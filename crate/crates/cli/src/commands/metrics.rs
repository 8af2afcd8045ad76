use std::path::PathBuf;

use jqf_core::metrics::FsimReference;
use jqf_core::{psnr, ssim};
use serde::Serialize;

use crate::corpus;
use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct MetricsParams {
    pub reference: PathBuf,
    pub distorted: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsRow {
    pub file: String,
    pub psnr: f64,
    pub ssim: f64,
    pub fsim: f64,
}

pub fn run(p: &MetricsParams) -> Result<Vec<MetricsRow>> {
    let reference = corpus::load(&p.reference)?;
    let fsim_ref = FsimReference::new(&reference)?;
    p.distorted
        .iter()
        .map(|path| {
            let img = corpus::load(path)?;
            Ok(MetricsRow {
                file: path.display().to_string(),
                psnr: psnr(&reference, &img)?.value,
                ssim: ssim(&reference, &img)?.value,
                fsim: fsim_ref.score(&img)?,
            })
        })
        .collect()
}

pub fn to_csv(rows: &[MetricsRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}
