use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use jqf_core::metrics::FsimReference;
use jqf_core::texture::{import_embeddings, DctEnergyEmbedder};
use jqf_core::{EncodeOptions, Subsampling, TableFile, TextureModel};
use serde::Serialize;

use super::{fused_usable_at, measure, PORTABLE_ANNEAL_QUALITY, pct_delta, standard_chroma, standard_luma, Measured};
use crate::corpus;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct CompressParams {
    pub image: PathBuf,
    pub model: PathBuf,
    pub out: PathBuf,
    pub report: PathBuf,
    /// Externally computed embeddings or labels for the image's patches.
    pub labels: Option<PathBuf>,
    pub quality: u8,
    pub subsampling: Subsampling,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompressReport {
    pub params: CompressParams,
    pub anneal_quality: Option<u8>,
    pub prediction_ms: f64,
    pub patches: usize,
    pub distribution: BTreeMap<usize, f64>,
    pub fused_table: Vec<u8>,
    pub fused: Measured,
    pub standard: Measured,
    pub size_delta_pct: f64,
}

pub fn run(p: &CompressParams) -> Result<CompressReport> {
    let model = TextureModel::load(&p.model)?;
    let image = corpus::load(&p.image)?;
    if let Some(aq) = model.anneal_quality().filter(|&aq| !fused_usable_at(aq, p.quality)) {
        return Err(CliError::usage(format!(
            "tables annealed at Q={aq} apply only at Q={aq}; anneal at Q={PORTABLE_ANNEAL_QUALITY} to compress at Q={}",
            p.quality
        )));
    }

    let started = Instant::now();
    let distribution = match &p.labels {
        Some(path) => model.predict_from_embeddings(&import_embeddings(path)?)?,
        None => model.predict(&image, &DctEnergyEmbedder)?,
    };
    let table = model.fused_table(&distribution, p.quality)?;
    let prediction_ms = started.elapsed().as_secs_f64() * 1e3;

    let options = EncodeOptions {
        subsampling: p.subsampling,
    };
    let chroma = standard_chroma(p.quality)?;
    let reference = FsimReference::new(&image)?;
    let (blob, fused) = measure(&image, &reference, &table, &chroma, &options)?;
    let (_, standard) = measure(&image, &reference, &standard_luma(p.quality)?, &chroma, &options)?;
    corpus::write(&p.out, blob.as_bytes())?;

    let report = CompressReport {
        params: p.clone(),
        anneal_quality: model.anneal_quality(),
        prediction_ms,
        patches: distribution.total_patches(),
        distribution: distribution.weights(),
        fused_table: table.values().to_vec(),
        fused,
        standard,
        size_delta_pct: pct_delta(fused.size as f64, standard.size as f64),
    };
    corpus::write(&p.report, serde_json::to_string_pretty(&report)?)?;
    let table_path = p.out.with_extension("qtable");
    corpus::write(&table_path, TableFile::new(table, p.quality)?.to_text())?;
    Ok(report)
}
