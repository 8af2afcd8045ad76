use std::collections::BTreeMap;
use std::path::PathBuf;

use jqf_core::annealer::anneal_textures;
use jqf_core::texture::{embed_patches, import_embeddings, stitch_mosaic, DctEnergyEmbedder, Embedder, TexturePatch};
use jqf_core::{scale_table, standard_tables, AnnealConfig, TextureModel};
use log::{info, warn};
use serde::Serialize;

use super::corpus_patches;
use crate::corpus;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct AnnealParams {
    pub model: PathBuf,
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub trace_dir: PathBuf,
    /// Per-patch labels (exchange format) for models built on imported embeddings.
    pub labels: Option<PathBuf>,
    pub stride: usize,
    pub max_patches: usize,
    pub workers: usize,
    pub config: AnnealConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct TextureRun {
    pub texture: usize,
    pub patches: usize,
    pub mosaic_side: usize,
    pub annealed: bool,
    pub baseline_size: usize,
    pub size: usize,
    pub baseline_fsim: f64,
    pub fsim: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnealSummary {
    pub params: AnnealParams,
    pub textures: Vec<TextureRun>,
}

fn labels_for(model: &TextureModel, patches: &[TexturePatch], labels: Option<&PathBuf>) -> Result<Vec<usize>> {
    if let Some(path) = labels {
        let set = import_embeddings(path)?;
        let labels: Vec<usize> = match set.labels() {
            Some(l) => l.iter().map(|&v| v as usize).collect(),
            None => set.rows().map(|r| model.classify(r)).collect(),
        };
        if labels.len() != patches.len() {
            return Err(CliError::usage(format!(
                "{} labels for {} corpus patches",
                labels.len(),
                patches.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= model.k()) {
            return Err(CliError::usage(format!("label {l} outside the model's {} textures", model.k())));
        }
        return Ok(labels);
    }
    let embedder = DctEnergyEmbedder;
    if model.embedder_id() != embedder.id() {
        return Err(CliError::usage(format!(
            "model uses embedder `{}`; pass --labels with per-patch labels",
            model.embedder_id()
        )));
    }
    let set = embed_patches(&embedder, patches);
    Ok(set.rows().map(|r| model.classify(r)).collect())
}

pub fn run(p: &AnnealParams) -> Result<AnnealSummary> {
    p.config.validate()?;
    let model = TextureModel::load(&p.model)?;
    let patches = corpus_patches(&p.corpus, p.stride)?;
    let labels = labels_for(&model, &patches, p.labels.as_ref())?;

    let mut groups: BTreeMap<usize, Vec<TexturePatch>> = BTreeMap::new();
    for (patch, label) in patches.into_iter().zip(labels) {
        groups.entry(label).or_default().push(patch);
    }
    let mut mosaics = BTreeMap::new();
    for (&t, group) in &groups {
        let seed = p.config.seed.wrapping_add(t as u64);
        mosaics.insert(t, stitch_mosaic(group, p.max_patches, seed)?);
    }
    for t in (0..model.k()).filter(|t| !groups.contains_key(t)) {
        warn!("texture {t} has no corpus patches; it keeps the scaled standard table");
    }
    info!("annealing {} textures on {} workers", mosaics.len(), p.workers);
    let outcomes = anneal_textures(&mosaics, &p.config, p.workers)?;

    let fallback = scale_table(&standard_tables().0, p.config.quality)?;
    let mut tables = BTreeMap::new();
    let mut runs = Vec::new();
    for t in 0..model.k() {
        let run = match outcomes.get(&t) {
            Some(o) => {
                tables.insert(t, o.table);
                let path = p.trace_dir.join(format!("texture_{t:03}.csv"));
                corpus::write(&path, o.trace.to_csv())?;
                TextureRun {
                    texture: t,
                    patches: groups[&t].len(),
                    mosaic_side: mosaics[&t].width(),
                    annealed: true,
                    baseline_size: o.trace.baseline_size,
                    size: o.size,
                    baseline_fsim: o.trace.baseline_fsim,
                    fsim: o.fsim,
                }
            }
            None => {
                tables.insert(t, fallback);
                TextureRun {
                    texture: t,
                    patches: 0,
                    mosaic_side: 0,
                    annealed: false,
                    baseline_size: 0,
                    size: 0,
                    baseline_fsim: 1.0,
                    fsim: 1.0,
                }
            }
        };
        runs.push(run);
    }
    let mut trained = model;
    trained.set_tables(p.config.quality, tables)?;
    corpus::write(&p.out, trained.to_bytes())?;
    let summary = AnnealSummary {
        params: p.clone(),
        textures: runs,
    };
    corpus::write(&p.trace_dir.join("anneal.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}
