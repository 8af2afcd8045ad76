use std::path::PathBuf;

use jqf_core::texture::{cluster, embed_patches, import_embeddings, DctEnergyEmbedder, KMeansConfig};
use jqf_core::TextureModel;
use serde::Serialize;

use super::{corpus_patches, sidecar};
use crate::corpus;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ClusterParams {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub out: PathBuf,
    pub assignments: PathBuf,
    pub k: usize,
    pub stride: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterSummary {
    pub params: ClusterParams,
    pub embedder_id: String,
    pub k: usize,
    pub patches: usize,
    pub iterations: usize,
    pub converged: bool,
    pub inertia: f64,
    pub cluster_sizes: Vec<usize>,
}

pub fn run(p: &ClusterParams) -> Result<ClusterSummary> {
    let (set, origins) = match (&p.embeddings, &p.corpus) {
        (Some(path), _) => {
            let set = import_embeddings(path)?;
            let origins = vec![(String::new(), None); set.len()];
            (set, origins)
        }
        (None, Some(dir)) => {
            let patches = corpus_patches(dir, p.stride)?;
            let set = embed_patches(&DctEnergyEmbedder, &patches);
            let origins = patches.into_iter().map(|q| (q.source, Some((q.x, q.y)))).collect();
            (set, origins)
        }
        (None, None) => return Err(CliError::usage("cluster needs --corpus or --embeddings")),
    };
    if p.k > set.len() {
        return Err(CliError::usage(format!("K={} exceeds the {} available patches", p.k, set.len())));
    }
    let result = cluster(&set, &KMeansConfig::new(p.k, p.seed))?;
    let model = TextureModel::from_clustering(set.embedder_id(), &result)?;
    corpus::write(&p.out, model.to_bytes())?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["patch", "source", "x", "y", "texture"])?;
    let mut sizes = vec![0; p.k];
    for (i, ((source, origin), &label)) in origins.iter().zip(&result.labels).enumerate() {
        sizes[label] += 1;
        let (x, y) = origin.map_or((String::new(), String::new()), |(x, y)| (x.to_string(), y.to_string()));
        w.write_record([i.to_string(), source.clone(), x, y, label.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(e.to_string()))?;
    corpus::write(&p.assignments, bytes)?;

    let summary = ClusterSummary {
        params: p.clone(),
        embedder_id: set.embedder_id().to_string(),
        k: p.k,
        patches: set.len(),
        iterations: result.inertia_history.len(),
        converged: result.converged,
        inertia: result.inertia_history.last().copied().unwrap_or(0.0),
        cluster_sizes: sizes,
    };
    corpus::write(&sidecar(&p.out, ".cluster.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}
