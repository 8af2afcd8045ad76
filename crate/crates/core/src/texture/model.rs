use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::exchange::Cursor;
use super::{
    extract_patches, nearest_centroid, prediction_image, Clustering, Embedder, EmbeddingSet, TextureDistribution,
    PATCH_SIZE,
};
use crate::error::{Error, Result};
use crate::qtable::{fuse, scale_factor, ComponentKind, QuantTable, TableFile};
use crate::raster::RasterImage;

const MAGIC: &[u8; 4] = b"JQFM";
pub const MODEL_VERSION: u16 = 1;

/// Texture centroids plus, once annealed, one luminance table per texture.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureModel {
    embedder_id: String,
    centroids: Vec<Vec<f32>>,
    anneal_quality: Option<u8>,
    tables: BTreeMap<usize, QuantTable>,
}

impl TextureModel {
    pub fn new(embedder_id: &str, centroids: Vec<Vec<f32>>) -> Result<Self> {
        let Some(first) = centroids.first() else {
            return Err(Error::Cluster("a model needs at least one centroid".into()));
        };
        let dim = first.len();
        if dim == 0 || centroids.iter().any(|c| c.len() != dim) {
            return Err(Error::Cluster("centroids must share a non-zero dimension".into()));
        }
        if centroids.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Cluster("non-finite centroid entry".into()));
        }
        for (i, a) in centroids.iter().enumerate() {
            if centroids[i + 1..].contains(a) {
                return Err(Error::Cluster(format!("centroid {i} is duplicated")));
            }
        }
        // Validates ASCII and length.
        EmbeddingSet::new(embedder_id, dim, Vec::new())?;
        Ok(Self {
            embedder_id: embedder_id.to_string(),
            centroids,
            anneal_quality: None,
            tables: BTreeMap::new(),
        })
    }

    pub fn from_clustering(embedder_id: &str, clustering: &Clustering) -> Result<Self> {
        Self::new(embedder_id, clustering.centroids.clone())
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids[0].len()
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn centroids(&self) -> &[Vec<f32>] {
        &self.centroids
    }

    pub fn anneal_quality(&self) -> Option<u8> {
        self.anneal_quality
    }

    pub fn tables(&self) -> &BTreeMap<usize, QuantTable> {
        &self.tables
    }

    pub fn has_tables(&self) -> bool {
        self.tables.len() == self.k()
    }

    /// Installs one luminance table per texture, all expressed at `quality`.
    pub fn set_tables(&mut self, quality: u8, tables: BTreeMap<usize, QuantTable>) -> Result<()> {
        scale_factor(quality)?;
        if tables.len() != self.k() || tables.keys().any(|&t| t >= self.k()) {
            return Err(Error::invalid(format!(
                "expected one table for each of {} textures, got ids {:?}",
                self.k(),
                tables.keys().collect::<Vec<_>>()
            )));
        }
        if tables.values().any(|t| t.kind() != ComponentKind::Luminance) {
            return Err(Error::invalid("texture tables must be luminance tables"));
        }
        self.anneal_quality = Some(quality);
        self.tables = tables;
        Ok(())
    }

    pub fn classify(&self, embedding: &[f32]) -> usize {
        nearest_centroid(embedding, &self.centroids)
    }

    /// Texture mix of an image: stride-64 patches of the (possibly downsampled)
    /// image, each assigned to its nearest centroid.
    pub fn predict(&self, image: &RasterImage, embedder: &dyn Embedder) -> Result<TextureDistribution> {
        if embedder.id() != self.embedder_id || embedder.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "model was built with embedder `{}` (dim {}), not `{}` (dim {})",
                self.embedder_id,
                self.dim(),
                embedder.id(),
                embedder.dim()
            )));
        }
        let input = prediction_image(image)?;
        let patches = extract_patches(&input, PATCH_SIZE, "")?;
        let labels: Vec<usize> = patches
            .par_iter()
            .map(|p| self.classify(&embedder.embed(p)))
            .collect();
        TextureDistribution::from_labels(&labels, self.k())
    }

    /// Texture mix from externally computed data: the label block if present,
    /// otherwise nearest-centroid over the embeddings.
    pub fn predict_from_embeddings(&self, set: &EmbeddingSet) -> Result<TextureDistribution> {
        if let Some(labels) = set.labels() {
            let labels: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
            return TextureDistribution::from_labels(&labels, self.k());
        }
        if set.embedder_id() != self.embedder_id || set.dim() != self.dim() {
            return Err(Error::Format(format!(
                "embeddings from `{}` (dim {}) do not match model `{}` (dim {})",
                set.embedder_id(),
                set.dim(),
                self.embedder_id,
                self.dim()
            )));
        }
        let labels: Vec<usize> = set.rows().map(|r| self.classify(r)).collect();
        TextureDistribution::from_labels(&labels, self.k())
    }

    /// Fuses the per-texture tables by `distribution` and re-expresses the result at `quality`.
    pub fn fused_table(&self, distribution: &TextureDistribution, quality: u8) -> Result<QuantTable> {
        let anneal_q = self
            .anneal_quality
            .filter(|_| self.has_tables())
            .ok_or_else(|| Error::invalid("model has no annealed tables"))?;
        let weights = distribution.fusion_weights()?;
        let tables: BTreeMap<usize, QuantTable> = weights
            .iter()
            .map(|(t, _)| {
                self.tables
                    .get(&t)
                    .copied()
                    .map(|tab| (t, tab))
                    .ok_or_else(|| Error::invalid(format!("texture {t} outside model")))
            })
            .collect::<Result<_>>()?;
        let fused = fuse(&tables, &weights)?;
        TableFile::new(fused, anneal_q)?.at_quality(quality)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.k() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.embedder_id.len() as u16).to_le_bytes());
        out.extend_from_slice(self.embedder_id.as_bytes());
        out.push(self.anneal_quality.unwrap_or(0));
        let block = EmbeddingSet::new(&self.embedder_id, self.dim(), self.centroids.concat())
            .expect("model centroids are valid");
        out.extend_from_slice(&block.to_bytes());
        out.extend_from_slice(&(self.tables.len() as u32).to_le_bytes());
        let q = self.anneal_quality.unwrap_or(50);
        for (&id, table) in &self.tables {
            let text = TableFile { table: *table, quality: q }.to_text();
            out.extend_from_slice(&(id as u32).to_le_bytes());
            out.extend_from_slice(&(text.len() as u32).to_le_bytes());
            out.extend_from_slice(text.as_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::Format(format!("model file: {m}"));
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(bad("bad magic, expected JQFM".into()));
        }
        let version = cur.u16()?;
        if version != MODEL_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let k = cur.u32()? as usize;
        let dim = cur.u32()? as usize;
        let id_len = cur.u16()? as usize;
        let id = String::from_utf8(cur.take(id_len)?.to_vec()).map_err(|_| bad("embedder id not ASCII".into()))?;
        let quality = match cur.u8()? {
            0 => None,
            q => Some(q),
        };
        let (block, used) = EmbeddingSet::parse_prefix(&bytes[cur.pos..])?;
        cur.pos += used;
        if block.len() != k || block.dim() != dim || block.embedder_id() != id {
            return Err(bad("centroid block disagrees with header".into()));
        }
        let mut model = Self::new(&id, block.rows().map(<[f32]>::to_vec).collect())?;
        let n = cur.u32()? as usize;
        let mut tables = BTreeMap::new();
        for _ in 0..n {
            let tid = cur.u32()? as usize;
            let len = cur.u32()? as usize;
            let text = std::str::from_utf8(cur.take(len)?).map_err(|_| bad("table text not UTF-8".into()))?;
            let file = TableFile::parse(text)?;
            if Some(file.quality) != quality {
                return Err(bad(format!("table {tid} at quality {} in a model annealed at {quality:?}", file.quality)));
            }
            tables.insert(tid, file.table);
        }
        if cur.remaining() != 0 {
            return Err(bad(format!("{} trailing bytes", cur.remaining())));
        }
        if let Some(q) = quality {
            if !tables.is_empty() {
                model.set_tables(q, tables)?;
            } else {
                model.anneal_quality = Some(q);
            }
        } else if !tables.is_empty() {
            return Err(bad("tables present without an annealing quality".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qtable::{scale_table, standard_tables};

    fn model() -> TextureModel {
        TextureModel::new("t", vec![vec![0.0, 1.0], vec![3.0, 1.0]]).unwrap()
    }

    #[test]
    fn rejects_bad_centroids() {
        assert!(TextureModel::new("t", vec![]).is_err());
        assert!(TextureModel::new("t", vec![vec![1.0], vec![1.0]]).is_err());
        assert!(TextureModel::new("t", vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn round_trip_with_and_without_tables() {
        let mut m = model();
        assert_eq!(TextureModel::from_bytes(&m.to_bytes()).unwrap(), m);
        let std95 = scale_table(&standard_tables().0, 95).unwrap();
        m.set_tables(95, BTreeMap::from([(0, std95), (1, std95.with_value(0, 9))])).unwrap();
        let back = TextureModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.anneal_quality(), Some(95));
    }

    #[test]
    fn label_override_wins() {
        let m = model();
        let set = EmbeddingSet::new("other", 500, vec![])
            .unwrap()
            .with_labels(vec![1, 1, 0, 1])
            .unwrap();
        let d = m.predict_from_embeddings(&set).unwrap();
        assert_eq!(d.weight(1), 0.75);
        let unlabeled = EmbeddingSet::new("other", 2, vec![0.0, 0.0]).unwrap();
        assert!(m.predict_from_embeddings(&unlabeled).is_err());
    }

    #[test]
    fn fusion_requires_tables() {
        let m = model();
        let d = TextureDistribution::from_labels(&[0, 1], 2).unwrap();
        assert!(m.fused_table(&d, 50).is_err());
    }
}
