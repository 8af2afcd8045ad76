//! Texture patches, embeddings, clustering, mosaics and texture-mix prediction.

mod embed;
mod exchange;
mod kmeans;
mod model;
mod mosaic;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use embed::{DctEnergyEmbedder, Embedder, DCT_ENERGY_DIM, DCT_ENERGY_ID};
pub use exchange::{import_embeddings, EmbeddingSet, EXCHANGE_VERSION};
pub use kmeans::{cluster, Clustering, KMeansConfig};
pub use model::{TextureModel, MODEL_VERSION};
pub use mosaic::{stitch_mosaic, DEFAULT_MAX_PATCHES};

use crate::error::{Error, Result};
use crate::qtable::FusionWeights;
use crate::raster::RasterImage;

pub const PATCH_SIZE: usize = 64;
/// Images whose longer side exceeds this are downsampled before prediction.
pub const PREDICTION_MAX_DIMENSION: usize = 2048;

/// A 64x64 luminance patch and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct TexturePatch {
    pixels: Vec<u8>,
    pub source: String,
    pub x: usize,
    pub y: usize,
}

impl TexturePatch {
    pub fn new(pixels: Vec<u8>, source: impl Into<String>, x: usize, y: usize) -> Result<Self> {
        if pixels.len() != PATCH_SIZE * PATCH_SIZE {
            return Err(Error::invalid(format!(
                "patch needs {} samples, got {}",
                PATCH_SIZE * PATCH_SIZE,
                pixels.len()
            )));
        }
        Ok(Self {
            pixels,
            source: source.into(),
            x,
            y,
        })
    }

    /// Row-major luma samples.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn to_image(&self) -> RasterImage {
        RasterImage::gray(PATCH_SIZE, PATCH_SIZE, self.pixels.clone()).expect("patch is 64x64")
    }
}

fn patch_origins(len: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..=(len - PATCH_SIZE) / stride).map(move |k| k * stride)
}

/// Cuts every 64x64 patch at origins `(j * stride, k * stride)` that fits inside the image.
pub fn extract_patches(image: &RasterImage, stride: usize, source: &str) -> Result<Vec<TexturePatch>> {
    if stride == 0 {
        return Err(Error::invalid("patch stride must be at least 1"));
    }
    let (w, h) = (image.width(), image.height());
    if w < PATCH_SIZE || h < PATCH_SIZE {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min: PATCH_SIZE,
        });
    }
    let gray = image.to_gray();
    let data = gray.data();
    let mut patches = Vec::new();
    for y in patch_origins(h, stride) {
        for x in patch_origins(w, stride) {
            let mut pixels = Vec::with_capacity(PATCH_SIZE * PATCH_SIZE);
            for row in y..y + PATCH_SIZE {
                pixels.extend_from_slice(&data[row * w + x..row * w + x + PATCH_SIZE]);
            }
            patches.push(TexturePatch {
                pixels,
                source: source.to_string(),
                x,
                y,
            });
        }
    }
    Ok(patches)
}

/// Embeds patches in parallel, returning a flat exchange-format set.
pub fn embed_patches(embedder: &dyn Embedder, patches: &[TexturePatch]) -> EmbeddingSet {
    let rows: Vec<Vec<f32>> = patches.par_iter().map(|p| embedder.embed(p)).collect();
    EmbeddingSet::from_rows(embedder.id(), embedder.dim(), rows).expect("embedder output has its declared dimension")
}

/// Per-image texture weights: the share of patches assigned to each texture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureDistribution {
    counts: BTreeMap<usize, usize>,
    total: usize,
}

impl TextureDistribution {
    /// Builds from per-patch labels; every label must be below `k`.
    pub fn from_labels(labels: &[usize], k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("no patch labels"));
        }
        let mut counts = BTreeMap::new();
        for &l in labels {
            if l >= k {
                return Err(Error::invalid(format!("label {l} outside 0..{k}")));
            }
            *counts.entry(l).or_insert(0) += 1;
        }
        Ok(Self {
            counts,
            total: labels.len(),
        })
    }

    pub fn total_patches(&self) -> usize {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    pub fn weight(&self, texture: usize) -> f64 {
        self.counts.get(&texture).map_or(0.0, |&c| c as f64 / self.total as f64)
    }

    /// Non-zero weights, keyed by texture id.
    pub fn weights(&self) -> BTreeMap<usize, f64> {
        self.counts.keys().map(|&t| (t, self.weight(t))).collect()
    }

    /// The `n` heaviest textures, ties broken by lower id.
    pub fn top(&self, n: usize) -> Vec<(usize, f64)> {
        let mut w: Vec<(usize, f64)> = self.weights().into_iter().collect();
        w.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        w.truncate(n);
        w
    }

    pub fn fusion_weights(&self) -> Result<FusionWeights> {
        FusionWeights::from_counts(&self.counts)
    }
}

/// Index of the centroid nearest to `v` (squared Euclidean, lowest index wins ties).
pub fn nearest_centroid(v: &[f32], centroids: &[Vec<f32>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d: f64 = v
            .iter()
            .zip(c)
            .map(|(a, b)| {
                let d = f64::from(*a) - f64::from(*b);
                d * d
            })
            .sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// The prediction input: at most 2048 px on the longer side, bilinear-downsampled if needed.
pub fn prediction_image(image: &RasterImage) -> Result<RasterImage> {
    let (w, h) = (image.width(), image.height());
    let longest = w.max(h);
    if longest <= PREDICTION_MAX_DIMENSION {
        return Ok(image.clone());
    }
    let scale = PREDICTION_MAX_DIMENSION as f64 / longest as f64;
    let nw = ((w as f64 * scale).round() as usize).clamp(1, PREDICTION_MAX_DIMENSION);
    let nh = ((h as f64 * scale).round() as usize).clamp(1, PREDICTION_MAX_DIMENSION);
    image.resize_bilinear(nw, nh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(w: usize, h: usize, stride: usize) -> usize {
        extract_patches(&RasterImage::filled(w, h, 7).unwrap(), stride, "t")
            .unwrap()
            .len()
    }

    #[test]
    fn patch_counts() {
        assert_eq!(count(768, 512, 64), 96);
        assert_eq!(count(64, 64, 1), 1);
        assert_eq!(count(64, 64, 1000), 1);
        assert_eq!(count(4288, 2848, 256), 187);
    }

    #[test]
    fn patch_errors() {
        let small = RasterImage::filled(63, 100, 0).unwrap();
        assert!(matches!(extract_patches(&small, 64, "s"), Err(Error::TooSmall { .. })));
        let ok = RasterImage::filled(64, 64, 0).unwrap();
        assert!(extract_patches(&ok, 0, "s").is_err());
    }

    #[test]
    fn patch_content_and_origin() {
        let data: Vec<u8> = (0..128 * 96).map(|i| (i % 251) as u8).collect();
        let img = RasterImage::gray(128, 96, data.clone()).unwrap();
        let patches = extract_patches(&img, 32, "src").unwrap();
        assert_eq!(patches.len(), 3 * 2);
        let p = &patches[4];
        assert_eq!((p.x, p.y), (32, 32));
        assert_eq!(p.pixels()[0], data[32 * 128 + 32]);
        assert_eq!(p.pixels()[64 * 63 + 63], data[95 * 128 + 95]);
    }

    #[test]
    fn distribution_weights_sum_to_one() {
        let d = TextureDistribution::from_labels(&[0, 2, 2, 1, 2, 0, 0], 3).unwrap();
        let sum: f64 = d.weights().values().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(d.top(2), vec![(0, 3.0 / 7.0), (2, 3.0 / 7.0)]);
        assert!(TextureDistribution::from_labels(&[3], 3).is_err());
        assert!(TextureDistribution::from_labels(&[], 3).is_err());
    }

    #[test]
    fn nearest_centroid_ties_pick_lower_index() {
        let c = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 5.0]];
        assert_eq!(nearest_centroid(&[1.0, 0.0], &c), 0);
        assert_eq!(nearest_centroid(&[1.6, 0.0], &c), 1);
        assert_eq!(nearest_centroid(&[1.0, 4.0], &c), 2);
    }

    #[test]
    fn prediction_downsamples_long_side() {
        let img = RasterImage::filled(4096, 1000, 3).unwrap();
        let p = prediction_image(&img).unwrap();
        assert_eq!((p.width(), p.height()), (2048, 500));
        let small = RasterImage::filled(2048, 1360, 3).unwrap();
        assert_eq!(prediction_image(&small).unwrap().width(), 2048);
    }
}
