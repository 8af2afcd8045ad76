use super::{TexturePatch, PATCH_SIZE};
use crate::codec::{dct, ZIGZAG};

pub const DCT_ENERGY_ID: &str = "dct-energy-v1";
pub const DCT_ENERGY_DIM: usize = 66;

/// Maps a patch to a fixed-length feature vector.
pub trait Embedder: Sync {
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, patch: &TexturePatch) -> Vec<f32>;
}

/// Classical texture descriptor: `ln(1 + mean |DCT|)` per zigzag position over the
/// patch's 64 blocks, then the patch mean and standard deviation scaled by 1/255.
#[derive(Debug, Clone, Copy, Default)]
pub struct DctEnergyEmbedder;

impl Embedder for DctEnergyEmbedder {
    fn id(&self) -> &str {
        DCT_ENERGY_ID
    }

    fn dim(&self) -> usize {
        DCT_ENERGY_DIM
    }

    fn embed(&self, patch: &TexturePatch) -> Vec<f32> {
        let px = patch.pixels();
        let mut energy = [0f64; 64];
        for by in 0..PATCH_SIZE / 8 {
            for bx in 0..PATCH_SIZE / 8 {
                let block: [f64; 64] =
                    std::array::from_fn(|i| f64::from(px[(by * 8 + i / 8) * PATCH_SIZE + bx * 8 + i % 8]));
                for (e, c) in energy.iter_mut().zip(dct::forward_f64(&block)) {
                    *e += c.abs();
                }
            }
        }
        let blocks = ((PATCH_SIZE / 8) * (PATCH_SIZE / 8)) as f64;
        let mut out: Vec<f32> = ZIGZAG
            .iter()
            .map(|&nat| (energy[nat] / blocks).ln_1p() as f32)
            .collect();
        let n = px.len() as f64;
        let mean = px.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let var = px.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
        out.push((mean / 255.0) as f32);
        out.push((var.sqrt() / 255.0) as f32);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch(f: impl Fn(usize, usize) -> u8) -> TexturePatch {
        let px = (0..64 * 64).map(|i| f(i % 64, i / 64)).collect();
        TexturePatch::new(px, "t", 0, 0).unwrap()
    }

    #[test]
    fn uniform_patch_has_no_ac_energy() {
        let e = DctEnergyEmbedder.embed(&patch(|_, _| 100));
        assert_eq!(e.len(), DCT_ENERGY_DIM);
        assert!(e[0] > 0.0);
        assert!(e[1..64].iter().all(|&v| v.abs() < 1e-9));
        assert!((e[64] - 100.0 / 255.0).abs() < 1e-7);
        assert_eq!(e[65], 0.0);
    }

    #[test]
    fn deterministic_for_copies() {
        let p = patch(|x, y| ((x * 31 + y * 17) % 256) as u8);
        assert_eq!(DctEnergyEmbedder.embed(&p), DctEnergyEmbedder.embed(&p.clone()));
    }
}
