use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{TexturePatch, PATCH_SIZE};
use crate::error::{Error, Result};
use crate::raster::RasterImage;

pub const DEFAULT_MAX_PATCHES: usize = 225;

/// Tiles up to `max_patches` randomly chosen patches row-major onto the smallest
/// square grid that holds them, repeating the selection cyclically to fill it.
pub fn stitch_mosaic(patches: &[TexturePatch], max_patches: usize, seed: u64) -> Result<RasterImage> {
    if patches.is_empty() {
        return Err(Error::invalid("cannot stitch a mosaic from zero patches"));
    }
    if max_patches == 0 {
        return Err(Error::invalid("max_patches must be at least 1"));
    }
    let selected: Vec<&TexturePatch> = if patches.len() <= max_patches {
        patches.iter().collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = index::sample(&mut rng, patches.len(), max_patches).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| &patches[i]).collect()
    };
    let m = selected.len();
    let g = (1..).find(|g| g * g >= m).expect("grid size exists");
    let side = g * PATCH_SIZE;
    let mut data = vec![0u8; side * side];
    for cell in 0..g * g {
        let patch = selected[cell % m].pixels();
        let (cx, cy) = ((cell % g) * PATCH_SIZE, (cell / g) * PATCH_SIZE);
        for row in 0..PATCH_SIZE {
            let dst = (cy + row) * side + cx;
            data[dst..dst + PATCH_SIZE].copy_from_slice(&patch[row * PATCH_SIZE..(row + 1) * PATCH_SIZE]);
        }
    }
    RasterImage::gray(side, side, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patches(n: usize) -> Vec<TexturePatch> {
        (0..n)
            .map(|i| TexturePatch::new(vec![i as u8; PATCH_SIZE * PATCH_SIZE], "t", 0, 0).unwrap())
            .collect()
    }

    #[test]
    fn grid_sizes() {
        let m = stitch_mosaic(&patches(225), 225, 1).unwrap();
        assert_eq!((m.width(), m.height()), (960, 960));
        let m = stitch_mosaic(&patches(300), 225, 1).unwrap();
        assert_eq!(m.width(), 960);
        let m = stitch_mosaic(&patches(1), 225, 1).unwrap();
        assert_eq!(m.width(), 64);
        assert!(m.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn ten_patches_fill_cyclically() {
        let m = stitch_mosaic(&patches(10), 225, 1).unwrap();
        assert_eq!(m.width(), 256);
        let cell = |i: usize| m.data()[(i / 4) * 64 * 256 + (i % 4) * 64];
        let cells: Vec<u8> = (0..16).map(cell).collect();
        assert_eq!(cells, vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn selection_is_seeded() {
        let p = patches(250);
        assert_eq!(stitch_mosaic(&p, 9, 4).unwrap(), stitch_mosaic(&p, 9, 4).unwrap());
        assert_ne!(stitch_mosaic(&p, 9, 4).unwrap(), stitch_mosaic(&p, 9, 5).unwrap());
        assert!(stitch_mosaic(&[], 9, 4).is_err());
    }
}
