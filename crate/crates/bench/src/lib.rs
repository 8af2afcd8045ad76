//! Deterministic inputs shared by the benchmarks.

use jqf_core::RasterImage;

/// A textured RGB test image: smooth gradients overlaid with a hashed high-frequency pattern.
pub fn synthetic_rgb(width: usize, height: usize, seed: u32) -> RasterImage {
    let mut data = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let h = (x as u32)
                .wrapping_mul(0x9E37_79B1)
                .wrapping_add((y as u32).wrapping_mul(0x85EB_CA77))
                .wrapping_add(seed.wrapping_mul(0xC2B2_AE3D));
            let noise = (h >> 27) as usize;
            data.push(((x * 255 / width.max(1)) / 2 + noise * 3) as u8);
            data.push(((y * 255 / height.max(1)) / 2 + noise * 2) as u8);
            data.push((((x + y) % 64) * 2 + noise) as u8);
        }
    }
    RasterImage::rgb(width, height, data).expect("dimensions are consistent")
}
