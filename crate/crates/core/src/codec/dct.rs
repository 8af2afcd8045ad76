//! Orthonormal 8x8 DCT-II and its inverse, separable matrix form.

use std::sync::OnceLock;

fn basis() -> &'static [[f32; 8]; 8] {
    static BASIS: OnceLock<[[f32; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0f32; 8]; 8];
        for (u, row) in m.iter_mut().enumerate() {
            let c = if u == 0 { (0.125f64).sqrt() } else { 0.5 };
            for (x, v) in row.iter_mut().enumerate() {
                *v = (c * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos()) as f32;
            }
        }
        m
    })
}

/// Forward DCT of a block of (level-shifted) samples in natural order.
pub fn forward(block: &[f32; 64]) -> [f32; 64] {
    let m = basis();
    let mut tmp = [0f32; 64];
    // rows: tmp[y][u] = sum_x m[u][x] * block[y][x]
    for y in 0..8 {
        for u in 0..8 {
            let mut acc = 0f32;
            for x in 0..8 {
                acc += m[u][x] * block[y * 8 + x];
            }
            tmp[y * 8 + u] = acc;
        }
    }
    let mut out = [0f32; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut acc = 0f32;
            for y in 0..8 {
                acc += m[v][y] * tmp[y * 8 + u];
            }
            out[v * 8 + u] = acc;
        }
    }
    out
}

/// Double-precision forward DCT, for analysis rather than coding.
pub fn forward_f64(block: &[f64; 64]) -> [f64; 64] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    let m = BASIS.get_or_init(|| {
        std::array::from_fn(|u| {
            let c = if u == 0 { (0.125f64).sqrt() } else { 0.5 };
            std::array::from_fn(|x| c * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos())
        })
    });
    let mut tmp = [0f64; 64];
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| m[u][x] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0f64; 64];
    for v in 0..8 {
        for u in 0..8 {
            out[v * 8 + u] = (0..8).map(|y| m[v][y] * tmp[y * 8 + u]).sum();
        }
    }
    out
}

/// Inverse DCT back to (level-shifted) samples.
pub fn inverse(coefs: &[f32; 64]) -> [f32; 64] {
    let m = basis();
    let mut tmp = [0f32; 64];
    for v in 0..8 {
        for x in 0..8 {
            let mut acc = 0f32;
            for u in 0..8 {
                acc += m[u][x] * coefs[v * 8 + u];
            }
            tmp[v * 8 + x] = acc;
        }
    }
    let mut out = [0f32; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut acc = 0f32;
            for v in 0..8 {
                acc += m[v][y] * tmp[v * 8 + x];
            }
            out[y * 8 + x] = acc;
        }
    }
    out
}
