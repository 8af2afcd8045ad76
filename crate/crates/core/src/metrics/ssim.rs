use crate::error::{Error, Result};

pub const SSIM_MIN_DIMENSION: usize = 11;
const RADIUS: usize = 5;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const L: f64 = 255.0;

fn gaussian_window() -> [f64; 2 * RADIUS + 1] {
    let mut w: [f64; 2 * RADIUS + 1] =
        std::array::from_fn(|i| (-((i as f64 - RADIUS as f64).powi(2)) / (2.0 * SIGMA * SIGMA)).exp());
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Separable filtering restricted to positions where the window fits entirely.
fn filter_valid(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let line = &src[y * w..][..w];
        for x in 0..ow {
            rows[y * ow + x] = kernel.iter().zip(&line[x..x + k]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM of two luminance planes.
pub fn ssim_luma(a: &[f64], b: &[f64], w: usize, h: usize) -> Result<f64> {
    if w < SSIM_MIN_DIMENSION || h < SSIM_MIN_DIMENSION {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min: SSIM_MIN_DIMENSION,
        });
    }
    let win = gaussian_window();
    let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> { a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = filter_valid(a, w, h, &win);
    let mu_b = filter_valid(b, w, h, &win);
    let aa = filter_valid(&prod(|x, _| x * x), w, h, &win);
    let bb = filter_valid(&prod(|_, y| y * y), w, h, &win);
    let ab = filter_valid(&prod(|x, y| x * y), w, h, &win);
    let c1 = (K1 * L).powi(2);
    let c2 = (K2 * L).powi(2);
    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(sum / mu_a.len() as f64)
}
