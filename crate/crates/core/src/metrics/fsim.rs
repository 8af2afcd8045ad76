use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::raster::RasterImage;

pub const FSIM_MIN_DIMENSION: usize = 32;

const NSCALE: usize = 4;
const NORIENT: usize = 4;
const MIN_WAVELENGTH: f64 = 6.0;
const MULT: f64 = 2.0;
const SIGMA_ONF: f64 = 0.55;
const DTHETA_ON_SIGMA: f64 = 1.2;
const NOISE_K: f64 = 2.0;
const EPSILON: f64 = 1e-4;
const T1: f64 = 0.85;
const T2: f64 = 160.0;

type C64 = Complex<f64>;

/// Per-size log-Gabor filters, FFT plans and noise-model constants.
struct FilterBank {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// `filters[o * NSCALE + s]`, in unshifted frequency layout.
    filters: Vec<Vec<f64>>,
    /// Per orientation: (energy of the finest filter, sum An^2 estimate, sum AiAj estimate).
    noise: Vec<(f64, f64, f64)>,
}

fn frequencies(n: usize) -> Vec<f64> {
    let denom = if n % 2 == 1 { (n - 1).max(1) as f64 } else { n as f64 };
    let half = n.div_ceil(2);
    (0..n)
        .map(|i| if i < half { i as f64 } else { i as f64 - n as f64 } / denom)
        .collect()
}

impl FilterBank {
    fn build(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        let mut bank = FilterBank {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
            filters: Vec::with_capacity(NSCALE * NORIENT),
            noise: Vec::with_capacity(NORIENT),
        };
        let fx = frequencies(cols);
        let fy = frequencies(rows);
        let n = rows * cols;
        let mut radius = vec![0.0; n];
        let mut sin_t = vec![0.0; n];
        let mut cos_t = vec![0.0; n];
        let mut lowpass = vec![0.0; n];
        for r in 0..rows {
            for c in 0..cols {
                let (x, y) = (fx[c], fy[r]);
                let i = r * cols + c;
                let rad = (x * x + y * y).sqrt();
                lowpass[i] = 1.0 / (1.0 + (rad / 0.45).powi(30));
                radius[i] = rad;
                let theta = (-y).atan2(x);
                sin_t[i] = theta.sin();
                cos_t[i] = theta.cos();
            }
        }
        radius[0] = 1.0;
        let log_sigma2 = 2.0 * SIGMA_ONF.ln().powi(2);
        let log_gabor: Vec<Vec<f64>> = (0..NSCALE)
            .map(|s| {
                let fo = 1.0 / (MIN_WAVELENGTH * MULT.powi(s as i32));
                let mut lg: Vec<f64> = radius
                    .iter()
                    .zip(&lowpass)
                    .map(|(r, lp)| (-(r / fo).ln().powi(2) / log_sigma2).exp() * lp)
                    .collect();
                lg[0] = 0.0;
                lg
            })
            .collect();
        let theta_sigma = PI / NORIENT as f64 / DTHETA_ON_SIGMA;
        let scale = (n as f64).sqrt();
        for o in 0..NORIENT {
            let angle = o as f64 * PI / NORIENT as f64;
            let (sa, ca) = angle.sin_cos();
            let spread: Vec<f64> = (0..n)
                .map(|i| {
                    let ds = sin_t[i] * ca - cos_t[i] * sa;
                    let dc = cos_t[i] * ca + sin_t[i] * sa;
                    let dtheta = ds.atan2(dc).abs();
                    (-(dtheta * dtheta) / (2.0 * theta_sigma * theta_sigma)).exp()
                })
                .collect();
            let mut spatial = Vec::with_capacity(NSCALE);
            for lg in &log_gabor {
                let filt: Vec<f64> = lg.iter().zip(&spread).map(|(a, b)| a * b).collect();
                let mut buf: Vec<C64> = filt.iter().map(|&v| C64::new(v, 0.0)).collect();
                bank.ifft2(&mut buf);
                spatial.push(buf.iter().map(|v| v.re * scale).collect::<Vec<f64>>());
                bank.filters.push(filt);
            }
            let em_n: f64 = bank.filters[o * NSCALE].iter().map(|v| v * v).sum();
            let mut an2 = vec![0.0; n];
            for f in &spatial {
                an2.iter_mut().zip(f).for_each(|(acc, v)| *acc += v * v);
            }
            let mut aiaj = vec![0.0; n];
            for si in 0..NSCALE - 1 {
                for sj in si + 1..NSCALE {
                    aiaj.iter_mut()
                        .zip(spatial[si].iter().zip(&spatial[sj]))
                        .for_each(|(acc, (a, b))| *acc += a * b);
                }
            }
            bank.noise.push((em_n, an2.iter().sum(), aiaj.iter().sum()));
        }
        bank
    }

    fn cached(rows: usize, cols: usize) -> Arc<FilterBank> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<FilterBank>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(bank) = cache.lock().unwrap().get(&(rows, cols)) {
            return Arc::clone(bank);
        }
        let bank = Arc::new(FilterBank::build(rows, cols));
        let mut guard = cache.lock().unwrap();
        if guard.len() >= 16 {
            guard.clear();
        }
        Arc::clone(guard.entry((rows, cols)).or_insert(bank))
    }

    fn transform(&self, buf: &mut [C64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        let (rows, cols) = (self.rows, self.cols);
        row.process(buf);
        let mut t = vec![C64::default(); rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = buf[r * cols + c];
            }
        }
        col.process(&mut t);
        for c in 0..cols {
            for r in 0..rows {
                buf[r * cols + c] = t[c * rows + r];
            }
        }
    }

    fn fft2(&self, buf: &mut [C64]) {
        self.transform(buf, &self.row_fwd, &self.col_fwd);
    }

    fn ifft2(&self, buf: &mut [C64]) {
        self.transform(buf, &self.row_inv, &self.col_inv);
        let norm = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|v| *v *= norm);
    }

    fn phase_congruency(&self, im: &[f64]) -> Vec<f64> {
        let n = im.len();
        let mut spectrum: Vec<C64> = im.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.fft2(&mut spectrum);
        let mut energy_all = vec![0.0; n];
        let mut an_all = vec![0.0; n];
        for o in 0..NORIENT {
            let mut sum_e = vec![0.0; n];
            let mut sum_o = vec![0.0; n];
            let mut responses = Vec::with_capacity(NSCALE);
            for s in 0..NSCALE {
                let filt = &self.filters[o * NSCALE + s];
                let mut resp: Vec<C64> = spectrum.iter().zip(filt).map(|(a, f)| a * f).collect();
                self.ifft2(&mut resp);
                for i in 0..n {
                    an_all[i] += resp[i].norm();
                    sum_e[i] += resp[i].re;
                    sum_o[i] += resp[i].im;
                }
                responses.push(resp);
            }
            let mut energy = vec![0.0; n];
            for i in 0..n {
                let x_energy = (sum_e[i] * sum_e[i] + sum_o[i] * sum_o[i]).sqrt() + EPSILON;
                let mean_e = sum_e[i] / x_energy;
                let mean_o = sum_o[i] / x_energy;
                for resp in &responses {
                    let (e, od) = (resp[i].re, resp[i].im);
                    energy[i] += e * mean_e + od * mean_o - (e * mean_o - od * mean_e).abs();
                }
            }
            let mut finest: Vec<f64> = responses[0].iter().map(|v| v.norm_sqr()).collect();
            let mean_e2n = -median(&mut finest) / 0.5f64.ln();
            let (em_n, an2, aiaj) = self.noise[o];
            let noise_power = mean_e2n / em_n;
            let noise_energy2 = 2.0 * noise_power * an2 + 4.0 * noise_power * aiaj;
            let tau = (noise_energy2 / 2.0).sqrt();
            let noise_energy = tau * (PI / 2.0).sqrt();
            let noise_sigma = ((2.0 - PI / 2.0) * tau * tau).sqrt();
            let threshold = (noise_energy + NOISE_K * noise_sigma) / 1.7;
            for i in 0..n {
                energy_all[i] += (energy[i] - threshold).max(0.0);
            }
        }
        energy_all
            .iter()
            .zip(&an_all)
            .map(|(e, a)| if *a > 0.0 { e / a } else { 0.0 })
            .collect()
    }
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let m = *m;
    if n % 2 == 1 {
        m
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (below + m) / 2.0
    }
}

/// Box-average then subsample by `factor`, matching a zero-padded centred 'same' convolution.
fn downsample(src: &[f64], w: usize, h: usize, factor: usize) -> (Vec<f64>, usize, usize) {
    if factor == 1 {
        return (src.to_vec(), w, h);
    }
    let lo = factor as isize / 2 - (factor as isize - 1);
    let hi = factor as isize / 2;
    let (ow, oh) = (w.div_ceil(factor), h.div_ceil(factor));
    let norm = 1.0 / (factor * factor) as f64;
    let mut out = Vec::with_capacity(ow * oh);
    for oy in 0..oh {
        let y = (oy * factor) as isize;
        for ox in 0..ow {
            let x = (ox * factor) as isize;
            let mut acc = 0.0;
            for yy in (y + lo).max(0)..=(y + hi).min(h as isize - 1) {
                for xx in (x + lo).max(0)..=(x + hi).min(w as isize - 1) {
                    acc += src[yy as usize * w + xx as usize];
                }
            }
            out.push(acc * norm);
        }
    }
    (out, ow, oh)
}

/// Scharr gradient magnitude with zero padding at the border.
fn gradient_magnitude(im: &[f64], w: usize, h: usize) -> Vec<f64> {
    const DX: [[f64; 3]; 3] = [[3.0, 0.0, -3.0], [10.0, 0.0, -10.0], [3.0, 0.0, -3.0]];
    const DY: [[f64; 3]; 3] = [[3.0, 10.0, 3.0], [0.0, 0.0, 0.0], [-3.0, -10.0, -3.0]];
    let at = |y: isize, x: isize| -> f64 {
        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
            0.0
        } else {
            im[y as usize * w + x as usize]
        }
    };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let (mut gx, mut gy) = (0.0, 0.0);
            for a in 0..3 {
                for b in 0..3 {
                    let v = at(y + 1 - a as isize, x + 1 - b as isize);
                    gx += v * DX[a][b];
                    gy += v * DY[a][b];
                }
            }
            let (gx, gy) = (gx / 16.0, gy / 16.0);
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}

fn downsample_factor(w: usize, h: usize) -> usize {
    ((w.min(h) as f64 / 256.0 + 0.5).floor() as usize).max(1)
}

/// Reference-side FSIM state: the phase congruency and gradient maps of one image,
/// reused when scoring many distorted versions of it.
pub struct FsimReference {
    width: usize,
    height: usize,
    factor: usize,
    bank: Arc<FilterBank>,
    pc: Vec<f64>,
    grad: Vec<f64>,
}

impl FsimReference {
    pub fn new(reference: &RasterImage) -> Result<Self> {
        Self::from_luma(&reference.luma(), reference.width(), reference.height())
    }

    pub fn from_luma(luma: &[f64], width: usize, height: usize) -> Result<Self> {
        if width < FSIM_MIN_DIMENSION || height < FSIM_MIN_DIMENSION {
            return Err(Error::TooSmall {
                width,
                height,
                min: FSIM_MIN_DIMENSION,
            });
        }
        if luma.len() != width * height {
            return Err(Error::invalid("luma plane size does not match dimensions"));
        }
        let factor = downsample_factor(width, height);
        let (y, w, h) = downsample(luma, width, height, factor);
        let bank = FilterBank::cached(h, w);
        let pc = bank.phase_congruency(&y);
        let grad = gradient_magnitude(&y, w, h);
        Ok(Self {
            width,
            height,
            factor,
            bank,
            pc,
            grad,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn score(&self, distorted: &RasterImage) -> Result<f64> {
        if distorted.width() != self.width || distorted.height() != self.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                distorted.width(),
                distorted.height(),
            ));
        }
        self.score_luma(&distorted.luma())
    }

    pub fn score_luma(&self, luma: &[f64]) -> Result<f64> {
        if luma.len() != self.width * self.height {
            return Err(Error::invalid("luma plane size does not match dimensions"));
        }
        let (y, w, h) = downsample(luma, self.width, self.height, self.factor);
        let pc2 = self.bank.phase_congruency(&y);
        let grad2 = gradient_magnitude(&y, w, h);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..pc2.len() {
            let (p1, p2) = (self.pc[i], pc2[i]);
            let (g1, g2) = (self.grad[i], grad2[i]);
            let pc_sim = (2.0 * p1 * p2 + T1) / (p1 * p1 + p2 * p2 + T1);
            let g_sim = (2.0 * g1 * g2 + T2) / (g1 * g1 + g2 * g2 + T2);
            let pcm = p1.max(p2);
            num += g_sim * pc_sim * pcm;
            den += pcm;
        }
        Ok(if den > 0.0 { num / den } else { 1.0 })
    }
}

/// FSIM of two luminance planes.
pub fn fsim_luma(a: &[f64], b: &[f64], width: usize, height: usize) -> Result<f64> {
    FsimReference::from_luma(a, width, height)?.score_luma(b)
}
