//! Decoded 8-bit raster images and PNG/PNM file I/O.

use std::path::Path;

use crate::error::{Error, Result};

/// Sample layout of a [`RasterImage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelFormat {
    /// One luminance sample per pixel.
    Gray,
    /// Interleaved R, G, B samples.
    Rgb,
}

impl PixelFormat {
    pub fn channels(self) -> usize {
        match self {
            PixelFormat::Gray => 1,
            PixelFormat::Rgb => 3,
        }
    }
}

/// An 8-bit image held in memory, either grayscale or interleaved RGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    format: PixelFormat,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, format: PixelFormat, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be non-zero"));
        }
        let expected = width * height * format.channels();
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "{width}x{height} {format:?} needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            format,
            data,
        })
    }

    pub fn gray(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, PixelFormat::Gray, data)
    }

    pub fn rgb(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, PixelFormat::Rgb, data)
    }

    /// A single-valued grayscale image.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::gray(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn format(&self) -> PixelFormat {
        self.format
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn same_dimensions(&self, other: &RasterImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// BT.601 luminance as unrounded reals, row-major.
    pub fn luma(&self) -> Vec<f64> {
        match self.format {
            PixelFormat::Gray => self.data.iter().map(|&v| f64::from(v)).collect(),
            PixelFormat::Rgb => self
                .data
                .chunks_exact(3)
                .map(|p| 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
                .collect(),
        }
    }

    /// Luminance rounded back to 8 bits.
    pub fn to_gray(&self) -> RasterImage {
        match self.format {
            PixelFormat::Gray => self.clone(),
            PixelFormat::Rgb => {
                let data = self
                    .luma()
                    .into_iter()
                    .map(|v| v.round().clamp(0.0, 255.0) as u8)
                    .collect();
                RasterImage {
                    width: self.width,
                    height: self.height,
                    format: PixelFormat::Gray,
                    data,
                }
            }
        }
    }

    /// Copies out the `w`x`h` rectangle whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<RasterImage> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::invalid(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{}",
                self.width, self.height
            )));
        }
        let c = self.format.channels();
        let mut data = Vec::with_capacity(w * h * c);
        for row in y..y + h {
            let start = (row * self.width + x) * c;
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        RasterImage::new(w, h, self.format, data)
    }

    /// Bilinear resample to `new_w`x`new_h` using pixel-centre alignment.
    pub fn resize_bilinear(&self, new_w: usize, new_h: usize) -> Result<RasterImage> {
        if new_w == 0 || new_h == 0 {
            return Err(Error::invalid("resize target must be non-zero"));
        }
        let c = self.format.channels();
        let sx = self.width as f64 / new_w as f64;
        let sy = self.height as f64 / new_h as f64;
        let axis = |dst: usize, scale: f64, len: usize| {
            let pos = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            (lo, hi, pos - lo as f64)
        };
        let cols: Vec<_> = (0..new_w).map(|x| axis(x, sx, self.width)).collect();
        let mut data = Vec::with_capacity(new_w * new_h * c);
        for y in 0..new_h {
            let (y0, y1, fy) = axis(y, sy, self.height);
            for &(x0, x1, fx) in &cols {
                for ch in 0..c {
                    let at = |xx: usize, yy: usize| f64::from(self.data[(yy * self.width + xx) * c + ch]);
                    let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
                    let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
                    let v = top * (1.0 - fy) + bottom * fy;
                    data.push(v.round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        RasterImage::new(new_w, new_h, self.format, data)
    }

    /// Loads a PNG, PPM or PGM file. Alpha is dropped; 16-bit samples are reduced to 8 bits.
    pub fn load(path: impl AsRef<Path>) -> Result<RasterImage> {
        let path = path.as_ref();
        let dynamic = image::open(path).map_err(|source| Error::ImageIo {
            path: path.to_path_buf(),
            source,
        })?;
        let color = dynamic.color();
        if color.has_color() {
            let rgb = dynamic.into_rgb8();
            let (w, h) = rgb.dimensions();
            RasterImage::rgb(w as usize, h as usize, rgb.into_raw())
        } else {
            let gray = dynamic.into_luma8();
            let (w, h) = gray.dimensions();
            RasterImage::gray(w as usize, h as usize, gray.into_raw())
        }
    }

    /// Writes a PNG (or PPM/PGM, chosen by extension).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let color = match self.format {
            PixelFormat::Gray => image::ExtendedColorType::L8,
            PixelFormat::Rgb => image::ExtendedColorType::Rgb8,
        };
        image::save_buffer(path, &self.data, self.width as u32, self.height as u32, color).map_err(
            |source| Error::ImageIo {
                path: path.to_path_buf(),
                source,
            },
        )
    }
}
