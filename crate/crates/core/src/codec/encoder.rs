use super::dct;
use super::huffman::{EncodeTable, HuffmanSpec};
use super::{EncodeOptions, JpegBlob, Subsampling, ZIGZAG};
use crate::error::{Error, Result};
use crate::qtable::QuantTable;
use crate::raster::{PixelFormat, RasterImage};

/// Smallest accepted encoder input edge.
pub const MIN_DIMENSION: usize = 8;

struct ComponentPlane {
    id: u8,
    h: usize,
    v: usize,
    /// 0 for luminance, 1 for chrominance.
    table: usize,
    blocks_w: usize,
    coefs: Vec<[f32; 64]>,
}

/// An image after colour conversion, subsampling and forward DCT.
///
/// Encoding the same raster with many different tables only needs to redo
/// quantization and entropy coding, so callers that search over tables can
/// prepare once and call [`PreparedImage::encode`] repeatedly. The output is
/// byte-identical to [`encode`].
pub struct PreparedImage {
    width: usize,
    height: usize,
    mcus_x: usize,
    mcus_y: usize,
    components: Vec<ComponentPlane>,
}

fn edge_replicated_plane(values: &[f32], w: usize, h: usize, pw: usize, ph: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        let row = &values[y.min(h - 1) * w..][..w];
        out.extend((0..pw).map(|x| row[x.min(w - 1)]));
    }
    out
}

fn downsample_2x2(plane: &[f32], pw: usize, ph: usize) -> Vec<f32> {
    let (w2, h2) = (pw / 2, ph / 2);
    let mut out = Vec::with_capacity(w2 * h2);
    for y in 0..h2 {
        let r0 = &plane[2 * y * pw..][..pw];
        let r1 = &plane[(2 * y + 1) * pw..][..pw];
        for x in 0..w2 {
            out.push((r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]) * 0.25);
        }
    }
    out
}

fn blocks_of(plane: &[f32], pw: usize, ph: usize) -> Vec<[f32; 64]> {
    let (bw, bh) = (pw / 8, ph / 8);
    let mut out = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let mut block = [0f32; 64];
            for y in 0..8 {
                let row = &plane[(by * 8 + y) * pw + bx * 8..][..8];
                for x in 0..8 {
                    block[y * 8 + x] = row[x] - 128.0;
                }
            }
            out.push(dct::forward(&block));
        }
    }
    out
}

impl PreparedImage {
    pub fn new(image: &RasterImage, options: &EncodeOptions) -> Result<Self> {
        let (w, h) = (image.width(), image.height());
        if w < MIN_DIMENSION || h < MIN_DIMENSION {
            return Err(Error::TooSmall {
                width: w,
                height: h,
                min: MIN_DIMENSION,
            });
        }
        if w > u16::MAX as usize || h > u16::MAX as usize {
            return Err(Error::invalid(format!("{w}x{h} exceeds the 65535 pixel JPEG limit")));
        }
        let (hmax, vmax) = match (image.format(), options.subsampling) {
            (PixelFormat::Gray, _) | (PixelFormat::Rgb, Subsampling::S444) => (1, 1),
            (PixelFormat::Rgb, Subsampling::S420) => (2, 2),
        };
        let mcus_x = w.div_ceil(8 * hmax);
        let mcus_y = h.div_ceil(8 * vmax);
        let (pw, ph) = (mcus_x * 8 * hmax, mcus_y * 8 * vmax);

        let components = match image.format() {
            PixelFormat::Gray => {
                let y: Vec<f32> = image.data().iter().map(|&v| f32::from(v)).collect();
                let plane = edge_replicated_plane(&y, w, h, pw, ph);
                vec![ComponentPlane {
                    id: 1,
                    h: 1,
                    v: 1,
                    table: 0,
                    blocks_w: pw / 8,
                    coefs: blocks_of(&plane, pw, ph),
                }]
            }
            PixelFormat::Rgb => {
                let n = w * h;
                let (mut yp, mut cb, mut cr) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
                for px in image.data().chunks_exact(3) {
                    let (r, g, b) = (f32::from(px[0]), f32::from(px[1]), f32::from(px[2]));
                    yp.push(0.299 * r + 0.587 * g + 0.114 * b);
                    cb.push(-0.168_736 * r - 0.331_264 * g + 0.5 * b + 128.0);
                    cr.push(0.5 * r - 0.418_688 * g - 0.081_312 * b + 128.0);
                }
                let yp = edge_replicated_plane(&yp, w, h, pw, ph);
                let mut cb = edge_replicated_plane(&cb, w, h, pw, ph);
                let mut cr = edge_replicated_plane(&cr, w, h, pw, ph);
                let (cw, ch) = if hmax == 2 {
                    cb = downsample_2x2(&cb, pw, ph);
                    cr = downsample_2x2(&cr, pw, ph);
                    (pw / 2, ph / 2)
                } else {
                    (pw, ph)
                };
                vec![
                    ComponentPlane {
                        id: 1,
                        h: hmax,
                        v: vmax,
                        table: 0,
                        blocks_w: pw / 8,
                        coefs: blocks_of(&yp, pw, ph),
                    },
                    ComponentPlane {
                        id: 2,
                        h: 1,
                        v: 1,
                        table: 1,
                        blocks_w: cw / 8,
                        coefs: blocks_of(&cb, cw, ch),
                    },
                    ComponentPlane {
                        id: 3,
                        h: 1,
                        v: 1,
                        table: 1,
                        blocks_w: cw / 8,
                        coefs: blocks_of(&cr, cw, ch),
                    },
                ]
            }
        };
        Ok(Self {
            width: w,
            height: h,
            mcus_x,
            mcus_y,
            components,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Quantizes with the given tables and writes a baseline JFIF stream.
    pub fn encode(&self, luma: &QuantTable, chroma: &QuantTable) -> Result<JpegBlob> {
        let tables = [luma, chroma];
        let mut out = Vec::with_capacity(self.width * self.height / 2 + 1024);
        out.extend_from_slice(&[0xFF, 0xD8]);
        write_app0(&mut out);
        for (id, table) in tables.iter().enumerate() {
            write_dqt(&mut out, id as u8, table);
        }
        self.write_sof0(&mut out);

        let gray = self.components.len() == 1;
        let mut specs = vec![(0u8, 0u8, HuffmanSpec::dc_luma()), (1, 0, HuffmanSpec::ac_luma())];
        if !gray {
            specs.push((0, 1, HuffmanSpec::dc_chroma()));
            specs.push((1, 1, HuffmanSpec::ac_chroma()));
        }
        for (class, id, spec) in &specs {
            write_dht(&mut out, *class, *id, spec);
        }
        self.write_sos(&mut out);

        let dc = [EncodeTable::new(&HuffmanSpec::dc_luma()), EncodeTable::new(&HuffmanSpec::dc_chroma())];
        let ac = [EncodeTable::new(&HuffmanSpec::ac_luma()), EncodeTable::new(&HuffmanSpec::ac_chroma())];
        let reciprocals: Vec<[f32; 64]> = tables
            .iter()
            .map(|t| std::array::from_fn(|i| 1.0 / f32::from(t.get(i))))
            .collect();

        let mut writer = BitWriter::new(out);
        let mut pred = vec![0i32; self.components.len()];
        let mut quantized = [0i32; 64];
        for my in 0..self.mcus_y {
            for mx in 0..self.mcus_x {
                for (ci, comp) in self.components.iter().enumerate() {
                    let recip = &reciprocals[comp.table];
                    for v in 0..comp.v {
                        for h in 0..comp.h {
                            let bx = mx * comp.h + h;
                            let by = my * comp.v + v;
                            let coefs = &comp.coefs[by * comp.blocks_w + bx];
                            for (k, &nat) in ZIGZAG.iter().enumerate() {
                                quantized[k] = (coefs[nat] * recip[nat]).round() as i32;
                            }
                            quantized[0] = quantized[0].clamp(-1024, 1023);
                            for q in &mut quantized[1..] {
                                *q = (*q).clamp(-1023, 1023);
                            }
                            let diff = quantized[0] - pred[ci];
                            pred[ci] = quantized[0];
                            encode_block(&mut writer, &quantized, diff, &dc[comp.table], &ac[comp.table]);
                        }
                    }
                }
            }
        }
        let mut out = writer.finish();
        out.extend_from_slice(&[0xFF, 0xD9]);
        Ok(JpegBlob { bytes: out })
    }

    fn write_sof0(&self, out: &mut Vec<u8>) {
        let n = self.components.len();
        out.extend_from_slice(&[0xFF, 0xC0]);
        out.extend_from_slice(&((8 + 3 * n) as u16).to_be_bytes());
        out.push(8);
        out.extend_from_slice(&(self.height as u16).to_be_bytes());
        out.extend_from_slice(&(self.width as u16).to_be_bytes());
        out.push(n as u8);
        for c in &self.components {
            out.extend_from_slice(&[c.id, ((c.h as u8) << 4) | c.v as u8, c.table as u8]);
        }
    }

    fn write_sos(&self, out: &mut Vec<u8>) {
        let n = self.components.len();
        out.extend_from_slice(&[0xFF, 0xDA]);
        out.extend_from_slice(&((6 + 2 * n) as u16).to_be_bytes());
        out.push(n as u8);
        for c in &self.components {
            out.extend_from_slice(&[c.id, ((c.table as u8) << 4) | c.table as u8]);
        }
        out.extend_from_slice(&[0, 63, 0]);
    }
}

/// Encodes `image` as baseline sequential JPEG with the given tables.
pub fn encode(image: &RasterImage, luma: &QuantTable, chroma: &QuantTable, options: &EncodeOptions) -> Result<JpegBlob> {
    PreparedImage::new(image, options)?.encode(luma, chroma)
}

fn write_app0(out: &mut Vec<u8>) {
    out.extend_from_slice(&[0xFF, 0xE0, 0x00, 0x10]);
    out.extend_from_slice(b"JFIF\0");
    out.extend_from_slice(&[1, 1, 0, 0, 1, 0, 1, 0, 0]);
}

fn write_dqt(out: &mut Vec<u8>, id: u8, table: &QuantTable) {
    out.extend_from_slice(&[0xFF, 0xDB, 0x00, 67, id]);
    out.extend(ZIGZAG.iter().map(|&n| table.get(n)));
}

fn write_dht(out: &mut Vec<u8>, class: u8, id: u8, spec: &HuffmanSpec) {
    out.extend_from_slice(&[0xFF, 0xC4]);
    out.extend_from_slice(&((3 + 16 + spec.symbols.len()) as u16).to_be_bytes());
    out.push((class << 4) | id);
    out.extend_from_slice(&spec.counts);
    out.extend_from_slice(&spec.symbols);
}

#[inline]
fn magnitude(v: i32) -> (u8, u16) {
    let size = 32 - v.unsigned_abs().leading_zeros();
    let bits = if v < 0 { v - 1 } else { v };
    (size as u8, (bits as u32 & ((1u32 << size) - 1)) as u16)
}

fn encode_block(w: &mut BitWriter, zz: &[i32; 64], dc_diff: i32, dc: &EncodeTable, ac: &EncodeTable) {
    let (size, bits) = magnitude(dc_diff);
    let (code, len) = dc.code(size);
    w.put(code as u32, len);
    if size > 0 {
        w.put(bits as u32, size);
    }
    let mut run = 0u8;
    for &v in &zz[1..] {
        if v == 0 {
            run += 1;
            continue;
        }
        while run >= 16 {
            let (code, len) = ac.code(0xF0);
            w.put(code as u32, len);
            run -= 16;
        }
        let (size, bits) = magnitude(v);
        let (code, len) = ac.code((run << 4) | size);
        w.put(code as u32, len);
        w.put(bits as u32, size);
        run = 0;
    }
    if run > 0 {
        let (code, len) = ac.code(0x00);
        w.put(code as u32, len);
    }
}

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    fn new(out: Vec<u8>) -> Self {
        Self { out, acc: 0, nbits: 0 }
    }

    #[inline]
    fn put(&mut self, bits: u32, len: u8) {
        self.acc = (self.acc << len) | u64::from(bits);
        self.nbits += u32::from(len);
        while self.nbits >= 8 {
            self.nbits -= 8;
            let byte = (self.acc >> self.nbits) as u8;
            self.out.push(byte);
            if byte == 0xFF {
                self.out.push(0x00);
            }
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put((1 << pad) - 1, pad as u8);
        }
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnitude_categories() {
        assert_eq!(magnitude(0), (0, 0));
        assert_eq!(magnitude(1), (1, 1));
        assert_eq!(magnitude(-1), (1, 0));
        assert_eq!(magnitude(-3), (2, 0));
        assert_eq!(magnitude(5), (3, 5));
        assert_eq!(magnitude(-1023), (10, 0));
        assert_eq!(magnitude(2047), (11, 2047));
    }

    #[test]
    fn bit_writer_stuffs_ff() {
        let mut w = BitWriter::new(Vec::new());
        w.put(0xFF, 8);
        w.put(0b1, 1);
        assert_eq!(w.finish(), vec![0xFF, 0x00, 0xFF, 0x00]);
    }
}
