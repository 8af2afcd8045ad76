use super::dct;
use super::huffman::{DecodeTable, HuffmanSpec};
use super::ZIGZAG;
use crate::error::{Error, Result};
use crate::raster::RasterImage;

const MAX_PIXELS: usize = 1 << 28;

struct Component {
    id: u8,
    h: usize,
    v: usize,
    tq: usize,
    blocks_w: usize,
    blocks_h: usize,
    /// Real (unpadded) extent in blocks, for non-interleaved scans.
    used_w: usize,
    used_h: usize,
    coefs: Vec<[i32; 64]>,
}

struct Frame {
    width: usize,
    height: usize,
    hmax: usize,
    vmax: usize,
    mcus_x: usize,
    mcus_y: usize,
    components: Vec<Component>,
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn u8(&mut self) -> Result<u8> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or_else(|| Error::parse(self.pos, "unexpected end of stream"))?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from(self.u8()?) << 8 | u16::from(self.u8()?))
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::parse(self.pos, "segment runs past end of stream"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    /// Reads a segment length and returns the payload.
    fn segment(&mut self) -> Result<(usize, &'a [u8])> {
        let start = self.pos;
        let len = self.u16()? as usize;
        if len < 2 {
            return Err(Error::parse(start, format!("segment length {len} < 2")));
        }
        Ok((start + 2, self.bytes(len - 2)?))
    }

    fn next_marker(&mut self) -> Result<u8> {
        // Skip any garbage and fill bytes up to the next marker.
        loop {
            let b = self.u8()?;
            if b != 0xFF {
                continue;
            }
            let mut m = self.u8()?;
            while m == 0xFF {
                m = self.u8()?;
            }
            if m != 0x00 {
                return Ok(m);
            }
        }
    }
}

/// Extracts every 8-bit DQT table (id, natural-order values) from a JPEG stream.
pub fn parse_quant_tables(bytes: &[u8]) -> Result<Vec<(u8, [u8; 64])>> {
    let mut r = Reader { data: bytes, pos: 0 };
    if r.u16()? != 0xFFD8 {
        return Err(Error::parse(0, "missing SOI marker"));
    }
    let mut out = Vec::new();
    loop {
        let m = r.next_marker()?;
        match m {
            0xD9 | 0xDA => return Ok(out),
            0xDB => {
                let (offset, payload) = r.segment()?;
                for (id, table) in read_dqt(offset, payload)? {
                    out.push((id, table));
                }
            }
            0x01 | 0xD0..=0xD7 => {}
            _ => {
                r.segment()?;
            }
        }
    }
}

fn read_dqt(offset: usize, payload: &[u8]) -> Result<Vec<(u8, [u8; 64])>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < payload.len() {
        let pq = payload[i] >> 4;
        let tq = payload[i] & 0x0F;
        if pq != 0 {
            return Err(Error::parse(offset + i, "16-bit quantization tables are not supported"));
        }
        if tq > 3 {
            return Err(Error::parse(offset + i, format!("quantization table id {tq} > 3")));
        }
        let body = payload
            .get(i + 1..i + 65)
            .ok_or_else(|| Error::parse(offset + i, "truncated DQT segment"))?;
        let mut table = [0u8; 64];
        for (k, &v) in body.iter().enumerate() {
            table[ZIGZAG[k]] = v;
        }
        out.push((tq, table));
        i += 65;
    }
    Ok(out)
}

/// Decodes a baseline sequential JPEG into a grayscale or RGB raster.
pub fn decode(bytes: &[u8]) -> Result<RasterImage> {
    let mut r = Reader { data: bytes, pos: 0 };
    if bytes.len() < 2 || r.u16()? != 0xFFD8 {
        return Err(Error::parse(0, "missing SOI marker"));
    }
    let mut qt: [Option<[u8; 64]>; 4] = [None; 4];
    let mut dc: [Option<DecodeTable>; 4] = [None, None, None, None];
    let mut ac: [Option<DecodeTable>; 4] = [None, None, None, None];
    let mut frame: Option<Frame> = None;
    let mut restart_interval = 0usize;
    let mut scans = 0usize;
    loop {
        let marker_at = r.pos;
        let m = r.next_marker()?;
        match m {
            0xD8 => return Err(Error::parse(marker_at, "unexpected second SOI")),
            0xD9 => break,
            0xC0 | 0xC1 => {
                if frame.is_some() {
                    return Err(Error::parse(marker_at, "multiple frames"));
                }
                let (offset, payload) = r.segment()?;
                frame = Some(read_sof(offset, payload)?);
            }
            0xC2..=0xC3 | 0xC5..=0xC7 | 0xC9..=0xCB | 0xCD..=0xCF => {
                return Err(Error::parse(marker_at, format!("unsupported frame type 0xFF{m:02X}")));
            }
            0xC4 => {
                let (offset, payload) = r.segment()?;
                let mut i = 0;
                while i < payload.len() {
                    let class = payload[i] >> 4;
                    let id = (payload[i] & 0x0F) as usize;
                    if class > 1 || id > 3 {
                        return Err(Error::parse(offset + i, "bad huffman table class/id"));
                    }
                    let counts: [u8; 16] = payload
                        .get(i + 1..i + 17)
                        .ok_or_else(|| Error::parse(offset + i, "truncated DHT segment"))?
                        .try_into()
                        .expect("16-byte slice");
                    let n: usize = counts.iter().map(|&c| c as usize).sum();
                    let symbols = payload
                        .get(i + 17..i + 17 + n)
                        .ok_or_else(|| Error::parse(offset + i, "truncated DHT symbols"))?
                        .to_vec();
                    let table = DecodeTable::new(&HuffmanSpec { counts, symbols })
                        .map_err(|e| Error::parse(offset + i, e.to_string()))?;
                    if class == 0 {
                        dc[id] = Some(table);
                    } else {
                        ac[id] = Some(table);
                    }
                    i += 17 + n;
                }
            }
            0xDB => {
                let (offset, payload) = r.segment()?;
                for (id, table) in read_dqt(offset, payload)? {
                    qt[id as usize] = Some(table);
                }
            }
            0xDD => {
                let (offset, payload) = r.segment()?;
                if payload.len() != 2 {
                    return Err(Error::parse(offset, "bad DRI length"));
                }
                restart_interval = usize::from(payload[0]) << 8 | usize::from(payload[1]);
            }
            0xDA => {
                let frame = frame
                    .as_mut()
                    .ok_or_else(|| Error::parse(marker_at, "scan before frame header"))?;
                let (offset, payload) = r.segment()?;
                let scan = read_sos(offset, payload, frame)?;
                let mut tables = Vec::with_capacity(scan.len());
                for &(ci, td, ta) in &scan {
                    let d = dc[td]
                        .as_ref()
                        .ok_or_else(|| Error::parse(offset, format!("missing DC table {td}")))?;
                    let a = ac[ta]
                        .as_ref()
                        .ok_or_else(|| Error::parse(offset, format!("missing AC table {ta}")))?;
                    tables.push((ci, d, a));
                }
                r.pos = decode_scan(bytes, r.pos, frame, &tables, restart_interval)?;
                scans += 1;
            }
            0x01 | 0xD0..=0xD7 => {}
            _ => {
                r.segment()?;
            }
        }
    }
    let frame = frame.ok_or_else(|| Error::parse(bytes.len(), "no frame header"))?;
    if scans == 0 {
        return Err(Error::parse(bytes.len(), "no scan data"));
    }
    reconstruct(frame, &qt)
}

fn read_sof(offset: usize, p: &[u8]) -> Result<Frame> {
    if p.len() < 6 {
        return Err(Error::parse(offset, "truncated SOF segment"));
    }
    if p[0] != 8 {
        return Err(Error::parse(offset, format!("{}-bit samples are not supported", p[0])));
    }
    let height = usize::from(p[1]) << 8 | usize::from(p[2]);
    let width = usize::from(p[3]) << 8 | usize::from(p[4]);
    let n = p[5] as usize;
    if width == 0 || height == 0 {
        return Err(Error::parse(offset, "zero image dimension"));
    }
    if width * height > MAX_PIXELS {
        return Err(Error::parse(offset, format!("{width}x{height} exceeds decoder limit")));
    }
    if n != 1 && n != 3 {
        return Err(Error::parse(offset, format!("{n} components are not supported")));
    }
    if p.len() != 6 + 3 * n {
        return Err(Error::parse(offset, "SOF length does not match component count"));
    }
    let mut comps = Vec::with_capacity(n);
    for c in p[6..].chunks_exact(3) {
        let (h, v) = ((c[1] >> 4) as usize, (c[1] & 0x0F) as usize);
        if !(1..=4).contains(&h) || !(1..=4).contains(&v) || c[2] > 3 {
            return Err(Error::parse(offset, "bad component sampling or table id"));
        }
        comps.push((c[0], h, v, c[2] as usize));
    }
    let hmax = comps.iter().map(|c| c.1).max().unwrap_or(1);
    let vmax = comps.iter().map(|c| c.2).max().unwrap_or(1);
    if comps.iter().any(|c| hmax % c.1 != 0 || vmax % c.2 != 0) {
        return Err(Error::parse(offset, "non-integral sampling ratios"));
    }
    let mcus_x = width.div_ceil(8 * hmax);
    let mcus_y = height.div_ceil(8 * vmax);
    let components = comps
        .into_iter()
        .map(|(id, h, v, tq)| {
            let (blocks_w, blocks_h) = (mcus_x * h, mcus_y * v);
            Component {
                id,
                h,
                v,
                tq,
                blocks_w,
                blocks_h,
                used_w: (width * h).div_ceil(hmax).div_ceil(8),
                used_h: (height * v).div_ceil(vmax).div_ceil(8),
                coefs: vec![[0; 64]; blocks_w * blocks_h],
            }
        })
        .collect();
    Ok(Frame {
        width,
        height,
        hmax,
        vmax,
        mcus_x,
        mcus_y,
        components,
    })
}

fn read_sos(offset: usize, p: &[u8], frame: &Frame) -> Result<Vec<(usize, usize, usize)>> {
    let n = *p.first().ok_or_else(|| Error::parse(offset, "empty SOS"))? as usize;
    if n == 0 || n > frame.components.len() || p.len() != 4 + 2 * n {
        return Err(Error::parse(offset, "bad SOS length"));
    }
    let mut out = Vec::with_capacity(n);
    for c in p[1..1 + 2 * n].chunks_exact(2) {
        let ci = frame
            .components
            .iter()
            .position(|comp| comp.id == c[0])
            .ok_or_else(|| Error::parse(offset, format!("scan references unknown component {}", c[0])))?;
        let (td, ta) = ((c[1] >> 4) as usize, (c[1] & 0x0F) as usize);
        if td > 3 || ta > 3 {
            return Err(Error::parse(offset, "huffman table id > 3"));
        }
        out.push((ci, td, ta));
    }
    let (ss, se, a) = (p[1 + 2 * n], p[2 + 2 * n], p[3 + 2 * n]);
    if ss != 0 || se != 63 || a != 0 {
        return Err(Error::parse(offset, "non-sequential scan parameters"));
    }
    Ok(out)
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u64,
    nbits: u32,
    at_marker: bool,
    phantom: usize,
}

impl<'a> BitReader<'a> {
    fn fill(&mut self) {
        while self.nbits <= 56 {
            if self.at_marker {
                if self.phantom >= 8 {
                    return;
                }
                self.phantom += 1;
                self.acc <<= 8;
                self.nbits += 8;
                continue;
            }
            let Some(&b) = self.data.get(self.pos) else { return };
            if b == 0xFF {
                match self.data.get(self.pos + 1) {
                    Some(0x00) => self.pos += 2,
                    Some(_) => {
                        self.at_marker = true;
                        continue;
                    }
                    None => return,
                }
            } else {
                self.pos += 1;
            }
            self.acc = (self.acc << 8) | u64::from(b);
            self.nbits += 8;
        }
    }

    #[inline]
    fn bit(&mut self) -> Result<u32> {
        if self.nbits == 0 {
            self.fill();
            if self.nbits == 0 {
                return Err(Error::parse(self.pos, "entropy-coded data ends prematurely"));
            }
        }
        self.nbits -= 1;
        Ok(((self.acc >> self.nbits) & 1) as u32)
    }

    fn bits(&mut self, n: u8) -> Result<u32> {
        let n = u32::from(n);
        if self.nbits < n {
            self.fill();
            if self.nbits < n {
                return Err(Error::parse(self.pos, "entropy-coded data ends prematurely"));
            }
        }
        self.nbits -= n;
        Ok(((self.acc >> self.nbits) & ((1u64 << n) - 1)) as u32)
    }

    fn symbol(&mut self, table: &DecodeTable) -> Result<u8> {
        let mut code = 0i32;
        for len in 1..=16 {
            code = (code << 1) | self.bit()? as i32;
            if let Some(s) = table.lookup(code, len) {
                return Ok(s);
            }
        }
        Err(Error::parse(self.pos, "invalid huffman code"))
    }

    fn receive_extend(&mut self, size: u8) -> Result<i32> {
        if size == 0 {
            return Ok(0);
        }
        if size > 16 {
            return Err(Error::parse(self.pos, format!("coefficient category {size} out of range")));
        }
        let v = self.bits(size)? as i32;
        Ok(if v < 1 << (size - 1) { v - (1 << size) + 1 } else { v })
    }

    fn restart(&mut self) -> Result<()> {
        self.acc = 0;
        self.nbits = 0;
        self.phantom = 0;
        self.at_marker = false;
        while self.pos + 1 < self.data.len() {
            if self.data[self.pos] == 0xFF && (0xD0..=0xD7).contains(&self.data[self.pos + 1]) {
                self.pos += 2;
                return Ok(());
            }
            self.pos += 1;
        }
        Err(Error::parse(self.pos, "missing restart marker"))
    }

    fn check_overrun(&self) -> Result<()> {
        let consumed_phantom_bits = (self.phantom as u32 * 8).saturating_sub(self.nbits);
        if consumed_phantom_bits > 8 {
            return Err(Error::parse(self.pos, "entropy-coded data overruns the next marker"));
        }
        Ok(())
    }
}

fn decode_block(
    r: &mut BitReader,
    dc: &DecodeTable,
    ac: &DecodeTable,
    pred: &mut i32,
    out: &mut [i32; 64],
) -> Result<()> {
    let size = r.symbol(dc)?;
    *pred += r.receive_extend(size)?;
    out[0] = *pred;
    let mut k = 1;
    while k < 64 {
        let rs = r.symbol(ac)?;
        let (run, size) = (rs >> 4, rs & 0x0F);
        if size == 0 {
            if run == 15 {
                k += 16;
                continue;
            }
            break;
        }
        k += run as usize;
        if k > 63 {
            return Err(Error::parse(r.pos, "AC run exceeds block"));
        }
        out[k] = r.receive_extend(size)?;
        k += 1;
    }
    Ok(())
}

fn decode_scan(
    data: &[u8],
    start: usize,
    frame: &mut Frame,
    tables: &[(usize, &DecodeTable, &DecodeTable)],
    restart_interval: usize,
) -> Result<usize> {
    let mut r = BitReader {
        data,
        pos: start,
        acc: 0,
        nbits: 0,
        at_marker: false,
        phantom: 0,
    };
    let mut preds = vec![0i32; tables.len()];
    let mut zz = [0i32; 64];
    let mut mcu = 0usize;
    let handle_restart = |r: &mut BitReader, preds: &mut [i32], mcu: &mut usize| -> Result<()> {
        if restart_interval > 0 && *mcu > 0 && *mcu % restart_interval == 0 {
            r.restart()?;
            preds.iter_mut().for_each(|p| *p = 0);
        }
        *mcu += 1;
        Ok(())
    };
    if tables.len() == 1 {
        let (ci, dct_dc, dct_ac) = tables[0];
        let (used_w, used_h) = (frame.components[ci].used_w, frame.components[ci].used_h);
        for by in 0..used_h {
            for bx in 0..used_w {
                handle_restart(&mut r, &mut preds, &mut mcu)?;
                zz.fill(0);
                decode_block(&mut r, dct_dc, dct_ac, &mut preds[0], &mut zz)?;
                let comp = &mut frame.components[ci];
                store(&mut comp.coefs[by * comp.blocks_w + bx], &zz);
            }
        }
    } else {
        for my in 0..frame.mcus_y {
            for mx in 0..frame.mcus_x {
                handle_restart(&mut r, &mut preds, &mut mcu)?;
                for (si, &(ci, dct_dc, dct_ac)) in tables.iter().enumerate() {
                    let (h, v) = (frame.components[ci].h, frame.components[ci].v);
                    for y in 0..v {
                        for x in 0..h {
                            zz.fill(0);
                            decode_block(&mut r, dct_dc, dct_ac, &mut preds[si], &mut zz)?;
                            let comp = &mut frame.components[ci];
                            let idx = (my * v + y) * comp.blocks_w + mx * h + x;
                            store(&mut comp.coefs[idx], &zz);
                        }
                    }
                }
            }
        }
    }
    r.check_overrun()?;
    // Leave the cursor at the first byte not consumed as entropy data.
    Ok(r.pos)
}

#[inline]
fn store(dst: &mut [i32; 64], zz: &[i32; 64]) {
    for (k, &nat) in ZIGZAG.iter().enumerate() {
        dst[nat] = zz[k];
    }
}

fn reconstruct(frame: Frame, qt: &[Option<[u8; 64]>; 4]) -> Result<RasterImage> {
    let (w, h) = (frame.width, frame.height);
    let mut planes = Vec::with_capacity(frame.components.len());
    for comp in &frame.components {
        let table = qt[comp.tq].ok_or_else(|| Error::parse(0, format!("missing quantization table {}", comp.tq)))?;
        let pw = comp.blocks_w * 8;
        let mut plane = vec![0u8; pw * comp.blocks_h * 8];
        for by in 0..comp.blocks_h {
            for bx in 0..comp.blocks_w {
                let q = &comp.coefs[by * comp.blocks_w + bx];
                let deq: [f32; 64] = std::array::from_fn(|i| (q[i] * i32::from(table[i])) as f32);
                let px = dct::inverse(&deq);
                for y in 0..8 {
                    let row = &mut plane[(by * 8 + y) * pw + bx * 8..][..8];
                    for x in 0..8 {
                        row[x] = (px[y * 8 + x] + 128.0).round().clamp(0.0, 255.0) as u8;
                    }
                }
            }
        }
        planes.push(plane);
    }

    let upsampled: Vec<Vec<f32>> = frame
        .components
        .iter()
        .zip(&planes)
        .map(|(comp, plane)| upsample(comp, plane, &frame))
        .collect();

    if upsampled.len() == 1 {
        let data = upsampled[0].iter().map(|&v| v.round() as u8).collect();
        return RasterImage::gray(w, h, data);
    }
    let mut data = Vec::with_capacity(w * h * 3);
    for i in 0..w * h {
        let y = upsampled[0][i];
        let cb = upsampled[1][i] - 128.0;
        let cr = upsampled[2][i] - 128.0;
        let r = y + 1.402 * cr;
        let g = y - 0.344_136 * cb - 0.714_136 * cr;
        let b = y + 1.772 * cb;
        data.extend([r, g, b].map(|v| v.round().clamp(0.0, 255.0) as u8));
    }
    RasterImage::rgb(w, h, data)
}

/// Brings a component plane to full resolution with centred linear interpolation.
fn upsample(comp: &Component, plane: &[u8], frame: &Frame) -> Vec<f32> {
    let (w, h) = (frame.width, frame.height);
    let pw = comp.blocks_w * 8;
    let sx = frame.hmax / comp.h;
    let sy = frame.vmax / comp.v;
    if sx == 1 && sy == 1 {
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            out.extend(plane[y * pw..y * pw + w].iter().map(|&v| f32::from(v)));
        }
        return out;
    }
    let cw = (w * comp.h).div_ceil(frame.hmax);
    let ch = (h * comp.v).div_ceil(frame.vmax);
    let axis = |dst: usize, scale: usize, len: usize| {
        let pos = ((dst as f32 + 0.5) / scale as f32 - 0.5).clamp(0.0, (len - 1) as f32);
        let lo = pos.floor() as usize;
        (lo, (lo + 1).min(len - 1), pos - lo as f32)
    };
    let cols: Vec<_> = (0..w).map(|x| axis(x, sx, cw)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1, fy) = axis(y, sy, ch);
        let r0 = &plane[y0 * pw..];
        let r1 = &plane[y1 * pw..];
        for &(x0, x1, fx) in &cols {
            let top = f32::from(r0[x0]) * (1.0 - fx) + f32::from(r0[x1]) * fx;
            let bottom = f32::from(r1[x0]) * (1.0 - fx) + f32::from(r1[x1]) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}
