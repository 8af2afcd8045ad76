//! The `JQFE` embedding exchange format (little-endian):
//! magic, version u16, embedder id (u16 length + ASCII), count u32, dim u32,
//! `count * dim` f32 values row-major, then an optional `LBLS` block of u16 labels.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"JQFE";
const LABEL_MAGIC: &[u8; 4] = b"LBLS";
pub const EXCHANGE_VERSION: u16 = 1;

/// A block of same-dimension embeddings with optional per-patch labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    embedder_id: String,
    dim: usize,
    values: Vec<f32>,
    labels: Option<Vec<u16>>,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

impl EmbeddingSet {
    pub fn new(embedder_id: &str, dim: usize, values: Vec<f32>) -> Result<Self> {
        if !embedder_id.is_ascii() || embedder_id.len() > u16::MAX as usize {
            return Err(format_err("embedder id must be ASCII and at most 65535 bytes"));
        }
        if dim == 0 && !values.is_empty() {
            return Err(format_err("zero-dimension embeddings cannot carry values"));
        }
        if dim > 0 && values.len() % dim != 0 {
            return Err(format_err(format!("{} values are not a multiple of dim {dim}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(format_err(format!("non-finite embedding entry {v}")));
        }
        Ok(Self {
            embedder_id: embedder_id.to_string(),
            dim,
            values,
            labels: None,
        })
    }

    pub fn from_rows(embedder_id: &str, dim: usize, rows: Vec<Vec<f32>>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(format_err(format!("row of length {} in a dim-{dim} set", r.len())));
        }
        Self::new(embedder_id, dim, rows.concat())
    }

    pub fn with_labels(mut self, labels: Vec<u16>) -> Result<Self> {
        if !self.is_empty() && labels.len() != self.len() {
            return Err(format_err(format!("{} labels for {} embeddings", labels.len(), self.len())));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.values.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.dim.max(1))
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[u16]> {
        self.labels.as_deref()
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let count = u32::try_from(self.len()).map_err(|_| format_err("too many embeddings"))?;
        let dim = u32::try_from(self.dim).map_err(|_| format_err("dimension too large"))?;
        w.write_all(MAGIC)?;
        w.write_all(&EXCHANGE_VERSION.to_le_bytes())?;
        w.write_all(&(self.embedder_id.len() as u16).to_le_bytes())?;
        w.write_all(self.embedder_id.as_bytes())?;
        w.write_all(&count.to_le_bytes())?;
        w.write_all(&dim.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        if let Some(labels) = &self.labels {
            w.write_all(LABEL_MAGIC)?;
            w.write_all(&(labels.len() as u32).to_le_bytes())?;
            for l in labels {
                w.write_all(&l.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Parses one set from the start of `bytes`, returning it and the bytes consumed.
    pub fn parse_prefix(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(format_err("bad embedding magic, expected JQFE"));
        }
        let version = cur.u16()?;
        if version != EXCHANGE_VERSION {
            return Err(format_err(format!("unsupported exchange version {version}")));
        }
        let id_len = cur.u16()? as usize;
        let id = std::str::from_utf8(cur.take(id_len)?)
            .ok()
            .filter(|s| s.is_ascii())
            .ok_or_else(|| format_err("embedder id is not ASCII"))?
            .to_string();
        let count = cur.u32()? as usize;
        let dim = cur.u32()? as usize;
        if dim == 0 && count > 0 {
            return Err(format_err("dimension 0 with non-zero count"));
        }
        let n = count
            .checked_mul(dim)
            .filter(|n| n.checked_mul(4).is_some_and(|b| b <= cur.remaining()))
            .ok_or_else(|| format_err(format!("truncated: {count}x{dim} values declared")))?;
        let values = cur
            .take(n * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let mut set = Self::new(&id, dim, values)?;
        if cur.remaining() >= 4 && &bytes[cur.pos..cur.pos + 4] == LABEL_MAGIC {
            cur.take(4)?;
            let n = cur.u32()? as usize;
            if n.checked_mul(2).is_none_or(|b| b > cur.remaining()) {
                return Err(format_err(format!("truncated label block of {n} labels")));
            }
            let labels = (0..n).map(|_| cur.u16()).collect::<Result<Vec<_>>>()?;
            set = set.with_labels(labels)?;
        }
        Ok((set, cur.pos))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (set, used) = Self::parse_prefix(bytes)?;
        if used != bytes.len() {
            return Err(format_err(format!("{} trailing bytes after embeddings", bytes.len() - used)));
        }
        Ok(set)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

/// Reads an exchange file; row `i` is patch id `i`.
pub fn import_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    EmbeddingSet::from_bytes(&fs::read(path)?)
}

pub(crate) struct Cursor<'a> {
    pub(crate) bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(format_err(format!("unexpected end of data at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_little_endian() {
        let set = EmbeddingSet::new("ab", 2, vec![1.0, -2.5])
            .unwrap()
            .with_labels(vec![7])
            .unwrap();
        let b = set.to_bytes();
        assert_eq!(&b[..4], b"JQFE");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..10], &[2, 0, b'a', b'b']);
        assert_eq!(&b[10..18], &[1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&b[18..22], &1.0f32.to_le_bytes());
        assert_eq!(&b[26..30], b"LBLS");
        assert_eq!(&b[30..], &[1, 0, 0, 0, 7, 0]);
        assert_eq!(EmbeddingSet::from_bytes(&b).unwrap(), set);
    }

    #[test]
    fn empty_file_round_trips() {
        let set = EmbeddingSet::new("vgg16-pca500", 500, vec![]).unwrap();
        let back = EmbeddingSet::from_bytes(&set.to_bytes()).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.dim(), 500);
    }

    #[test]
    fn labels_only_block() {
        let set = EmbeddingSet::new("vgg16-pca500", 500, vec![])
            .unwrap()
            .with_labels(vec![0, 1, 1])
            .unwrap();
        let back = EmbeddingSet::from_bytes(&set.to_bytes()).unwrap();
        assert_eq!(back.labels(), Some(&[0u16, 1, 1][..]));
    }

    #[test]
    fn rejects_corruption() {
        let good = EmbeddingSet::new("x", 3, vec![0.5; 6]).unwrap().to_bytes();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(EmbeddingSet::from_bytes(&bad), Err(Error::Format(_))));
        assert!(EmbeddingSet::from_bytes(&good[..good.len() - 1]).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(EmbeddingSet::from_bytes(&extra).is_err());
        assert!(EmbeddingSet::new("x", 3, vec![f32::NAN, 0.0, 0.0]).is_err());
        assert!(EmbeddingSet::new("x", 3, vec![0.0; 4]).is_err());
        let mut huge = good.clone();
        huge[10..14].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(EmbeddingSet::from_bytes(&huge).is_err());
    }
}
