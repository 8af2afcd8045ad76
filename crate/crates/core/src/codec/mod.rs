//! Baseline sequential JPEG (JFIF) encoder and decoder with caller-supplied
//! quantization tables.
//!
//! The encoder uses the Annex K Huffman tables, BT.601 full-range colour
//! conversion, edge replication for partial MCUs and a floating-point DCT.
//! It always emits two DQT tables (luminance id 0, chrominance id 1), even
//! for grayscale input, so the stream carries both tables it was asked to use.

pub mod dct;
mod decoder;
mod encoder;
mod huffman;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use decoder::{decode, parse_quant_tables};
pub use encoder::{encode, PreparedImage, MIN_DIMENSION};
pub use huffman::HuffmanSpec;

use crate::error::{Error, Result};

/// `ZIGZAG[k]` is the natural (row-major) index of the k-th coefficient in scan order.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, //
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28, //
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, //
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Chroma subsampling for RGB input. Grayscale input ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Subsampling {
    #[default]
    #[serde(rename = "4:2:0")]
    S420,
    #[serde(rename = "4:4:4")]
    S444,
}

impl fmt::Display for Subsampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subsampling::S420 => "4:2:0",
            Subsampling::S444 => "4:4:4",
        })
    }
}

impl FromStr for Subsampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "4:2:0" | "420" => Ok(Subsampling::S420),
            "4:4:4" | "444" => Ok(Subsampling::S444),
            other => Err(Error::invalid(format!("unknown subsampling `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EncodeOptions {
    pub subsampling: Subsampling,
}

/// An encoded JFIF stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JpegBlob {
    bytes: Vec<u8>,
}

impl JpegBlob {
    /// Wraps raw bytes, checking only the SOI/EOI framing.
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() < 4 || bytes[..2] != [0xFF, 0xD8] {
            return Err(Error::parse(0, "missing SOI marker"));
        }
        if bytes[bytes.len() - 2..] != [0xFF, 0xD9] {
            return Err(Error::parse(bytes.len(), "missing EOI marker"));
        }
        Ok(Self { bytes })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn size_bytes(&self) -> usize {
        self.bytes.len()
    }

    pub fn decode(&self) -> Result<crate::raster::RasterImage> {
        decode(&self.bytes)
    }
}

/// Exact byte length of the stream.
pub fn compressed_size(blob: &JpegBlob) -> usize {
    blob.size_bytes()
}
