//! Per-texture JPEG quantization-table search and fusion.
//!
//! The crate is organised around the training and deployment flows:
//!
//! * [`texture`] cuts images into 64x64 patches, embeds and clusters them,
//!   stitches same-texture mosaics and predicts an image's texture mix;
//! * [`annealer`] searches an optimal luminance table for one mosaic;
//! * [`qtable`] scales tables across qualities and fuses per-texture tables;
//! * [`codec`] and [`metrics`] supply the rate and distortion signals.

pub mod annealer;
pub mod codec;
pub mod error;
pub mod metrics;
pub mod qtable;
pub mod raster;
pub mod texture;

pub use annealer::{anneal, anneal_all, AnnealConfig, AnnealOutcome, AnnealTrace};
pub use codec::{compressed_size, decode, encode, EncodeOptions, JpegBlob, PreparedImage, Subsampling};
pub use error::{Error, Result};
pub use metrics::{fsim, psnr, quality_within_tolerance, ssim, MetricKind, QualityScore};
pub use qtable::{fuse, scale_factor, scale_table, standard_tables, unscale_table, ComponentKind, FusionWeights, QuantTable, TableFile};
pub use raster::{PixelFormat, RasterImage};
pub use texture::{TextureDistribution, TextureModel, TexturePatch};
