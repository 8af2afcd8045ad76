//! Command-line front end: argument parsing, configuration layering and the subcommands.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use jqf_core::{AnnealConfig, Subsampling};

use crate::commands::anneal::AnnealParams;
use crate::commands::benchmark::BenchmarkParams;
use crate::commands::cluster::ClusterParams;
use crate::commands::compress::CompressParams;
use crate::commands::export::ExportParams;
use crate::commands::metrics::MetricsParams;
use crate::commands::visualize::VisualizeParams;
use crate::config::Settings;
pub use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "jqf", version, about = "Texture-aware JPEG quantization tables")]
pub struct Cli {
    /// `key = value` file with defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut the corpus into patches, embed them and cluster into K textures.
    Cluster(ClusterArgs),
    /// Search one luminance table per texture and store them in the model.
    Anneal(AnnealArgs),
    /// Compress one image with its fused table.
    Compress(CompressArgs),
    /// Compare standard, fused and external tables over a corpus.
    Benchmark(BenchmarkArgs),
    /// PSNR, SSIM and FSIM of distorted images against a reference.
    Metrics(MetricsArgs),
    /// Show how a table differs from a baseline.
    Visualize(VisualizeArgs),
    /// Write model or standard tables as table files.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Precomputed embeddings (exchange format) instead of the built-in embedder.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-patch assignment CSV; defaults to `<out>.assignments.csv`.
    #[arg(long)]
    pub assignments: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AnnealArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output model; the input model is left untouched.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for per-texture traces; defaults to `<out>.traces`.
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub max_patches: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub anneal_quality: Option<u8>,
    #[arg(long)]
    pub max_reproposals: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub subsampling: Option<Subsampling>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON report; defaults to `<out>.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Externally computed embeddings or labels for the image's patches.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, short)]
    pub quality: Option<u8>,
    #[arg(long)]
    pub subsampling: Option<Subsampling>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Additional luminance table files to compare.
    #[arg(long = "table")]
    pub tables: Vec<PathBuf>,
    /// Comma-separated list, e.g. `35,50,75,95`.
    #[arg(long)]
    pub qualities: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub subsampling: Option<Subsampling>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(required = true)]
    pub distorted: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VisualizeArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub baseline: PathBuf,
    #[arg(long)]
    pub html: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub standard: Option<u8>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn with_suffix(path: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

impl ClusterArgs {
    pub fn resolve(&self, s: &Settings) -> Result<ClusterParams> {
        Ok(ClusterParams {
            corpus: self.corpus.clone(),
            embeddings: self.embeddings.clone(),
            assignments: self
                .assignments
                .clone()
                .unwrap_or_else(|| with_suffix(&self.out, ".assignments.csv")),
            out: self.out.clone(),
            k: s.pick(self.k, "k", 100)?,
            stride: s.pick(self.stride, "stride", 256)?,
            seed: s.pick(self.seed, "seed", 0)?,
        })
    }
}

impl AnnealArgs {
    pub fn resolve(&self, s: &Settings) -> Result<AnnealParams> {
        let d = AnnealConfig::default();
        let subsampling = match self.subsampling {
            Some(v) => v,
            None => s.get::<Subsampling>("subsampling")?.unwrap_or(d.subsampling),
        };
        let config = AnnealConfig {
            iterations: s.pick(self.iterations, "iterations", d.iterations)?,
            p: s.pick(self.p, "p", d.p)?,
            gamma: s.pick(self.gamma, "gamma", d.gamma)?,
            quality: s.pick(self.anneal_quality, "anneal_quality", d.quality)?,
            seed: s.pick(self.seed, "seed", d.seed)?,
            max_reproposals: s.pick(self.max_reproposals, "max_reproposals", d.max_reproposals)?,
            subsampling,
        };
        Ok(AnnealParams {
            model: self.model.clone(),
            corpus: self.corpus.clone(),
            trace_dir: self.trace_dir.clone().unwrap_or_else(|| with_suffix(&self.out, ".traces")),
            out: self.out.clone(),
            labels: self.labels.clone(),
            stride: s.pick(self.stride, "stride", 256)?,
            max_patches: s.pick(self.max_patches, "max_patches", jqf_core::texture::DEFAULT_MAX_PATCHES)?,
            workers: config::workers(s, self.workers)?,
            config,
        })
    }
}

fn subsampling(s: &Settings, flag: Option<Subsampling>) -> Result<Subsampling> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(s.get::<Subsampling>("subsampling")?.unwrap_or_default()),
    }
}

impl CompressArgs {
    pub fn resolve(&self, s: &Settings) -> Result<CompressParams> {
        let quality = s.pick(self.quality, "quality", 75u8)?;
        if !(1..=100).contains(&quality) {
            return Err(CliError::usage(format!("quality {quality} outside 1..=100")));
        }
        Ok(CompressParams {
            image: self.image.clone(),
            model: self.model.clone(),
            report: self.report.clone().unwrap_or_else(|| with_suffix(&self.out, ".json")),
            out: self.out.clone(),
            labels: self.labels.clone(),
            quality,
            subsampling: subsampling(s, self.subsampling)?,
        })
    }
}

impl BenchmarkArgs {
    pub fn resolve(&self, s: &Settings) -> Result<BenchmarkParams> {
        Ok(BenchmarkParams {
            corpus: self.corpus.clone(),
            model: self.model.clone(),
            tables: self.tables.clone(),
            qualities: s.qualities(self.qualities.as_deref())?,
            out_dir: self.out_dir.clone(),
            workers: config::workers(s, self.workers)?,
            subsampling: subsampling(s, self.subsampling)?,
        })
    }
}

/// Runs the parsed command; human-readable results go to stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    match &cli.command {
        Command::Cluster(a) => {
            let summary = commands::cluster::run(&a.resolve(&settings)?)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Anneal(a) => {
            let summary = commands::anneal::run(&a.resolve(&settings)?)?;
            for t in &summary.textures {
                println!(
                    "texture {:>3}: {:>4} patches, size {} -> {}, fsim {:.5} -> {:.5}{}",
                    t.texture,
                    t.patches,
                    t.baseline_size,
                    t.size,
                    t.baseline_fsim,
                    t.fsim,
                    if t.annealed { "" } else { " (standard table)" }
                );
            }
        }
        Command::Compress(a) => {
            let report = commands::compress::run(&a.resolve(&settings)?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Benchmark(a) => {
            let report = commands::benchmark::run(&a.resolve(&settings)?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Metrics(a) => {
            let rows = commands::metrics::run(&MetricsParams {
                reference: a.reference.clone(),
                distorted: a.distorted.clone(),
            })?;
            let text = commands::metrics::to_csv(&rows)?;
            match &a.out {
                Some(path) => corpus::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Command::Visualize(a) => {
            let diff = commands::visualize::run(&VisualizeParams {
                table: a.table.clone(),
                baseline: a.baseline.clone(),
                html: a.html.clone(),
            })?;
            print!("{}", diff.to_text());
        }
        Command::Export(a) => {
            let written = commands::export::run(&ExportParams {
                model: a.model.clone(),
                standard: a.standard,
                out_dir: a.out_dir.clone(),
            })?;
            for p in written {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}
