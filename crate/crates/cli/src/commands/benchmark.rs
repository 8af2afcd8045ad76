use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use jqf_core::metrics::FsimReference;
use jqf_core::texture::DctEnergyEmbedder;
use jqf_core::{EncodeOptions, Subsampling, TableFile, TextureModel};
use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use super::{fused_usable_at, measure, pct_delta, standard_chroma, standard_luma, Measured};
use crate::corpus;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkParams {
    pub corpus: PathBuf,
    pub model: Option<PathBuf>,
    /// Extra luminance tables (table files) to compare against the standard one.
    pub tables: Vec<PathBuf>,
    pub qualities: Vec<u8>,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub subsampling: Subsampling,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub file: String,
    /// `standard`, `fused` or `external`.
    pub kind: String,
    pub variant: String,
    pub quality: u8,
    pub size: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub fsim: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub variant: String,
    pub quality: u8,
    pub images: usize,
    pub size_delta_pct: f64,
    pub psnr_delta_pct: f64,
    pub ssim_delta_pct: f64,
    pub fsim_delta_pct: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub file: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub params: BenchmarkParams,
    pub variants: Vec<String>,
    pub images: usize,
    pub aggregates: Vec<Aggregate>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, Serialize)]
struct ImageReport {
    file: String,
    distribution: Option<BTreeMap<usize, f64>>,
    rows: Vec<Row>,
}

pub const STANDARD: &str = "standard";
pub const FUSED: &str = "fused";
pub const EXTERNAL: &str = "external";

fn table_label(path: &Path) -> String {
    format!("table:{}", corpus::file_name(path))
}

fn bench_image(
    path: &Path,
    model: Option<&TextureModel>,
    tables: &[(String, TableFile)],
    p: &BenchmarkParams,
) -> Result<ImageReport> {
    let file = corpus::file_name(path);
    let image = corpus::load(path)?;
    let reference = FsimReference::new(&image)?;
    let options = EncodeOptions {
        subsampling: p.subsampling,
    };
    let distribution = model.map(|m| m.predict(&image, &DctEnergyEmbedder)).transpose()?;
    let mut rows = Vec::new();
    let mut push = |kind: &str, variant: &str, quality: u8, m: Measured| {
        rows.push(Row {
            file: file.clone(),
            kind: kind.to_string(),
            variant: variant.to_string(),
            quality,
            size: m.size,
            psnr: m.psnr,
            ssim: m.ssim,
            fsim: m.fsim,
        })
    };
    for &q in &p.qualities {
        let chroma = standard_chroma(q)?;
        let (_, m) = measure(&image, &reference, &standard_luma(q)?, &chroma, &options)?;
        push(STANDARD, STANDARD, q, m);
        if let (Some(model), Some(d)) = (model, &distribution) {
            if model.anneal_quality().is_some_and(|aq| fused_usable_at(aq, q)) {
                let (_, m) = measure(&image, &reference, &model.fused_table(d, q)?, &chroma, &options)?;
                push(FUSED, FUSED, q, m);
            }
        }
        for (label, t) in tables {
            let (_, m) = measure(&image, &reference, &t.at_quality(q)?, &chroma, &options)?;
            push(EXTERNAL, label, q, m);
        }
    }
    Ok(ImageReport {
        file,
        distribution: distribution.map(|d| d.weights()),
        rows,
    })
}

/// Mean relative change of each variant against the standard encode of the same image and quality.
pub fn aggregate(rows: &[Row], variants: &[String], qualities: &[u8]) -> Vec<Aggregate> {
    let standard: BTreeMap<(&str, u8), &Row> = rows
        .iter()
        .filter(|r| r.variant == STANDARD)
        .map(|r| ((r.file.as_str(), r.quality), r))
        .collect();
    let mut out = Vec::new();
    for v in variants {
        for &q in qualities {
            let pairs: Vec<(&Row, &Row)> = rows
                .iter()
                .filter(|r| &r.variant == v && r.quality == q)
                .filter_map(|r| standard.get(&(r.file.as_str(), q)).map(|s| (r, *s)))
                .collect();
            if pairs.is_empty() {
                continue;
            }
            let mean = |f: &dyn Fn(&Row) -> f64| -> f64 {
                let d: Vec<f64> = pairs
                    .iter()
                    .map(|(r, s)| pct_delta(f(r), f(s)))
                    .filter(|d| d.is_finite())
                    .collect();
                if d.is_empty() {
                    f64::NAN
                } else {
                    d.iter().sum::<f64>() / d.len() as f64
                }
            };
            out.push(Aggregate {
                variant: v.clone(),
                quality: q,
                images: pairs.len(),
                size_delta_pct: mean(&|r| r.size as f64),
                psnr_delta_pct: mean(&|r| r.psnr),
                ssim_delta_pct: mean(&|r| r.ssim),
                fsim_delta_pct: mean(&|r| r.fsim),
            });
        }
    }
    out
}

fn csv_bytes<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for item in items {
        w.serialize(item)?;
    }
    w.into_inner().map_err(|e| CliError::usage(e.to_string()))
}

pub fn run(p: &BenchmarkParams) -> Result<BenchmarkReport> {
    let files = corpus::list_images(&p.corpus)?;
    let model = p.model.as_deref().map(TextureModel::load).transpose()?;
    if let Some(aq) = model.as_ref().and_then(TextureModel::anneal_quality) {
        for q in p.qualities.iter().filter(|&&q| !fused_usable_at(aq, q)) {
            warn!("tables annealed at Q={aq} apply only at Q={aq}; no fused rows at Q={q}");
        }
    }
    let tables = p
        .tables
        .iter()
        .map(|path| Ok((table_label(path), TableFile::parse(&corpus::read_to_string(path)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut variants = vec![STANDARD.to_string()];
    if model.is_some() {
        variants.push(FUSED.to_string());
    }
    variants.extend(tables.iter().map(|(l, _)| l.clone()));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(p.workers.max(1))
        .build()
        .map_err(|e| CliError::usage(format!("worker pool: {e}")))?;
    let results: Vec<(PathBuf, Result<ImageReport>)> = pool.install(|| {
        files
            .par_iter()
            .map(|f| (f.clone(), bench_image(f, model.as_ref(), &tables, p)))
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (path, result) in results {
        match result {
            Ok(report) => {
                let name = format!("images/{}.json", report.file);
                corpus::write(&p.out_dir.join(name), serde_json::to_string_pretty(&report)?)?;
                rows.extend(report.rows);
            }
            Err(e) => {
                warn!("{}: {e}", path.display());
                failures.push(Failure {
                    file: corpus::file_name(&path),
                    message: e.to_string(),
                });
            }
        }
    }
    let aggregates = aggregate(&rows, &variants, &p.qualities);
    corpus::write(&p.out_dir.join("rows.csv"), csv_bytes(&rows)?)?;
    corpus::write(&p.out_dir.join("aggregates.csv"), csv_bytes(&aggregates)?)?;
    let report = BenchmarkReport {
        params: p.clone(),
        variants,
        images: files.len() - failures.len(),
        aggregates,
        failures,
    };
    corpus::write(&p.out_dir.join("benchmark.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}
