//! Simulated-annealing search for a per-texture luminance table.
//!
//! The search runs on the table expressed at `quality` (after scaling), since
//! unit steps on a base table vanish once it is scaled down at high qualities.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{EncodeOptions, PreparedImage, Subsampling};
use crate::error::{Error, Result};
use crate::metrics::{check_gamma, within_tolerance, FsimReference};
use crate::qtable::{scale_table, standard_tables, QuantTable};
use crate::raster::RasterImage;
use crate::texture::{TextureModel, PATCH_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    /// Iteration count `M`.
    pub iterations: usize,
    /// Temperature shape `p`.
    pub p: f64,
    /// FSIM tolerance `gamma`.
    pub gamma: f64,
    pub quality: u8,
    pub seed: u64,
    pub max_reproposals: usize,
    pub subsampling: Subsampling,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            p: 10.0,
            gamma: 0.01,
            quality: 50,
            seed: 0,
            max_reproposals: 50,
            subsampling: Subsampling::S420,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::invalid(format!("temperature shape p={} must be positive", self.p)));
        }
        check_gamma(self.gamma)?;
        if !(1..=100).contains(&self.quality) {
            return Err(Error::invalid(format!("quality {} outside 1..=100", self.quality)));
        }
        if self.max_reproposals == 0 {
            return Err(Error::invalid("max_reproposals must be at least 1"));
        }
        Ok(())
    }
}

/// `T(i) = M / (M + i p)`.
pub fn temperature(i: usize, config: &AnnealConfig) -> f64 {
    let m = config.iterations as f64;
    m / (m + i as f64 * config.p)
}

/// `S = C (1 - D)`.
pub fn energy(size: usize, fsim: f64) -> f64 {
    size as f64 * (1.0 - fsim)
}

/// Probability of taking a non-improving candidate: `clamp((S / S_prev) T(i), 0, 1)`.
pub fn accept_probability(s: f64, s_prev: f64, i: usize, config: &AnnealConfig) -> Result<f64> {
    if s_prev == 0.0 {
        return Err(Error::DegenerateEnergy);
    }
    Ok((s / s_prev * temperature(i, config)).clamp(0.0, 1.0))
}

/// Moves 1 to 4 distinct entries by one step each; small entries are picked more often.
pub fn propose(current: &QuantTable, rng: &mut impl Rng) -> QuantTable {
    let n = rng.random_range(1..=4);
    let values = current.values();
    let picks = index::sample_weighted(rng, 64, |i| 1.0 / f64::from(values[i]), n)
        .expect("weights are positive and finite");
    let mut next = *current;
    for i in picks {
        let step = if rng.random_bool(0.5) { 1 } else { -1 };
        next = next.with_value(i, i64::from(values[i]) + step);
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcceptKind {
    Improve,
    WorseAccepted,
    Kept,
}

impl AcceptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AcceptKind::Improve => "improve",
            AcceptKind::WorseAccepted => "worse-accepted",
            AcceptKind::Kept => "kept",
        }
    }
}

/// One iteration; size/fsim/energy describe the last candidate evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub proposals: usize,
    pub kind: AcceptKind,
    pub size: usize,
    pub fsim: f64,
    pub energy: f64,
    pub temperature: f64,
    pub probability: f64,
}

impl TraceRecord {
    pub fn accepted(&self) -> bool {
        self.kind != AcceptKind::Kept
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealTrace {
    pub baseline_size: usize,
    pub baseline_fsim: f64,
    pub records: Vec<TraceRecord>,
}

impl AnnealTrace {
    pub const CSV_HEADER: &'static str =
        "iteration,proposals,accepted,kind,size,fsim,energy,temperature,probability";

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# baseline_size={} baseline_fsim={:.17}\n{}\n",
            self.baseline_size,
            self.baseline_fsim,
            Self::CSV_HEADER
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.17},{:.17},{:.17},{:.17}",
                r.iteration,
                r.proposals,
                r.accepted(),
                r.kind.as_str(),
                r.size,
                r.fsim,
                r.energy,
                r.temperature,
                r.probability
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOutcome {
    /// Smallest feasible table seen (lower energy breaks ties), at the annealing quality.
    pub table: QuantTable,
    pub size: usize,
    pub fsim: f64,
    pub energy: f64,
    pub trace: AnnealTrace,
}

struct Evaluator {
    prepared: PreparedImage,
    reference: FsimReference,
    chroma: QuantTable,
}

impl Evaluator {
    fn evaluate(&self, luma: &QuantTable) -> Result<(usize, f64)> {
        let blob = self.prepared.encode(luma, &self.chroma)?;
        let decoded = blob.decode()?;
        Ok((blob.size_bytes(), self.reference.score(&decoded)?))
    }
}

/// Anneals the luminance table for one mosaic.
pub fn anneal(mosaic: &RasterImage, config: &AnnealConfig) -> Result<AnnealOutcome> {
    config.validate()?;
    if mosaic.width() < PATCH_SIZE || mosaic.height() < PATCH_SIZE {
        return Err(Error::TooSmall {
            width: mosaic.width(),
            height: mosaic.height(),
            min: PATCH_SIZE,
        });
    }
    let (std_luma, std_chroma) = standard_tables();
    let options = EncodeOptions {
        subsampling: config.subsampling,
    };
    let eval = Evaluator {
        prepared: PreparedImage::new(mosaic, &options)?,
        reference: FsimReference::new(mosaic)?,
        chroma: scale_table(&std_chroma, config.quality)?,
    };
    let mut current = scale_table(&std_luma, config.quality)?;
    let (baseline_size, baseline_fsim) = eval.evaluate(&current)?;
    let mut cur = (baseline_size, baseline_fsim, energy(baseline_size, baseline_fsim));
    let mut best = (current, cur);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::with_capacity(config.iterations);

    for i in 1..=config.iterations {
        let t = temperature(i, config);
        let mut record = None;
        for attempt in 1..=config.max_reproposals {
            let candidate = propose(&current, &mut rng);
            let (size, fsim) = if candidate == current {
                (cur.0, cur.1)
            } else {
                eval.evaluate(&candidate).map_err(|e| Error::Anneal {
                    iteration: i,
                    source: Box::new(e),
                })?
            };
            let s = energy(size, fsim);
            let feasible = within_tolerance(fsim, baseline_fsim, config.gamma);
            let (kind, probability) = if size < cur.0 && feasible {
                (Some(AcceptKind::Improve), 1.0)
            } else {
                let p = accept_probability(s, cur.2, i, config).map_err(|e| Error::Anneal {
                    iteration: i,
                    source: Box::new(e),
                })?;
                (rng.random_bool(p).then_some(AcceptKind::WorseAccepted), p)
            };
            let rec = TraceRecord {
                iteration: i,
                proposals: attempt,
                kind: kind.unwrap_or(AcceptKind::Kept),
                size,
                fsim,
                energy: s,
                temperature: t,
                probability,
            };
            record = Some(rec);
            if kind.is_some() {
                current = candidate;
                cur = (size, fsim, s);
                if feasible && (size, s) < (best.1 .0, best.1 .2) {
                    best = (current, cur);
                }
                break;
            }
        }
        records.push(record.expect("at least one proposal per iteration"));
    }

    let (table, (size, fsim, energy)) = best;
    Ok(AnnealOutcome {
        table,
        size,
        fsim,
        energy,
        trace: AnnealTrace {
            baseline_size,
            baseline_fsim,
            records,
        },
    })
}

/// Anneals several mosaics on a pool of at most `workers` threads.
pub fn anneal_textures(
    mosaics: &BTreeMap<usize, RasterImage>,
    config: &AnnealConfig,
    workers: usize,
) -> Result<BTreeMap<usize, AnnealOutcome>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    pool.install(|| {
        mosaics
            .par_iter()
            .map(|(&id, mosaic)| anneal(mosaic, config).map(|o| (id, o)))
            .collect()
    })
}

/// Fills every texture's table in `model`; each texture needs a mosaic.
pub fn anneal_all(
    model: &TextureModel,
    mosaics: &BTreeMap<usize, RasterImage>,
    config: &AnnealConfig,
    workers: usize,
) -> Result<(TextureModel, BTreeMap<usize, AnnealOutcome>)> {
    if let Some(t) = (0..model.k()).find(|t| !mosaics.contains_key(t)) {
        return Err(Error::invalid(format!("no mosaic for texture {t}")));
    }
    if let Some(t) = mosaics.keys().find(|&&t| t >= model.k()) {
        return Err(Error::invalid(format!("mosaic for unknown texture {t}")));
    }
    let outcomes = anneal_textures(mosaics, config, workers)?;
    let mut out = model.clone();
    out.set_tables(config.quality, outcomes.iter().map(|(&t, o)| (t, o.table)).collect())?;
    Ok((out, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize) -> AnnealConfig {
        AnnealConfig {
            iterations: m,
            ..AnnealConfig::default()
        }
    }

    #[test]
    fn temperature_examples() {
        let c = cfg(2000);
        assert_eq!(temperature(0, &c), 1.0);
        assert!((temperature(2000, &c) - 1.0 / 11.0).abs() < 1e-15);
        assert!((temperature(1000, &c) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn energy_examples() {
        assert!((energy(1000, 0.99) - 10.0).abs() < 1e-9);
        assert_eq!(energy(123_456, 1.0), 0.0);
        assert!(energy(999, 0.9) < energy(1000, 0.9));
    }

    #[test]
    fn probability_examples() {
        let c = cfg(2000);
        assert_eq!(accept_probability(5.0, 5.0, 0, &c).unwrap(), 1.0);
        assert!((accept_probability(0.8333, 1.0, 2000, &c).unwrap() - 0.8333 / 11.0).abs() < 1e-12);
        assert_eq!(accept_probability(20.0, 1.0, 0, &c).unwrap(), 1.0);
        assert!(matches!(accept_probability(1.0, 0.0, 3, &c), Err(Error::DegenerateEnergy)));
    }

    #[test]
    fn propose_moves_few_entries_by_one() {
        let (std, _) = standard_tables();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let next = propose(&std, &mut rng);
            let diffs: Vec<i32> = std
                .values()
                .iter()
                .zip(next.values())
                .map(|(&a, &b)| i32::from(b) - i32::from(a))
                .filter(|d| *d != 0)
                .collect();
            assert!(!diffs.is_empty() && diffs.len() <= 4);
            assert!(diffs.iter().all(|d| d.abs() == 1));
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(10).validate().is_ok());
        assert!(AnnealConfig { gamma: 1.0, ..cfg(1) }.validate().is_err());
        assert!(AnnealConfig { p: 0.0, ..cfg(1) }.validate().is_err());
        assert!(AnnealConfig { quality: 0, ..cfg(1) }.validate().is_err());
        assert!(AnnealConfig { max_reproposals: 0, ..cfg(1) }.validate().is_err());
    }
}
