//! Quantization tables: libjpeg-compatible quality scaling, weighted fusion
//! and the plain-text table format.
//!
//! Values are always held in natural (row-major) order; zigzag ordering is a
//! concern of the bit stream and lives in [`crate::codec`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Annex K luminance table, natural order.
pub const STD_LUMINANCE: [u8; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Annex K chrominance table, natural order.
pub const STD_CHROMINANCE: [u8; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Luminance,
    Chrominance,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentKind::Luminance => "luminance",
            ComponentKind::Chrominance => "chrominance",
        })
    }
}

impl FromStr for ComponentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "luminance" | "luma" => Ok(ComponentKind::Luminance),
            "chrominance" | "chroma" => Ok(ComponentKind::Chrominance),
            other => Err(Error::Format(format!("unknown component kind `{other}`"))),
        }
    }
}

/// 64 baseline quantizer steps in natural order, each in `1..=255`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantTable {
    values: [u8; 64],
    kind: ComponentKind,
}

impl QuantTable {
    /// Builds a table, rejecting any entry outside `1..=255`.
    pub fn new(values: [u16; 64], kind: ComponentKind) -> Result<Self> {
        let mut out = [0u8; 64];
        for (i, (&v, slot)) in values.iter().zip(out.iter_mut()).enumerate() {
            if !(1..=255).contains(&v) {
                return Err(Error::invalid(format!("table entry {i} = {v} outside 1..=255")));
            }
            *slot = v as u8;
        }
        Ok(Self { values: out, kind })
    }

    pub fn from_u8(values: [u8; 64], kind: ComponentKind) -> Result<Self> {
        if let Some(i) = values.iter().position(|&v| v == 0) {
            return Err(Error::invalid(format!("table entry {i} is zero")));
        }
        Ok(Self { values, kind })
    }

    /// Clamps every entry into `1..=255`; never fails.
    pub fn from_clamped(values: [i64; 64], kind: ComponentKind) -> Self {
        Self {
            values: values.map(|v| v.clamp(1, 255) as u8),
            kind,
        }
    }

    pub fn uniform(value: u8, kind: ComponentKind) -> Result<Self> {
        Self::from_u8([value; 64], kind)
    }

    pub fn values(&self) -> &[u8; 64] {
        &self.values
    }

    pub fn kind(&self) -> ComponentKind {
        self.kind
    }

    pub fn get(&self, index: usize) -> u8 {
        self.values[index]
    }

    /// Returns a copy with one entry replaced (clamped to `1..=255`).
    pub fn with_value(&self, index: usize, value: i64) -> Self {
        let mut t = *self;
        t.values[index] = value.clamp(1, 255) as u8;
        t
    }
}

/// Returns the Annex K `(luminance, chrominance)` tables.
pub fn standard_tables() -> (QuantTable, QuantTable) {
    (
        QuantTable {
            values: STD_LUMINANCE,
            kind: ComponentKind::Luminance,
        },
        QuantTable {
            values: STD_CHROMINANCE,
            kind: ComponentKind::Chrominance,
        },
    )
}

/// A quality setting and its libjpeg scale factor as an integer percentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QualityScale {
    pub quality: u8,
    pub scale_percent: u32,
}

impl QualityScale {
    /// The scaling factor as a real number (`scale_percent / 100`).
    pub fn factor(&self) -> f64 {
        f64::from(self.scale_percent) / 100.0
    }
}

/// libjpeg's `jpeg_quality_scaling`: `5000 / Q` below 50, `200 - 2Q` from 50 up.
pub fn scale_factor(quality: u8) -> Result<QualityScale> {
    if !(1..=100).contains(&quality) {
        return Err(Error::invalid(format!("quality {quality} outside 1..=100")));
    }
    let q = u32::from(quality);
    let scale_percent = if q < 50 { 5000 / q } else { 200 - 2 * q };
    Ok(QualityScale {
        quality,
        scale_percent,
    })
}

/// Scales every entry, DC included, as `(v * scale + 50) / 100` clamped to `1..=255`.
pub fn scale_table(base: &QuantTable, quality: u8) -> Result<QuantTable> {
    let scale = i64::from(scale_factor(quality)?.scale_percent);
    Ok(QuantTable::from_clamped(
        base.values.map(|v| (i64::from(v) * scale + 50) / 100),
        base.kind,
    ))
}

/// Inverse of [`scale_table`] where no clamping happened: `round(v * 100 / scale)`.
pub fn unscale_table(scaled: &QuantTable, quality: u8) -> Result<QuantTable> {
    let scale = scale_factor(quality)?.scale_percent;
    if scale == 0 {
        return Err(Error::DegenerateScale(quality));
    }
    let scale = i64::from(scale);
    Ok(QuantTable::from_clamped(
        scaled.values.map(|v| (i64::from(v) * 200 + scale) / (2 * scale)),
        scaled.kind,
    ))
}

/// Texture-id keyed weights that sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    weights: BTreeMap<usize, f64>,
}

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

impl FusionWeights {
    pub fn new(weights: BTreeMap<usize, f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Fusion("no weights given".into()));
        }
        for (&id, &w) in &weights {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return Err(Error::Fusion(format!("weight {w} for texture {id} outside [0, 1]")));
            }
        }
        let sum: f64 = weights.values().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Fusion(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self { weights })
    }

    /// Normalises non-negative counts into weights.
    pub fn from_counts(counts: &BTreeMap<usize, usize>) -> Result<Self> {
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(Error::Fusion("all counts are zero".into()));
        }
        Self::new(
            counts
                .iter()
                .map(|(&id, &c)| (id, c as f64 / total as f64))
                .collect(),
        )
    }

    pub fn single(id: usize) -> Self {
        Self {
            weights: BTreeMap::from([(id, 1.0)]),
        }
    }

    pub fn get(&self, id: usize) -> Option<f64> {
        self.weights.get(&id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().map(|(&k, &v)| (k, v))
    }

    pub fn as_map(&self) -> &BTreeMap<usize, f64> {
        &self.weights
    }

    /// Parses `texture_id weight` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(id), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Format(format!("weights line {}: expected `id weight`", n + 1)));
            };
            let id: usize = id
                .parse()
                .map_err(|_| Error::Format(format!("weights line {}: bad texture id `{id}`", n + 1)))?;
            let w: f64 = w
                .parse()
                .map_err(|_| Error::Format(format!("weights line {}: bad weight `{w}`", n + 1)))?;
            if weights.insert(id, w).is_some() {
                return Err(Error::Format(format!("weights line {}: duplicate texture {id}", n + 1)));
            }
        }
        Self::new(weights)
    }

    pub fn to_text(&self) -> String {
        self.weights
            .iter()
            .map(|(id, w)| format!("{id} {w}\n"))
            .collect()
    }
}

/// Weighted average of per-texture tables, rounded half-up and clamped to `1..=255`.
///
/// Every weighted texture must have a table and vice versa.
pub fn fuse(tables: &BTreeMap<usize, QuantTable>, weights: &FusionWeights) -> Result<QuantTable> {
    let Some(first) = tables.values().next() else {
        return Err(Error::Fusion("no tables to fuse".into()));
    };
    if tables.values().any(|t| t.kind != first.kind) {
        return Err(Error::Fusion("tables mix luminance and chrominance".into()));
    }
    if tables.len() != weights.weights.len() || tables.keys().any(|id| !weights.weights.contains_key(id)) {
        return Err(Error::Fusion(format!(
            "table ids {:?} do not match weight ids {:?}",
            tables.keys().collect::<Vec<_>>(),
            weights.weights.keys().collect::<Vec<_>>()
        )));
    }
    let mut acc = [0f64; 64];
    for (id, table) in tables {
        let w = weights.weights[id];
        for (a, &v) in acc.iter_mut().zip(table.values.iter()) {
            *a += f64::from(v) * w;
        }
    }
    Ok(QuantTable::from_clamped(acc.map(|v| (v + 0.5).floor() as i64), first.kind))
}

/// A table plus the quality it is expressed at, as stored in table files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableFile {
    pub table: QuantTable,
    pub quality: u8,
}

impl TableFile {
    pub fn new(table: QuantTable, quality: u8) -> Result<Self> {
        scale_factor(quality)?;
        Ok(Self { table, quality })
    }

    /// Re-expresses the table at another quality via the base-table domain.
    pub fn at_quality(&self, quality: u8) -> Result<QuantTable> {
        if quality == self.quality {
            return Ok(self.table);
        }
        scale_table(&unscale_table(&self.table, self.quality)?, quality)
    }

    /// `qtable <kind> quality=<Q>` followed by 8 rows of 8 integers.
    pub fn to_text(&self) -> String {
        let mut s = format!("qtable {} quality={}\n", self.table.kind, self.quality);
        for row in self.table.values.chunks(8) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:3}")).collect();
            s.push_str(line.join(" ").trim_start());
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty table file".into()))?;
        let mut head = header.split_whitespace();
        if head.next() != Some("qtable") {
            return Err(Error::Format(format!("bad table header `{header}`")));
        }
        let kind: ComponentKind = head
            .next()
            .ok_or_else(|| Error::Format("table header lacks component kind".into()))?
            .parse()?;
        let quality = head
            .next()
            .and_then(|t| t.strip_prefix("quality="))
            .and_then(|q| q.parse::<u8>().ok())
            .ok_or_else(|| Error::Format(format!("table header lacks quality=<1..100>: `{header}`")))?;
        let mut values = [0u16; 64];
        let mut rows = 0;
        for line in lines {
            if rows == 8 {
                return Err(Error::Format("table has more than 8 rows".into()));
            }
            let row: Vec<u16> = line
                .split_whitespace()
                .map(|t| t.parse::<u16>().map_err(|_| Error::Format(format!("bad table value `{t}`"))))
                .collect::<Result<_>>()?;
            if row.len() != 8 {
                return Err(Error::Format(format!("table row {} has {} values", rows + 1, row.len())));
            }
            values[rows * 8..rows * 8 + 8].copy_from_slice(&row);
            rows += 1;
        }
        if rows != 8 {
            return Err(Error::Format(format!("table has {rows} rows, expected 8")));
        }
        let table = QuantTable::new(values, kind).map_err(|e| Error::Format(e.to_string()))?;
        Self::new(table, quality)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lum(values: [u8; 64]) -> QuantTable {
        QuantTable::from_u8(values, ComponentKind::Luminance).unwrap()
    }

    #[test]
    fn scale_factor_reference_points() {
        assert_eq!(scale_factor(50).unwrap().scale_percent, 100);
        assert_eq!(scale_factor(95).unwrap().scale_percent, 10);
        assert_eq!(scale_factor(25).unwrap().scale_percent, 200);
        assert_eq!(scale_factor(95).unwrap().factor(), 0.1);
        assert_eq!(scale_factor(1).unwrap().scale_percent, 5000);
        assert_eq!(scale_factor(100).unwrap().scale_percent, 0);
        assert!(matches!(scale_factor(0), Err(Error::InvalidArgument(_))));
        assert!(scale_factor(101).is_err());
    }

    #[test]
    fn scale_table_dc_at_q95() {
        let (l, _) = standard_tables();
        assert_eq!(scale_table(&l, 95).unwrap().get(0), 2);
        assert_eq!(scale_table(&l, 50).unwrap(), l);
        assert!(scale_table(&l, 100).unwrap().values().iter().all(|&v| v == 1));
        assert!(scale_table(&l, 1).unwrap().values().iter().all(|&v| v == 255));
    }

    #[test]
    fn unscale_examples() {
        let t = QuantTable::uniform(2, ComponentKind::Luminance).unwrap();
        assert_eq!(unscale_table(&t, 95).unwrap().get(0), 20);
        let (l, _) = standard_tables();
        assert_eq!(unscale_table(&l, 50).unwrap(), l);
        assert!(matches!(unscale_table(&l, 100), Err(Error::DegenerateScale(100))));
    }

    #[test]
    fn standard_table_corners() {
        let (l, c) = standard_tables();
        assert_eq!(&l.values()[..8], &[16, 11, 10, 16, 24, 40, 51, 61]);
        assert_eq!(c.get(0), 17);
        assert_eq!(l.kind(), ComponentKind::Luminance);
        assert_eq!(c.kind(), ComponentKind::Chrominance);
    }

    #[test]
    fn fuse_examples() {
        let a = QuantTable::uniform(16, ComponentKind::Luminance).unwrap();
        let b = QuantTable::uniform(32, ComponentKind::Luminance).unwrap();
        let tables = BTreeMap::from([(0, a), (1, b)]);
        let w = FusionWeights::new(BTreeMap::from([(0, 0.6), (1, 0.4)])).unwrap();
        assert!(fuse(&tables, &w).unwrap().values().iter().all(|&v| v == 22));

        let (l, _) = standard_tables();
        let single = BTreeMap::from([(7, l)]);
        assert_eq!(fuse(&single, &FusionWeights::single(7)).unwrap(), l);
    }

    #[test]
    fn fuse_rounds_half_up() {
        let a = QuantTable::uniform(1, ComponentKind::Luminance).unwrap();
        let b = QuantTable::uniform(2, ComponentKind::Luminance).unwrap();
        let w = FusionWeights::new(BTreeMap::from([(0, 0.5), (1, 0.5)])).unwrap();
        let t = fuse(&BTreeMap::from([(0, a), (1, b)]), &w).unwrap();
        assert_eq!(t.get(0), 2);
    }

    #[test]
    fn fuse_errors() {
        let a = QuantTable::uniform(16, ComponentKind::Luminance).unwrap();
        let w = FusionWeights::single(0);
        assert!(matches!(fuse(&BTreeMap::new(), &w), Err(Error::Fusion(_))));
        assert!(fuse(&BTreeMap::from([(1, a)]), &w).is_err());
        let c = QuantTable::uniform(16, ComponentKind::Chrominance).unwrap();
        let w2 = FusionWeights::new(BTreeMap::from([(0, 0.5), (1, 0.5)])).unwrap();
        assert!(fuse(&BTreeMap::from([(0, a), (1, c)]), &w2).is_err());
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(FusionWeights::new(BTreeMap::from([(0, 0.5), (1, 0.4)])).is_err());
        assert!(FusionWeights::new(BTreeMap::from([(0, 1.5), (1, -0.5)])).is_err());
        assert!(FusionWeights::new(BTreeMap::new()).is_err());
        let w = FusionWeights::parse("# weights\n0 0.25\n3 0.75\n").unwrap();
        assert_eq!(w.get(3), Some(0.75));
        assert_eq!(FusionWeights::parse(&w.to_text()).unwrap(), w);
        assert!(FusionWeights::parse("0 0.5\n0 0.5\n").is_err());
        let counts = BTreeMap::from([(0, 3usize), (2, 1)]);
        assert_eq!(FusionWeights::from_counts(&counts).unwrap().get(2), Some(0.25));
    }

    #[test]
    fn table_text_format() {
        let (l, _) = standard_tables();
        let file = TableFile::new(l, 50).unwrap();
        let text = file.to_text();
        assert!(text.starts_with("qtable luminance quality=50\n16  11  10  16  24  40  51  61\n"));
        assert_eq!(TableFile::parse(&text).unwrap(), file);
        assert!(TableFile::parse("qtable luminance quality=50\n1 2 3\n").is_err());
        assert!(TableFile::parse("qtable purple quality=50\n").is_err());
        let zero = text.replacen("16 ", "0 ", 1);
        assert!(TableFile::parse(&zero).is_err());
    }

    #[test]
    fn at_quality_goes_through_base_domain() {
        let (l, _) = standard_tables();
        let at95 = TableFile::new(scale_table(&l, 95).unwrap(), 95).unwrap();
        assert_eq!(at95.at_quality(95).unwrap(), scale_table(&l, 95).unwrap());
        let at50 = TableFile::new(l, 50).unwrap();
        assert_eq!(at50.at_quality(75).unwrap(), scale_table(&l, 75).unwrap());
    }

    fn any_table() -> impl Strategy<Value = QuantTable> {
        proptest::array::uniform32(1u8..=255)
            .prop_flat_map(|a| proptest::array::uniform32(1u8..=255).prop_map(move |b| (a, b)))
            .prop_map(|(a, b)| {
                let mut v = [0u8; 64];
                v[..32].copy_from_slice(&a);
                v[32..].copy_from_slice(&b);
                lum(v)
            })
    }

    proptest! {
        #[test]
        fn scaling_is_bounded_and_monotone(t in any_table(), q1 in 1u8..=100, q2 in 1u8..=100) {
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let a = scale_table(&t, lo).unwrap();
            let b = scale_table(&t, hi).unwrap();
            for i in 0..64 {
                prop_assert!(a.get(i) >= b.get(i));
                prop_assert!(a.get(i) >= 1);
            }
            prop_assert_eq!(scale_table(&t, 50).unwrap(), t);
        }

        #[test]
        fn scale_after_unscale_is_fixed_point_where_unclamped(t in any_table(), q in 51u8..=99) {
            let base = unscale_table(&t, q).unwrap();
            let again = scale_table(&base, q).unwrap();
            let scale = scale_factor(q).unwrap().scale_percent as f64;
            for i in 0..64 {
                let exact = f64::from(t.get(i)) * 100.0 / scale;
                if exact <= 255.0 {
                    prop_assert_eq!(again.get(i), t.get(i), "entry {} of {:?}", i, t);
                }
            }
        }

        #[test]
        fn fusion_is_convex(a in any_table(), b in any_table(), c in any_table(), w0 in 0.0f64..1.0, split in 0.0f64..1.0) {
            let w1 = (1.0 - w0) * split;
            let w2 = 1.0 - w0 - w1;
            let w = FusionWeights::new(BTreeMap::from([(0, w0), (1, w1), (2, w2)])).unwrap();
            let fused = fuse(&BTreeMap::from([(0, a), (1, b), (2, c)]), &w).unwrap();
            for i in 0..64 {
                let lo = a.get(i).min(b.get(i)).min(c.get(i));
                let hi = a.get(i).max(b.get(i)).max(c.get(i));
                prop_assert!(u16::from(fused.get(i)) + 1 >= u16::from(lo) && u16::from(fused.get(i)) <= u16::from(hi) + 1);
            }
            let same = fuse(&BTreeMap::from([(0, a), (1, a), (2, a)]), &w).unwrap();
            prop_assert_eq!(same, a);
        }

        #[test]
        fn table_file_round_trip(t in any_table(), q in 1u8..=100) {
            let f = TableFile::new(t, q).unwrap();
            prop_assert_eq!(TableFile::parse(&f.to_text()).unwrap(), f);
        }
    }
}
