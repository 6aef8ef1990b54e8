//! Recency/Frequency/Monetary scoring.
//!
//! Each dimension is cut into five bands coded 1 (very low) to 5 (very
//! high). Larger monetary and frequency values earn larger codes; for
//! recency the orientation is reversed, so fewer days since the last
//! purchase earns a larger code.
//!
//! The default rule set is the expert threshold table shared by both
//! cohorts. [`derive_customer_quintiles`] builds a data-driven alternative.

use std::fmt;
use std::io::{Read, Write};

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_model::{Parsed, RfmRecord};
use crate::error::{Error, Result, RowError};

pub const BANDS_PER_DIMENSION: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bound {
    pub value: u64,
    pub inclusive: bool,
}

impl Bound {
    pub const fn inclusive(value: u64) -> Self {
        Self {
            value,
            inclusive: true,
        }
    }

    pub const fn exclusive(value: u64) -> Self {
        Self {
            value,
            inclusive: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RankLabel {
    #[serde(rename = "VH")]
    VeryHigh,
    #[serde(rename = "H")]
    High,
    #[serde(rename = "M")]
    Medium,
    #[serde(rename = "L")]
    Low,
    #[serde(rename = "VL")]
    VeryLow,
}

impl RankLabel {
    pub fn for_code(code: u8) -> Option<Self> {
        match code {
            5 => Some(Self::VeryHigh),
            4 => Some(Self::High),
            3 => Some(Self::Medium),
            2 => Some(Self::Low),
            1 => Some(Self::VeryLow),
            _ => None,
        }
    }
}

/// One scoring band. A missing bound is open-ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleBand {
    pub code: u8,
    pub rank: RankLabel,
    pub lower: Option<Bound>,
    pub upper: Option<Bound>,
}

impl RuleBand {
    pub fn new(code: u8, lower: Option<Bound>, upper: Option<Bound>) -> Self {
        Self {
            code,
            rank: RankLabel::for_code(code).unwrap_or(RankLabel::VeryLow),
            lower,
            upper,
        }
    }

    pub fn contains(&self, value: u64) -> bool {
        let above = match self.lower {
            None => true,
            Some(b) if b.inclusive => value >= b.value,
            Some(b) => value > b.value,
        };
        let below = match self.upper {
            None => true,
            Some(b) if b.inclusive => value <= b.value,
            Some(b) => value < b.value,
        };
        above && below
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Recency,
    Frequency,
    Monetary,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Self::Recency, Self::Frequency, Self::Monetary];

    /// Whether a larger raw value earns a larger code.
    pub fn ascending(self) -> bool {
        !matches!(self, Self::Recency)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Recency => "recency",
            Self::Frequency => "frequency",
            Self::Monetary => "monetary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RawRuleSet {
    monetary: Vec<RuleBand>,
    frequency: Vec<RuleBand>,
    recency: Vec<RuleBand>,
}

/// Five validated bands per dimension. Construction guarantees that every
/// non-negative value falls in exactly one band of each dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRuleSet", into = "RawRuleSet")]
pub struct ScoringRuleSet {
    monetary: Vec<RuleBand>,
    frequency: Vec<RuleBand>,
    recency: Vec<RuleBand>,
}

impl TryFrom<RawRuleSet> for ScoringRuleSet {
    type Error = Error;

    fn try_from(raw: RawRuleSet) -> Result<Self> {
        Self::new(raw.monetary, raw.frequency, raw.recency)
    }
}

impl From<ScoringRuleSet> for RawRuleSet {
    fn from(r: ScoringRuleSet) -> Self {
        Self {
            monetary: r.monetary,
            frequency: r.frequency,
            recency: r.recency,
        }
    }
}

/// Check one dimension and return its bands ordered by code, highest first.
fn validate_dimension(dim: Dimension, mut bands: Vec<RuleBand>) -> Result<Vec<RuleBand>> {
    let bad = |msg: String| Error::InvalidRules(format!("{dim}: {msg}"));
    if bands.len() != BANDS_PER_DIMENSION {
        return Err(bad(format!("expected 5 bands, got {}", bands.len())));
    }
    let mut seen = [false; BANDS_PER_DIMENSION + 1];
    for b in &bands {
        if !(1..=5).contains(&b.code) {
            return Err(bad(format!("code {} outside 1..5", b.code)));
        }
        if seen[b.code as usize] {
            return Err(bad(format!("code {} used twice", b.code)));
        }
        seen[b.code as usize] = true;
        if RankLabel::for_code(b.code) != Some(b.rank) {
            return Err(bad(format!(
                "rank {:?} does not match code {}",
                b.rank, b.code
            )));
        }
        if let (Some(lo), Some(hi)) = (b.lower, b.upper) {
            if lo.value > hi.value {
                return Err(bad(format!(
                    "code {}: lower bound above upper bound",
                    b.code
                )));
            }
        }
    }

    // Order by position on the value axis, smallest values first.
    if dim.ascending() {
        bands.sort_by_key(|b| b.code);
    } else {
        bands.sort_by_key(|b| std::cmp::Reverse(b.code));
    }

    let first = &bands[0];
    match first.lower {
        None => {}
        Some(Bound {
            value: 0,
            inclusive: true,
        }) => {}
        Some(_) => {
            return Err(bad(format!(
                "code {} leaves small values uncovered",
                first.code
            )))
        }
    }
    let last = &bands[BANDS_PER_DIMENSION - 1];
    if last.upper.is_some() {
        return Err(bad(format!(
            "code {} leaves large values uncovered",
            last.code
        )));
    }
    for pair in bands.windows(2) {
        let (lo_band, hi_band) = (&pair[0], &pair[1]);
        match (lo_band.upper, hi_band.lower) {
            (Some(a), Some(b)) if a.value == b.value && a.inclusive != b.inclusive => {}
            (Some(a), Some(b)) if a.value == b.value => {
                return Err(bad(format!(
                    "codes {} and {} {} at {}",
                    lo_band.code,
                    hi_band.code,
                    if a.inclusive {
                        "overlap"
                    } else {
                        "leave a gap"
                    },
                    a.value
                )))
            }
            _ => {
                return Err(bad(format!(
                    "codes {} and {} are not adjacent",
                    lo_band.code, hi_band.code
                )))
            }
        }
    }

    bands.sort_by_key(|b| std::cmp::Reverse(b.code));
    Ok(bands)
}

impl ScoringRuleSet {
    pub fn new(
        monetary: Vec<RuleBand>,
        frequency: Vec<RuleBand>,
        recency: Vec<RuleBand>,
    ) -> Result<Self> {
        Ok(Self {
            monetary: validate_dimension(Dimension::Monetary, monetary)?,
            frequency: validate_dimension(Dimension::Frequency, frequency)?,
            recency: validate_dimension(Dimension::Recency, recency)?,
        })
    }

    /// The shared expert threshold table (monetary in Rial, recency in days).
    pub fn expert_default() -> Self {
        use Bound as B;
        let ascending = |cuts: [u64; 4]| {
            vec![
                RuleBand::new(5, Some(B::inclusive(cuts[3])), None),
                RuleBand::new(4, Some(B::inclusive(cuts[2])), Some(B::exclusive(cuts[3]))),
                RuleBand::new(3, Some(B::inclusive(cuts[1])), Some(B::exclusive(cuts[2]))),
                RuleBand::new(2, Some(B::inclusive(cuts[0])), Some(B::exclusive(cuts[1]))),
                RuleBand::new(1, None, Some(B::exclusive(cuts[0]))),
            ]
        };
        let monetary = ascending([50_000_000, 250_000_000, 500_000_000, 750_000_000]);
        let frequency = ascending([5, 15, 30, 50]);
        let recency = vec![
            RuleBand::new(5, None, Some(B::inclusive(7))),
            RuleBand::new(4, Some(B::exclusive(7)), Some(B::inclusive(14))),
            RuleBand::new(3, Some(B::exclusive(14)), Some(B::inclusive(30))),
            RuleBand::new(2, Some(B::exclusive(30)), Some(B::inclusive(90))),
            RuleBand::new(1, Some(B::exclusive(90)), None),
        ];
        Self::new(monetary, frequency, recency).expect("expert table is a valid rule set")
    }

    pub fn from_json<R: Read>(source: R) -> Result<Self> {
        Ok(serde_json::from_reader(source)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("rule set serializes")
    }

    /// Bands for one dimension, ordered from code 5 down to code 1.
    pub fn bands(&self, dim: Dimension) -> &[RuleBand] {
        match dim {
            Dimension::Monetary => &self.monetary,
            Dimension::Frequency => &self.frequency,
            Dimension::Recency => &self.recency,
        }
    }

    pub fn code_for(&self, dim: Dimension, value: u64) -> u8 {
        self.bands(dim)
            .iter()
            .find(|b| b.contains(value))
            .map(|b| b.code)
            .expect("validated rule sets cover every value")
    }
}

impl Default for ScoringRuleSet {
    fn default() -> Self {
        Self::expert_default()
    }
}

/// Per-dimension codes for one customer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RfmCode {
    pub customer_id: String,
    pub r_code: u8,
    pub f_code: u8,
    pub m_code: u8,
    pub combined: u8,
}

impl RfmCode {
    pub fn new(customer_id: impl Into<String>, r_code: u8, f_code: u8, m_code: u8) -> Result<Self> {
        for c in [r_code, f_code, m_code] {
            if !(1..=5).contains(&c) {
                return Err(Error::InvalidInput(format!("code {c} outside 1..5")));
            }
        }
        Ok(Self {
            customer_id: customer_id.into(),
            r_code,
            f_code,
            m_code,
            combined: r_code + f_code + m_code,
        })
    }

    /// `(r, f, m)` as a point for clustering.
    pub fn point(&self) -> [f64; 3] {
        [
            f64::from(self.r_code),
            f64::from(self.f_code),
            f64::from(self.m_code),
        ]
    }
}

pub fn score_record(record: &RfmRecord, rules: &ScoringRuleSet) -> RfmCode {
    let r = rules.code_for(Dimension::Recency, u64::from(record.recency_days));
    let f = rules.code_for(Dimension::Frequency, u64::from(record.frequency));
    let m = rules.code_for(Dimension::Monetary, record.monetary);
    RfmCode {
        customer_id: record.customer_id.clone(),
        r_code: r,
        f_code: f,
        m_code: m,
        combined: r + f + m,
    }
}

pub fn score_cohort(records: &[RfmRecord], rules: &ScoringRuleSet) -> Vec<RfmCode> {
    records.par_iter().map(|r| score_record(r, rules)).collect()
}

/// A data-driven rule set plus any degeneracy warnings raised while building it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuintileRules {
    pub rules: ScoringRuleSet,
    pub warnings: Vec<String>,
}

/// Cut points at the 20/40/60/80th order statistics. Values equal to a cut
/// always land in the bucket above it, so ties are never split.
fn quintile_cuts(sorted: &[u64]) -> [u64; 4] {
    let n = sorted.len();
    std::array::from_fn(|j| {
        let idx = (2 * (j + 1) * n + 5) / 10;
        sorted[idx.min(n - 1)]
    })
}

fn quintile_bands(dim: Dimension, cuts: [u64; 4]) -> Vec<RuleBand> {
    // Position 0 is the lowest-valued bucket.
    let code_at = |pos: usize| -> u8 {
        if dim.ascending() {
            pos as u8 + 1
        } else {
            5 - pos as u8
        }
    };
    (0..BANDS_PER_DIMENSION)
        .map(|pos| {
            let lower = (pos > 0).then(|| Bound::inclusive(cuts[pos - 1]));
            let upper = (pos < 4).then(|| Bound::exclusive(cuts[pos]));
            RuleBand::new(code_at(pos), lower, upper)
        })
        .collect()
}

/// Build per-dimension bands holding as close to a fifth of the customers
/// each as ties allow.
pub fn derive_customer_quintiles(records: &[RfmRecord]) -> Result<QuintileRules> {
    if records.len() < BANDS_PER_DIMENSION {
        return Err(Error::InsufficientQuintileData(records.len()));
    }
    let mut warnings = Vec::new();
    let mut bands_for = |dim: Dimension| -> Vec<RuleBand> {
        let mut values: Vec<u64> = records
            .iter()
            .map(|r| match dim {
                Dimension::Recency => u64::from(r.recency_days),
                Dimension::Frequency => u64::from(r.frequency),
                Dimension::Monetary => r.monetary,
            })
            .collect();
        values.sort_unstable();
        let bands = quintile_bands(dim, quintile_cuts(&values));
        let empty = bands
            .iter()
            .filter(|b| !values.iter().any(|&v| b.contains(v)))
            .count();
        if empty > 0 {
            warnings.push(format!(
                "{dim}: {empty} of 5 quintile buckets are empty because of tied values"
            ));
        }
        bands
    };
    let monetary = bands_for(Dimension::Monetary);
    let frequency = bands_for(Dimension::Frequency);
    let recency = bands_for(Dimension::Recency);
    Ok(QuintileRules {
        rules: ScoringRuleSet::new(monetary, frequency, recency)?,
        warnings,
    })
}

const SCORED_HEADER: [&str; 5] = ["customer_id", "r_code", "f_code", "m_code", "combined"];

pub fn write_scored<W: Write>(codes: &[RfmCode], sink: W) -> Result<()> {
    let mut w = WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(SCORED_HEADER)?;
    for c in codes {
        w.write_record([
            c.customer_id.clone(),
            c.r_code.to_string(),
            c.f_code.to_string(),
            c.m_code.to_string(),
            c.combined.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a `scored.csv` back. `combined` must equal the sum of the codes.
pub fn parse_scored<R: Read>(source: R) -> Result<Parsed<RfmCode>> {
    let mut rdr = ReaderBuilder::new()
        .flexible(true)
        .trim(Trim::All)
        .from_reader(source);
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = SCORED_HEADER
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut rec = StringRecord::new();
    while rdr.read_record(&mut rec)? {
        let line = rec.position().map_or(0, |p| p.line());
        let parsed = (|| -> std::result::Result<RfmCode, String> {
            if rec.len() != headers.len() {
                return Err(format!("wrong arity: expected {} fields", headers.len()));
            }
            let code = |i: usize| -> std::result::Result<u8, String> {
                rec[idx[i]]
                    .parse::<u8>()
                    .map_err(|_| format!("invalid {} `{}`", SCORED_HEADER[i], &rec[idx[i]]))
            };
            let c = RfmCode::new(&rec[idx[0]], code(1)?, code(2)?, code(3)?)
                .map_err(|e| e.to_string())?;
            if code(4)? != c.combined {
                return Err("combined is not r_code + f_code + m_code".into());
            }
            Ok(c)
        })();
        match parsed {
            Ok(c) => rows.push(c),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    Ok(Parsed { rows, errors })
}
