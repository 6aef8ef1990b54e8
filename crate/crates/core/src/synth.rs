//! Seeded synthetic cohorts with known structure.
//!
//! Planted cohorts put every customer of a group on (or within `jitter`
//! of) an integer code vector, so the clustering that should be found is
//! known exactly. Survey cohorts draw correlated Likert items around a
//! chosen location.

use std::collections::HashSet;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data_model::{RfmRecord, SurveyResponse, TransactionEvent, LIKERT_ITEMS};
use crate::error::{Error, Result};
use crate::pyramid::Point;
use crate::rfm_engine::{Dimension, RfmCode, ScoringRuleSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedGroup {
    /// `(r, f, m)` codes.
    pub center: [u8; 3],
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub groups: Vec<PlantedGroup>,
    /// Per-coordinate uniform noise half-width, below 0.5.
    pub jitter: f64,
    pub seed: u64,
    #[serde(default = "default_prefix")]
    pub id_prefix: String,
}

fn default_prefix() -> String {
    "c".into()
}

fn groups(centers: [[u8; 3]; 4], counts: [usize; 4]) -> Vec<PlantedGroup> {
    centers
        .into_iter()
        .zip(counts)
        .map(|(center, count)| PlantedGroup { center, count })
        .collect()
}

/// Cluster sizes of the computer company's pyramid.
pub const COMPUTER_COUNTS: [usize; 4] = [505, 581, 318, 196];
/// Cluster sizes of the automotive company's pyramid.
pub const AUTOMOTIVE_COUNTS: [usize; 4] = [825, 1212, 1690, 875];

/// Reference k-means centres and sizes for the computer company, in cluster order.
pub const COMPUTER_CENTROIDS: [(Point, usize); 4] = [
    ([4.59604, 2.394059, 1.994059], 505),
    ([2.487091, 2.056799, 2.003442], 581),
    ([3.421384, 2.22327, 4.820755], 318),
    ([3.770408, 4.484694, 2.591837], 196),
];

/// Reference k-means centres and sizes for the automotive company.
pub const AUTOMOTIVE_CENTROIDS: [(Point, usize); 4] = [
    ([4.658182, 3.09697, 1.452121], 825),
    ([2.395215, 1.353135, 1.223597], 1212),
    ([4.295266, 4.969231, 4.881065], 1690),
    ([3.393143, 2.156571, 5.0], 875),
];

impl PlantedSpec {
    /// Four groups at the nearest integer codes to the computer company's
    /// centroids, in the same cluster order (Iron, Lead, Gold, Platinum).
    pub fn computer(seed: u64) -> Self {
        Self {
            groups: groups(
                [[5, 2, 2], [2, 2, 2], [3, 2, 5], [4, 4, 3]],
                COMPUTER_COUNTS,
            ),
            jitter: 0.0,
            seed,
            id_prefix: "cmp".into(),
        }
    }

    /// As [`PlantedSpec::computer`] for the automotive company (Iron, Lead,
    /// Platinum, Gold).
    pub fn automotive(seed: u64) -> Self {
        Self {
            groups: groups(
                [[5, 3, 1], [2, 1, 1], [4, 5, 5], [3, 2, 5]],
                AUTOMOTIVE_COUNTS,
            ),
            jitter: 0.0,
            seed,
            id_prefix: "aut".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.jitter) {
            return Err(Error::InvalidConfig(format!(
                "jitter {} must lie in [0, 0.5)",
                self.jitter
            )));
        }
        let mut seen = HashSet::new();
        for g in &self.groups {
            if g.count == 0 {
                return Err(Error::InvalidConfig(
                    "group count must be at least 1".into(),
                ));
            }
            if g.center.iter().any(|c| !(1..=5).contains(c)) {
                return Err(Error::InvalidConfig(format!(
                    "center {:?} outside 1..5",
                    g.center
                )));
            }
            if !seen.insert(g.center) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate center {:?}",
                    g.center
                )));
            }
        }
        Ok(())
    }
}

/// Planted customers in shuffled order, with their true group.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCohort {
    pub codes: Vec<RfmCode>,
    /// Jittered coordinates; equal to the codes when jitter is zero.
    pub points: Vec<Point>,
    pub groups: Vec<usize>,
}

pub fn plant_clusters(spec: &PlantedSpec) -> Result<PlantedCohort> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut members: Vec<(usize, Point)> = Vec::new();
    for (g, group) in spec.groups.iter().enumerate() {
        let center = group.center.map(f64::from);
        for _ in 0..group.count {
            let p = if spec.jitter > 0.0 {
                center.map(|c| (c + rng.random_range(-spec.jitter..spec.jitter)).clamp(1.0, 5.0))
            } else {
                center
            };
            members.push((g, p));
        }
    }
    members.shuffle(&mut rng);

    let width = members.len().to_string().len().max(5);
    let mut cohort = PlantedCohort {
        codes: Vec::with_capacity(members.len()),
        points: Vec::with_capacity(members.len()),
        groups: Vec::with_capacity(members.len()),
    };
    for (i, (g, p)) in members.into_iter().enumerate() {
        let [r, f, m] = spec.groups[g].center;
        let id = format!("{}{:0width$}", spec.id_prefix, i + 1);
        cohort.codes.push(RfmCode::new(id, r, f, m)?);
        cohort.points.push(p);
        cohort.groups.push(g);
    }
    Ok(cohort)
}

/// Integer codes whose per-group means reproduce fractional centroids to
/// within half a customer per coordinate. Groups are emitted in order.
pub fn centroid_shaped(
    centroids: &[(Point, usize)],
    seed: u64,
    id_prefix: &str,
) -> Result<Vec<RfmCode>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut next_id = 1usize;
    for &(centroid, count) in centroids {
        if centroid.iter().any(|c| !(1.0..=5.0).contains(c)) {
            return Err(Error::InvalidConfig(format!(
                "centroid {centroid:?} outside [1, 5]"
            )));
        }
        let columns: Vec<Vec<u8>> = centroid
            .iter()
            .map(|&mu| {
                let low = mu.floor();
                let n_high = ((mu - low) * count as f64).round() as usize;
                let mut col: Vec<u8> = (0..count)
                    .map(|i| (low as u8 + u8::from(i < n_high)).min(5))
                    .collect();
                col.shuffle(&mut rng);
                col
            })
            .collect();
        let [rs, fs, ms] = &columns[..] else {
            unreachable!("three dimensions")
        };
        for ((&r, &f), &m) in rs.iter().zip(fs).zip(ms) {
            out.push(RfmCode::new(format!("{id_prefix}{next_id:05}"), r, f, m)?);
            next_id += 1;
        }
    }
    Ok(out)
}

/// Inclusive value range of the band carrying `code`. Open upper ends are
/// capped at twice the lower bound.
fn band_range(rules: &ScoringRuleSet, dim: Dimension, code: u8) -> Result<(u64, u64)> {
    let band = rules
        .bands(dim)
        .iter()
        .find(|b| b.code == code)
        .ok_or_else(|| Error::InvalidInput(format!("no {dim} band for code {code}")))?;
    let mut lo = match band.lower {
        None => 0,
        Some(b) if b.inclusive => b.value,
        Some(b) => b.value + 1,
    };
    if dim == Dimension::Frequency {
        lo = lo.max(1);
    }
    let hi = match band.upper {
        None => lo.saturating_mul(2).max(lo + 1),
        Some(b) if b.inclusive => b.value,
        Some(b) => b.value.saturating_sub(1),
    };
    if lo > hi {
        return Err(Error::InvalidInput(format!(
            "{dim} band for code {code} holds no admissible value"
        )));
    }
    Ok((lo, hi))
}

/// Raw RFM values that score back to `codes` under `rules`.
pub fn materialize_records(
    codes: &[RfmCode],
    rules: &ScoringRuleSet,
    seed: u64,
) -> Result<Vec<RfmRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    codes
        .iter()
        .map(|c| {
            let mut draw = |dim, code| -> Result<u64> {
                let (lo, hi) = band_range(rules, dim, code)?;
                Ok(rng.random_range(lo..=hi))
            };
            let recency = draw(Dimension::Recency, c.r_code)?;
            let frequency = draw(Dimension::Frequency, c.f_code)?;
            let monetary = draw(Dimension::Monetary, c.m_code)?;
            Ok(RfmRecord {
                customer_id: c.customer_id.clone(),
                recency_days: u32::try_from(recency)
                    .map_err(|_| Error::InvalidInput("recency too large".into()))?,
                frequency: u32::try_from(frequency)
                    .map_err(|_| Error::InvalidInput("frequency too large".into()))?,
                monetary,
            })
        })
        .collect()
}

/// A transaction log that aggregates back to `records` at `analysis_date`.
pub fn materialize_transactions(
    records: &[RfmRecord],
    analysis_date: NaiveDate,
    seed: u64,
) -> Result<Vec<TransactionEvent>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    for r in records {
        let last = analysis_date
            .checked_sub_signed(chrono::Duration::days(i64::from(r.recency_days)))
            .ok_or_else(|| Error::InvalidInput("recency reaches before the calendar".into()))?;
        let f = u64::from(r.frequency);
        let base = r.monetary / f;
        let extra = r.monetary % f;
        for i in 0..f {
            let date = if i == 0 {
                last
            } else {
                last - chrono::Duration::days(rng.random_range(0..=365))
            };
            events.push(TransactionEvent {
                customer_id: r.customer_id.clone(),
                date,
                amount: base + u64::from(i < extra),
            });
        }
    }
    events.shuffle(&mut rng);
    Ok(events)
}

/// Respondent-level spread of the latent attitude.
const RESPONDENT_SD: f64 = 0.75;
/// Item-level noise around a respondent's latent attitude.
const ITEM_SD: f64 = 0.75;

/// `n` questionnaires centred on `3 + location_shift`, clipped to 1..5.
pub fn gen_survey(
    n: usize,
    location_shift: f64,
    seed: u64,
    id_prefix: &str,
) -> Vec<SurveyResponse> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let person = Normal::new(3.0 + location_shift, RESPONDENT_SD).expect("finite parameters");
    let item = Normal::new(0.0, ITEM_SD).expect("finite parameters");
    (0..n)
        .map(|i| {
            let attitude = person.sample(&mut rng);
            let items: [u8; LIKERT_ITEMS] = std::array::from_fn(|_| {
                (attitude + item.sample(&mut rng)).round().clamp(1.0, 5.0) as u8
            });
            SurveyResponse {
                respondent_id: format!("{id_prefix}{:04}", i + 1),
                items,
            }
        })
        .collect()
}
