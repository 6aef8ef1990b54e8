//! Domain records and CSV ingestion.
//!
//! Three file shapes are understood, all with a header row:
//!
//! * `transactions.csv`: `customer_id,date,amount`
//! * `rfm.csv`: `customer_id,recency_days,frequency,monetary`
//! * `survey.csv`: `respondent_id,q1,q2,q3,q4,q5`
//!
//! Dates are ISO-8601 (`YYYY-MM-DD`). Amounts are whole currency units.
//! Malformed rows do not abort a parse; they are collected as [`RowError`]s
//! and the caller decides whether to continue ([`Parsed::into_strict`]).

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};

pub const LIKERT_ITEMS: usize = 5;
pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionEvent {
    pub customer_id: String,
    pub date: NaiveDate,
    pub amount: u64,
}

/// Raw behavioural values for one customer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfmRecord {
    pub customer_id: String,
    pub recency_days: u32,
    pub frequency: u32,
    pub monetary: u64,
}

/// One completed five-item Likert questionnaire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub respondent_id: String,
    pub items: [u8; LIKERT_ITEMS],
}

impl SurveyResponse {
    pub fn new(respondent_id: impl Into<String>, items: [u8; LIKERT_ITEMS]) -> Result<Self> {
        if let Some(bad) = items.iter().find(|v| !(1..=5).contains(*v)) {
            return Err(Error::InvalidInput(format!("Likert out of range: {bad}")));
        }
        Ok(Self {
            respondent_id: respondent_id.into(),
            items,
        })
    }

    /// Mean of the five items.
    pub fn mean(&self) -> f64 {
        self.items.iter().map(|&v| f64::from(v)).sum::<f64>() / LIKERT_ITEMS as f64
    }
}

/// Everything known about one cohort (one company or industry).
#[derive(Debug, Clone, PartialEq)]
pub struct CohortDataset {
    pub cohort_name: String,
    pub rfm_records: Vec<RfmRecord>,
    pub survey: Option<Vec<SurveyResponse>>,
    pub analysis_date: NaiveDate,
}

impl CohortDataset {
    pub fn new(
        cohort_name: impl Into<String>,
        rfm_records: Vec<RfmRecord>,
        survey: Option<Vec<SurveyResponse>>,
        analysis_date: NaiveDate,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rfm_records.len());
        for r in &rfm_records {
            if !seen.insert(r.customer_id.as_str()) {
                return Err(Error::DuplicateCustomer(r.customer_id.clone()));
            }
        }
        Ok(Self {
            cohort_name: cohort_name.into(),
            rfm_records,
            survey,
            analysis_date,
        })
    }
}

/// Column names to read from a transactions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionSchema {
    pub customer_id: String,
    pub date: String,
    pub amount: String,
}

impl Default for TransactionSchema {
    fn default() -> Self {
        Self {
            customer_id: "customer_id".into(),
            date: "date".into(),
            amount: "amount".into(),
        }
    }
}

/// Rows that parsed cleanly plus the diagnostics for those that did not.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub rows: Vec<T>,
    pub errors: Vec<RowError>,
}

impl<T> Parsed<T> {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }

    /// Promote any row error to a fatal one.
    pub fn into_strict(self) -> Result<Vec<T>> {
        if self.errors.is_empty() {
            Ok(self.rows)
        } else {
            Err(Error::Rows(self.errors))
        }
    }
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(source)
}

fn column_index(headers: &StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Walk every data row, handing each to `row` together with its line number.
fn for_each_row<R, F>(source: R, required: &[&str], mut row: F) -> Result<Vec<RowError>>
where
    R: Read,
    F: FnMut(&StringRecord, &[usize], u64) -> std::result::Result<(), String>,
{
    let mut rdr = reader(source);
    let headers = rdr.headers()?.clone();
    let idx = required
        .iter()
        .map(|name| column_index(&headers, name))
        .collect::<Result<Vec<_>>>()?;
    let mut errors = Vec::new();
    let mut record = StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = line_of(&record);
                if record.len() != headers.len() {
                    errors.push(RowError {
                        line,
                        message: format!(
                            "wrong arity: expected {} fields, got {}",
                            headers.len(),
                            record.len()
                        ),
                    });
                    continue;
                }
                if let Err(message) = row(&record, &idx, line) {
                    errors.push(RowError { line, message });
                }
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) {
                    errors.push(RowError {
                        line,
                        message: "invalid utf-8".into(),
                    });
                } else {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(errors)
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, DATE_FORMAT).map_err(|_| format!("invalid date `{s}`"))
}

fn parse_amount(s: &str) -> std::result::Result<u64, String> {
    match s.parse::<u64>() {
        Ok(v) => Ok(v),
        Err(_) if s.parse::<i128>().is_ok_and(|v| v < 0) => Err(format!("negative amount `{s}`")),
        Err(_) => Err(format!("invalid amount `{s}`")),
    }
}

fn parse_id(s: &str, what: &str) -> std::result::Result<String, String> {
    if s.is_empty() {
        Err(format!("empty {what}"))
    } else {
        Ok(s.to_string())
    }
}

pub fn parse_transactions<R: Read>(
    source: R,
    schema: &TransactionSchema,
) -> Result<Parsed<TransactionEvent>> {
    let mut rows = Vec::new();
    let errors = for_each_row(
        source,
        &[&schema.customer_id, &schema.date, &schema.amount],
        |rec, idx, _| {
            let customer_id = parse_id(&rec[idx[0]], "customer_id")?;
            let date = parse_date(&rec[idx[1]])?;
            let amount = parse_amount(&rec[idx[2]])?;
            rows.push(TransactionEvent {
                customer_id,
                date,
                amount,
            });
            Ok(())
        },
    )?;
    Ok(Parsed { rows, errors })
}

/// Parse a pre-aggregated `rfm.csv`. Duplicate customer ids are row errors.
pub fn parse_rfm<R: Read>(source: R) -> Result<Parsed<RfmRecord>> {
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    let errors = for_each_row(
        source,
        &["customer_id", "recency_days", "frequency", "monetary"],
        |rec, idx, _| {
            let customer_id = parse_id(&rec[idx[0]], "customer_id")?;
            let recency_days = rec[idx[1]]
                .parse::<u32>()
                .map_err(|_| format!("invalid recency_days `{}`", &rec[idx[1]]))?;
            let frequency = rec[idx[2]]
                .parse::<u32>()
                .map_err(|_| format!("invalid frequency `{}`", &rec[idx[2]]))?;
            if frequency == 0 {
                return Err("frequency must be at least 1".into());
            }
            let monetary = parse_amount(&rec[idx[3]])?;
            if !seen.insert(customer_id.clone()) {
                return Err(format!("duplicate customer_id `{customer_id}`"));
            }
            rows.push(RfmRecord {
                customer_id,
                recency_days,
                frequency,
                monetary,
            });
            Ok(())
        },
    )?;
    Ok(Parsed { rows, errors })
}

pub fn parse_survey<R: Read>(source: R) -> Result<Parsed<SurveyResponse>> {
    let mut rows = Vec::new();
    let errors = for_each_row(
        source,
        &["respondent_id", "q1", "q2", "q3", "q4", "q5"],
        |rec, idx, _| {
            let respondent_id = parse_id(&rec[idx[0]], "respondent_id")?;
            let mut items = [0u8; LIKERT_ITEMS];
            for (slot, &col) in items.iter_mut().zip(&idx[1..]) {
                let raw = &rec[col];
                let v: i64 = raw
                    .parse()
                    .map_err(|_| format!("invalid Likert value `{raw}`"))?;
                if !(1..=5).contains(&v) {
                    return Err(format!("Likert out of range `{raw}`"));
                }
                *slot = v as u8;
            }
            rows.push(SurveyResponse {
                respondent_id,
                items,
            });
            Ok(())
        },
    )?;
    Ok(Parsed { rows, errors })
}

/// Whole days from `last_purchase` to `analysis_date`.
pub fn compute_recency_days(last_purchase: NaiveDate, analysis_date: NaiveDate) -> Result<u32> {
    let days = (analysis_date - last_purchase).num_days();
    if days < 0 {
        return Err(Error::FuturePurchase {
            purchase: last_purchase,
            analysis: analysis_date,
        });
    }
    u32::try_from(days).map_err(|_| Error::InvalidInput(format!("recency of {days} days")))
}

/// Group transactions by customer into one [`RfmRecord`] each, sorted by id.
pub fn aggregate_to_rfm(
    events: &[TransactionEvent],
    analysis_date: NaiveDate,
) -> Result<Vec<RfmRecord>> {
    struct Acc {
        last: NaiveDate,
        count: u32,
        total: u64,
    }

    let mut by_customer: BTreeMap<&str, Acc> = BTreeMap::new();
    for ev in events {
        if ev.date > analysis_date {
            return Err(Error::FuturePurchase {
                purchase: ev.date,
                analysis: analysis_date,
            });
        }
        let acc = by_customer.entry(&ev.customer_id).or_insert(Acc {
            last: ev.date,
            count: 0,
            total: 0,
        });
        acc.last = acc.last.max(ev.date);
        acc.count = acc
            .count
            .checked_add(1)
            .ok_or_else(|| Error::InvalidInput("frequency overflow".into()))?;
        acc.total = acc.total.checked_add(ev.amount).ok_or_else(|| {
            Error::InvalidInput(format!("monetary overflow for `{}`", ev.customer_id))
        })?;
    }

    by_customer
        .into_iter()
        .map(|(id, acc)| {
            Ok(RfmRecord {
                customer_id: id.to_string(),
                recency_days: compute_recency_days(acc.last, analysis_date)?,
                frequency: acc.count,
                monetary: acc.total,
            })
        })
        .collect()
}

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    WriterBuilder::new().has_headers(false).from_writer(sink)
}

pub fn write_transactions<W: Write>(events: &[TransactionEvent], sink: W) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["customer_id", "date", "amount"])?;
    for ev in events {
        w.write_record([
            ev.customer_id.as_str(),
            &ev.date.format(DATE_FORMAT).to_string(),
            &ev.amount.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rfm<W: Write>(records: &[RfmRecord], sink: W) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["customer_id", "recency_days", "frequency", "monetary"])?;
    for r in records {
        w.write_record([
            r.customer_id.as_str(),
            &r.recency_days.to_string(),
            &r.frequency.to_string(),
            &r.monetary.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_survey<W: Write>(responses: &[SurveyResponse], sink: W) -> Result<()> {
    let mut w = csv_writer(sink);
    w.write_record(["respondent_id", "q1", "q2", "q3", "q4", "q5"])?;
    for r in responses {
        let mut row = vec![r.respondent_id.clone()];
        row.extend(r.items.iter().map(u8::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
