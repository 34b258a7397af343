//! Hourly price ingestion: CSV parsing, 24-hour day windows and year splits.
//!
//! Timestamps are naive local market time. Days without exactly the 24 hours
//! `0..=23` (daylight-saving transitions, gaps) are dropped and counted rather
//! than imputed. Negative prices are kept as they are.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowProblem};

pub const HOURS_PER_DAY: usize = 24;

const TIMESTAMP_FORMATS: [&str; 3] = ["%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceRecord {
    pub timestamp: NaiveDateTime,
    /// $/MWh, may be negative.
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceDay {
    pub date: NaiveDate,
    pub prices: [f64; HOURS_PER_DAY],
}

impl PriceDay {
    pub fn new(date: NaiveDate, prices: [f64; HOURS_PER_DAY]) -> Result<Self> {
        if let Some(h) = prices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("{date}: hour {h} price is not finite")));
        }
        Ok(Self { date, prices })
    }

    pub fn year(&self) -> i32 {
        self.date.year()
    }
}

/// Kept/dropped tally from [`group_days`]. Serializes as `{"days_kept": n, "days_dropped": m}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDiagnostics {
    pub days_kept: usize,
    pub days_dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train_days: Vec<PriceDay>,
    pub test_days: Vec<PriceDay>,
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
}

/// Parses `timestamp,price` CSV text. Row numbers in errors count data rows from 1.
pub fn parse_price_csv<R: Read>(input: R) -> Result<Vec<PriceRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let header = reader.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != ["timestamp", "price"] {
        return Err(Error::BadHeader(names.join(",")));
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let malformed = |problem| Error::MalformedRow { row: row_no, problem };
        if row.len() != 2 {
            return Err(malformed(RowProblem::FieldCount(row.len())));
        }
        let (ts_raw, price_raw) = (&row[0], &row[1]);
        let timestamp =
            parse_timestamp(ts_raw).ok_or_else(|| malformed(RowProblem::Timestamp(ts_raw.into())))?;
        if timestamp.minute() != 0 || timestamp.second() != 0 || timestamp.nanosecond() != 0 {
            return Err(malformed(RowProblem::NotOnTheHour(ts_raw.into())));
        }
        let price: f64 = price_raw
            .parse()
            .map_err(|_| malformed(RowProblem::NonNumericPrice(price_raw.into())))?;
        if !price.is_finite() {
            return Err(malformed(RowProblem::NonFinitePrice(price_raw.into())));
        }
        if !seen.insert(timestamp) {
            return Err(Error::DuplicateTimestamp { row: row_no, timestamp: ts_raw.into() });
        }
        records.push(PriceRecord { timestamp, price });
    }
    Ok(records)
}

/// Writes records in the format [`parse_price_csv`] reads.
pub fn write_price_csv<W: Write>(records: &[PriceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "price"])?;
    for r in records {
        w.write_record([r.timestamp.format("%Y-%m-%dT%H:%M").to_string(), r.price.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Flattens days back into hourly records.
pub fn day_records(days: &[PriceDay]) -> Vec<PriceRecord> {
    days.iter()
        .flat_map(|day| {
            day.prices.iter().enumerate().map(move |(h, &price)| PriceRecord {
                timestamp: day.date.and_hms_opt(h as u32, 0, 0).expect("hour < 24"),
                price,
            })
        })
        .collect()
}

/// Assembles complete 24-hour days. A date is kept only when its hours are
/// exactly `{0, …, 23}`, each once; every other date is dropped and counted.
pub fn group_days(records: &[PriceRecord]) -> (Vec<PriceDay>, GroupDiagnostics) {
    let mut by_date: BTreeMap<NaiveDate, Vec<(u32, f64)>> = BTreeMap::new();
    for r in records {
        by_date.entry(r.timestamp.date()).or_default().push((r.timestamp.hour(), r.price));
    }

    let mut diagnostics = GroupDiagnostics::default();
    let mut days = Vec::with_capacity(by_date.len());
    for (date, hours) in by_date {
        let distinct: BTreeSet<u32> = hours.iter().map(|&(h, _)| h).collect();
        if hours.len() != HOURS_PER_DAY || distinct.len() != HOURS_PER_DAY {
            diagnostics.days_dropped += 1;
            continue;
        }
        let mut prices = [0.0; HOURS_PER_DAY];
        for (h, p) in hours {
            prices[h as usize] = p;
        }
        days.push(PriceDay { date, prices });
        diagnostics.days_kept += 1;
    }
    (days, diagnostics)
}

/// Partitions days by calendar year. Days whose year is in neither set are ignored.
pub fn split_by_years(
    days: &[PriceDay],
    train_years: &BTreeSet<i32>,
    test_years: &BTreeSet<i32>,
) -> Result<Dataset> {
    let overlap: Vec<i32> = train_years.intersection(test_years).copied().collect();
    if !overlap.is_empty() {
        return Err(Error::OverlappingYears(overlap));
    }
    let mut sorted: Vec<&PriceDay> = days.iter().collect();
    sorted.sort_by_key(|d| d.date);
    let pick = |years: &BTreeSet<i32>| -> Vec<PriceDay> {
        sorted.iter().filter(|d| years.contains(&d.year())).map(|d| (*d).clone()).collect()
    };
    let train_days = pick(train_years);
    if train_days.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    Ok(Dataset { train_days, test_days: pick(test_years) })
}
