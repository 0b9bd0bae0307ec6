//! Pool snapshot panels: CSV persistence, synthetic panels and an HTTP fetcher.
//!
//! The on-disk format is a CSV with header
//! `subnet_id,date,tao_reserve,alpha_reserve,price`, one row per subnet and
//! day, sorted by subnet then date. `price` may be empty on input, in which
//! case it is derived from the reserves.

mod fetch;
mod synthetic;

pub use fetch::{fetch_history, FetchConfig, FetchOutcome, FieldMap, API_KEY_ENV};
pub use synthetic::{make_depth_ladder, make_synthetic_panel, SyntheticSpec};

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::econometrics::DailySeries;
use crate::error::{Error, Result};

pub const PANEL_HEADER: [&str; 5] = ["subnet_id", "date", "tao_reserve", "alpha_reserve", "price"];

/// Largest accepted relative gap between a stated price and `x/y`.
pub const PRICE_CONSISTENCY_TOL: f64 = 1e-6;

/// Daily series keyed by subnet id.
pub type Panel = BTreeMap<u32, DailySeries>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub subnet_id: u32,
    pub date: NaiveDate,
    pub tao_reserve: f64,
    pub alpha_reserve: f64,
    pub price: Option<f64>,
}

impl SnapshotRow {
    /// Checks positivity and, when a price is given, its agreement with the reserves.
    pub fn validate(&self) -> std::result::Result<f64, String> {
        let (x, y) = (self.tao_reserve, self.alpha_reserve);
        if !(x > 0.0 && x.is_finite()) {
            return Err(format!("tao_reserve must be positive, got {x}"));
        }
        if !(y > 0.0 && y.is_finite()) {
            return Err(format!("alpha_reserve must be positive, got {y}"));
        }
        let implied = x / y;
        match self.price {
            None => Ok(implied),
            Some(p) if !(p > 0.0 && p.is_finite()) => Err(format!("price must be positive, got {p}")),
            Some(p) if ((p - implied) / p).abs() >= PRICE_CONSISTENCY_TOL => {
                Err(format!("price {p} disagrees with reserve ratio {implied}"))
            }
            Some(p) => Ok(p),
        }
    }
}

/// Reads a panel CSV file.
pub fn read_panel(path: impl AsRef<Path>) -> Result<Panel> {
    read_panel_from(File::open(path)?)
}

/// Reads a panel from any reader. Errors carry 1-based line numbers.
pub fn read_panel_from<R: Read>(input: R) -> Result<Panel> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut records = rdr.records();
    match records.next() {
        None => return Ok(Panel::new()),
        Some(header) => {
            let header = header?;
            if header.iter().ne(PANEL_HEADER) {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `{}`", PANEL_HEADER.join(",")),
                });
            }
        }
    }

    let mut rows: BTreeMap<(u32, NaiveDate), (usize, SnapshotRow, f64)> = BTreeMap::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != PANEL_HEADER.len() {
            return Err(Error::Parse { line, message: format!("expected 5 fields, found {}", rec.len()) });
        }
        let row = parse_row(&rec, line)?;
        let price = row.validate().map_err(|message| Error::Validation { line, message })?;
        match rows.entry((row.subnet_id, row.date)) {
            Entry::Occupied(prev) => {
                return Err(Error::Conflict(format!(
                    "subnet {} has two rows for {} (lines {} and {line})",
                    row.subnet_id,
                    row.date,
                    prev.get().0
                )))
            }
            Entry::Vacant(slot) => {
                slot.insert((line, row, price));
            }
        }
    }
    group_rows(rows.into_values().map(|(_, row, price)| (row, price)))
}

fn parse_row(rec: &csv::StringRecord, line: usize) -> Result<SnapshotRow> {
    let err = |field: &str, value: &str| Error::Parse { line, message: format!("invalid {field} `{value}`") };
    let subnet_id = rec[0].trim().parse().map_err(|_| err("subnet_id", &rec[0]))?;
    let date = NaiveDate::parse_from_str(rec[1].trim(), "%Y-%m-%d").map_err(|_| err("date", &rec[1]))?;
    let num = |i: usize, name: &str| rec[i].trim().parse::<f64>().map_err(|_| err(name, &rec[i]));
    let tao_reserve = num(2, "tao_reserve")?;
    let alpha_reserve = num(3, "alpha_reserve")?;
    let price = if rec[4].trim().is_empty() { None } else { Some(num(4, "price")?) };
    Ok(SnapshotRow { subnet_id, date, tao_reserve, alpha_reserve, price })
}

/// Groups validated rows (already sorted by subnet then date) into series.
fn group_rows(rows: impl Iterator<Item = (SnapshotRow, f64)>) -> Result<Panel> {
    let mut cols: BTreeMap<u32, (Vec<NaiveDate>, Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (row, price) in rows {
        let c = cols.entry(row.subnet_id).or_default();
        c.0.push(row.date);
        c.1.push(row.tao_reserve);
        c.2.push(row.alpha_reserve);
        c.3.push(price);
    }
    cols.into_iter().map(|(id, (d, x, y, p))| Ok((id, DailySeries::new(d, x, y, p)?))).collect()
}

/// Builds a panel from unsorted rows, validating each.
pub fn panel_from_rows(rows: Vec<SnapshotRow>) -> Result<Panel> {
    let mut sorted: BTreeMap<(u32, NaiveDate), (SnapshotRow, f64)> = BTreeMap::new();
    for (i, row) in rows.into_iter().enumerate() {
        let price = row.validate().map_err(|message| Error::Validation { line: i + 1, message })?;
        if sorted.insert((row.subnet_id, row.date), (row, price)).is_some() {
            return Err(Error::Conflict(format!("subnet {} has two rows for {}", row.subnet_id, row.date)));
        }
    }
    group_rows(sorted.into_values())
}

/// Writes a panel file in canonical order with shortest round-trip number formatting.
pub fn write_panel(panel: &Panel, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_panel_to(panel, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_panel_to<W: Write>(panel: &Panel, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(PANEL_HEADER)?;
    for (id, s) in panel {
        for i in 0..s.len() {
            w.write_record([
                id.to_string(),
                s.dates[i].format("%Y-%m-%d").to_string(),
                s.tao_reserve[i].to_string(),
                s.alpha_reserve[i].to_string(),
                s.price[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
