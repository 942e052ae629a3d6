//! County-month incidence rates per 100,000 building units.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{geo, FactorColumn, FactorTable, IncidentRecord};

/// County-months with fewer incidents than this are left out of modeling.
pub const MIN_MONTHLY_EVENTS: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub county_fips: String,
    pub year: i32,
    pub month: u32,
    pub incident_count: u64,
    pub building_units: u64,
    pub rate: f64,
}

impl RateRow {
    pub fn state(&self) -> Option<&'static str> {
        geo::state_for_county(&self.county_fips)
    }
}

pub fn rate_per_100k(count: u64, units: u64) -> f64 {
    100_000.0 * count as f64 / units as f64
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub min_events: u64,
    pub excluded_rows: usize,
    pub excluded_incidents: u64,
    pub rows: Vec<RateRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

/// Groups incidents by `(county, year, month)` and divides by the county's
/// building units for the incident year.
pub fn county_month_rates<'a>(
    incidents: impl IntoIterator<Item = &'a IncidentRecord>,
    units: &FactorTable,
) -> Result<(RateTable, ExclusionReport)> {
    let mut counts: BTreeMap<(String, i32, u32), u64> = BTreeMap::new();
    for inc in incidents {
        *counts
            .entry((inc.county_fips.clone(), inc.incident_year, inc.month()))
            .or_default() += 1;
    }

    let mut missing = BTreeSet::new();
    let mut kept = Vec::new();
    let mut report = ExclusionReport {
        min_events: MIN_MONTHLY_EVENTS,
        ..Default::default()
    };
    for ((county, year, month), count) in counts {
        let u = units
            .annual(&county, year)
            .and_then(|r| r.get(FactorColumn::BuildingUnits))
            .filter(|u| *u >= 1.0);
        let Some(u) = u else {
            missing.insert(county);
            continue;
        };
        let u = u.round() as u64;
        let row = RateRow {
            rate: rate_per_100k(count, u),
            county_fips: county,
            year,
            month,
            incident_count: count,
            building_units: u,
        };
        if count < MIN_MONTHLY_EVENTS {
            report.excluded_incidents += count;
            report.rows.push(row);
        } else {
            kept.push(row);
        }
    }
    if !missing.is_empty() {
        return Err(Error::Rate(missing.into_iter().collect()));
    }
    report.excluded_rows = report.rows.len();
    Ok((RateTable { rows: kept }, report))
}

const RATE_HEADER: [&str; 6] = ["county_fips", "year", "month", "count", "units", "rate"];

impl RateTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(RATE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.county_fips.clone(),
                r.year.to_string(),
                r.month.to_string(),
                r.incident_count.to_string(),
                r.building_units.to_string(),
                r.rate.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<rate writer>", e))?;
        Ok(())
    }

    /// Reads the CSV written by [`RateTable::write`]. Errors carry the
    /// 1-based data row number.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().map(str::trim).ne(RATE_HEADER) {
            return Err(Error::Schema(format!(
                "rate table header must be {}",
                RATE_HEADER.join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row_no = i + 1;
            let err = |field: &str| Error::Parse {
                row: row_no,
                message: format!("unparseable {field}"),
            };
            let rec = rec.map_err(|e| Error::Parse {
                row: row_no,
                message: e.to_string(),
            })?;
            let field = |i: usize| rec.get(i).unwrap_or("").trim();
            let county_fips = field(0).to_string();
            if geo::state_for_county(&county_fips).is_none() || county_fips.len() != 5 {
                return Err(err("county_fips"));
            }
            let row = RateRow {
                county_fips,
                year: field(1).parse().map_err(|_| err("year"))?,
                month: field(2)
                    .parse()
                    .ok()
                    .filter(|m| (1..=12).contains(m))
                    .ok_or_else(|| err("month"))?,
                incident_count: field(3).parse().map_err(|_| err("count"))?,
                building_units: field(4)
                    .parse()
                    .ok()
                    .filter(|u| *u > 0)
                    .ok_or_else(|| err("units"))?,
                rate: field(5)
                    .parse::<f64>()
                    .ok()
                    .filter(|r| r.is_finite() && *r >= 0.0)
                    .ok_or_else(|| err("rate"))?,
            };
            rows.push(row);
        }
        Ok(RateTable { rows })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        RateTable::from_reader(file)
    }
}
