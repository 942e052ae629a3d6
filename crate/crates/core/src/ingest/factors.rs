//! Geo-level factor tables and hourly weather observations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::record::TIMESTAMP_FORMAT;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeoLevel {
    Zip,
    County,
}

/// Columns carried by a factor table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorColumn {
    BlackRatio,
    SeniorRatio,
    BachelorRatio,
    UrbanRatio,
    OccupiedRatio,
    BuiltAfter1980Ratio,
    TransportStorageRatio,
    IndustrialRatio,
    MedianRentUsd,
    MedianIncomeUsd,
    BuildingUnits,
    MonthlyAvgTemp,
    PalmerZ,
}

impl FactorColumn {
    pub const ALL: [FactorColumn; 13] = [
        FactorColumn::BlackRatio,
        FactorColumn::SeniorRatio,
        FactorColumn::BachelorRatio,
        FactorColumn::UrbanRatio,
        FactorColumn::OccupiedRatio,
        FactorColumn::BuiltAfter1980Ratio,
        FactorColumn::TransportStorageRatio,
        FactorColumn::IndustrialRatio,
        FactorColumn::MedianRentUsd,
        FactorColumn::MedianIncomeUsd,
        FactorColumn::BuildingUnits,
        FactorColumn::MonthlyAvgTemp,
        FactorColumn::PalmerZ,
    ];

    /// The ten county covariates of the occurrence model.
    pub const OCCURRENCE_COVARIATES: [FactorColumn; 10] = [
        FactorColumn::BlackRatio,
        FactorColumn::SeniorRatio,
        FactorColumn::BachelorRatio,
        FactorColumn::UrbanRatio,
        FactorColumn::OccupiedRatio,
        FactorColumn::BuiltAfter1980Ratio,
        FactorColumn::TransportStorageRatio,
        FactorColumn::IndustrialRatio,
        FactorColumn::MonthlyAvgTemp,
        FactorColumn::PalmerZ,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FactorColumn::BlackRatio => "black_ratio",
            FactorColumn::SeniorRatio => "senior_ratio",
            FactorColumn::BachelorRatio => "bachelor_ratio",
            FactorColumn::UrbanRatio => "urban_ratio",
            FactorColumn::OccupiedRatio => "occupied_ratio",
            FactorColumn::BuiltAfter1980Ratio => "built_after_1980_ratio",
            FactorColumn::TransportStorageRatio => "transport_storage_ratio",
            FactorColumn::IndustrialRatio => "industrial_ratio",
            FactorColumn::MedianRentUsd => "median_rent_usd",
            FactorColumn::MedianIncomeUsd => "median_income_usd",
            FactorColumn::BuildingUnits => "building_units",
            FactorColumn::MonthlyAvgTemp => "monthly_avg_temp",
            FactorColumn::PalmerZ => "palmer_z",
        }
    }

    pub fn from_name(name: &str) -> Option<FactorColumn> {
        FactorColumn::ALL.into_iter().find(|c| c.as_str() == name)
    }

    pub fn is_ratio(self) -> bool {
        (self as usize) <= FactorColumn::IndustrialRatio as usize
    }

    /// Weather columns vary by month; the rest are annual.
    pub fn is_monthly(self) -> bool {
        matches!(self, FactorColumn::MonthlyAvgTemp | FactorColumn::PalmerZ)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FactorKey {
    pub geo_id: String,
    pub year: i32,
    pub month: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactorRow {
    pub values: [Option<f64>; 13],
}

impl FactorRow {
    pub fn get(&self, column: FactorColumn) -> Option<f64> {
        self.values[column.index()]
    }

    pub fn set(&mut self, column: FactorColumn, value: f64) {
        self.values[column.index()] = Some(value);
    }
}

/// Factor rows keyed by `(geo_id, year, month)`. Annual rows carry `month =
/// None`; monthly weather rows carry the calendar month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorTable {
    pub geo_level: GeoLevel,
    rows: BTreeMap<FactorKey, FactorRow>,
}

impl FactorTable {
    pub fn new(geo_level: GeoLevel) -> Self {
        FactorTable {
            geo_level,
            rows: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, key: FactorKey, row: FactorRow) -> Result<()> {
        validate_row(&key, &row)?;
        if self.rows.contains_key(&key) {
            return Err(Error::Factor(format!(
                "duplicate key ({}, {}, {:?})",
                key.geo_id, key.year, key.month
            )));
        }
        self.rows.insert(key, row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&FactorKey, &FactorRow)> {
        self.rows.iter()
    }

    pub fn annual(&self, geo_id: &str, year: i32) -> Option<&FactorRow> {
        self.rows.get(&FactorKey {
            geo_id: geo_id.to_string(),
            year,
            month: None,
        })
    }

    pub fn monthly(&self, geo_id: &str, year: i32, month: u32) -> Option<&FactorRow> {
        self.rows.get(&FactorKey {
            geo_id: geo_id.to_string(),
            year,
            month: Some(month),
        })
    }

    /// Looks a column up for a geo-month: monthly columns come from the
    /// monthly row, annual columns from the annual row (or the monthly row
    /// when it carries them).
    pub fn value(&self, geo_id: &str, year: i32, month: u32, column: FactorColumn) -> Option<f64> {
        let monthly = self.monthly(geo_id, year, month).and_then(|r| r.get(column));
        if column.is_monthly() {
            return monthly;
        }
        self.annual(geo_id, year)
            .and_then(|r| r.get(column))
            .or(monthly)
    }

    pub fn from_reader<R: Read>(reader: R, geo_level: GeoLevel) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let position = |name: &str| headers.iter().position(|h| h.trim() == name);
        let (Some(geo_pos), Some(year_pos)) = (position("geo_id"), position("year")) else {
            return Err(Error::Schema(
                "factor table needs geo_id and year columns".into(),
            ));
        };
        let month_pos = position("month");
        let columns: Vec<(usize, FactorColumn)> = headers
            .iter()
            .enumerate()
            .filter_map(|(i, h)| FactorColumn::from_name(h.trim()).map(|c| (i, c)))
            .collect();

        let mut table = FactorTable::new(geo_level);
        for (i, rec) in rdr.records().enumerate() {
            let row_no = i + 1;
            let rec = rec?;
            let parse_err = |message: String| Error::Parse {
                row: row_no,
                message,
            };
            let geo_id = rec.get(geo_pos).unwrap_or("").trim().to_string();
            let year = rec
                .get(year_pos)
                .and_then(|v| v.trim().parse::<i32>().ok())
                .ok_or_else(|| parse_err("unparseable year".into()))?;
            let month = match month_pos.and_then(|p| rec.get(p)).map(str::trim) {
                None | Some("") => None,
                Some(m) => Some(
                    m.parse::<u32>()
                        .ok()
                        .filter(|m| (1..=12).contains(m))
                        .ok_or_else(|| parse_err(format!("invalid month `{m}`")))?,
                ),
            };
            let mut row = FactorRow::default();
            for (pos, col) in &columns {
                let raw = rec.get(*pos).unwrap_or("").trim();
                if raw.is_empty() {
                    continue;
                }
                let v = raw
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(format!("unparseable {}", col.as_str())))?;
                row.set(*col, v);
            }
            table
                .insert(FactorKey { geo_id, year, month }, row)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(table)
    }

    pub fn from_path(path: &Path, geo_level: GeoLevel) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        FactorTable::from_reader(file, geo_level)
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["geo_id", "year", "month"];
        header.extend(FactorColumn::ALL.iter().map(|c| c.as_str()));
        w.write_record(&header)?;
        for (key, row) in &self.rows {
            let mut rec = vec![
                key.geo_id.clone(),
                key.year.to_string(),
                key.month.map(|m| m.to_string()).unwrap_or_default(),
            ];
            rec.extend(
                row.values
                    .iter()
                    .map(|v| v.map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<factor writer>", e))?;
        Ok(())
    }
}

fn validate_row(key: &FactorKey, row: &FactorRow) -> Result<()> {
    for col in FactorColumn::ALL {
        let Some(v) = row.get(col) else { continue };
        if col.is_ratio() && !(0.0..=1.0).contains(&v) {
            return Err(Error::Factor(format!(
                "{} = {v} outside [0, 1] for {}",
                col.as_str(),
                key.geo_id
            )));
        }
        if col == FactorColumn::BuildingUnits && v < 0.0 {
            return Err(Error::Factor(format!(
                "negative building_units for {}",
                key.geo_id
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WeatherObs {
    pub temperature: Option<f64>,
    pub relative_humidity: Option<f64>,
    pub wind_speed: Option<f64>,
    pub precipitation: Option<f64>,
}

/// Hourly weather keyed by `(geo_id, hour)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HourlyWeather {
    obs: BTreeMap<(String, NaiveDateTime), WeatherObs>,
}

impl HourlyWeather {
    pub fn insert(&mut self, geo_id: &str, hour: NaiveDateTime, obs: WeatherObs) -> Result<()> {
        if self.obs.insert((geo_id.to_string(), hour), obs).is_some() {
            return Err(Error::Factor(format!(
                "duplicate weather hour ({geo_id}, {hour})"
            )));
        }
        Ok(())
    }

    pub fn get(&self, geo_id: &str, hour: NaiveDateTime) -> Option<&WeatherObs> {
        self.obs.get(&(geo_id.to_string(), hour))
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            geo_id: String,
            datetime: String,
            temperature: Option<f64>,
            relative_humidity: Option<f64>,
            wind_speed: Option<f64>,
            precipitation: Option<f64>,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let mut table = HourlyWeather::default();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let err = |message: String| Error::Parse {
                row: i + 1,
                message,
            };
            let row = row.map_err(|e| err(e.to_string()))?;
            let hour = NaiveDateTime::parse_from_str(&row.datetime, TIMESTAMP_FORMAT)
                .map_err(|_| err(format!("unparseable datetime `{}`", row.datetime)))?;
            table
                .insert(
                    &row.geo_id,
                    hour,
                    WeatherObs {
                        temperature: row.temperature,
                        relative_humidity: row.relative_humidity,
                        wind_speed: row.wind_speed,
                        precipitation: row.precipitation,
                    },
                )
                .map_err(|e| err(e.to_string()))?;
        }
        Ok(table)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        HourlyWeather::from_reader(file)
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "geo_id",
            "datetime",
            "temperature",
            "relative_humidity",
            "wind_speed",
            "precipitation",
        ])?;
        let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for ((geo, hour), obs) in &self.obs {
            w.write_record([
                geo.clone(),
                hour.format(TIMESTAMP_FORMAT).to_string(),
                cell(obs.temperature),
                cell(obs.relative_humidity),
                cell(obs.wind_speed),
                cell(obs.precipitation),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<weather writer>", e))?;
        Ok(())
    }
}
