use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REFERENCE_YEAR: i32 = 2022;

/// Annual consumer price index values, used to express dollar amounts in
/// reference-year (2022) value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<i32, f64>", into = "BTreeMap<i32, f64>")]
pub struct CpiTable {
    index: BTreeMap<i32, f64>,
}

impl CpiTable {
    pub fn new(index: BTreeMap<i32, f64>) -> Result<Self> {
        if !index.contains_key(&REFERENCE_YEAR) {
            return Err(Error::Cpi(format!("table must contain {REFERENCE_YEAR}")));
        }
        if let Some((year, v)) = index.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Cpi(format!("non-positive index {v} for {year}")));
        }
        Ok(CpiTable { index })
    }

    /// BLS CPI-U, U.S. city average, annual averages (1982-84 = 100).
    pub fn cpi_u_2012_2022() -> Self {
        let index = [
            (2012, 229.594),
            (2013, 232.957),
            (2014, 236.736),
            (2015, 237.017),
            (2016, 240.007),
            (2017, 245.120),
            (2018, 251.107),
            (2019, 255.657),
            (2020, 258.811),
            (2021, 270.970),
            (2022, 292.655),
        ]
        .into_iter()
        .collect();
        CpiTable { index }
    }

    pub fn get(&self, year: i32) -> Result<f64> {
        self.index.get(&year).copied().ok_or(Error::CpiLookup(year))
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.index.keys().copied()
    }

    /// Reads a two-column `year,cpi` CSV.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut index = BTreeMap::new();
        for (i, row) in rdr.deserialize::<(i32, f64)>().enumerate() {
            let (year, value) = row.map_err(|e| Error::Parse {
                row: i + 1,
                message: e.to_string(),
            })?;
            if index.insert(year, value).is_some() {
                return Err(Error::Cpi(format!("duplicate year {year}")));
            }
        }
        CpiTable::new(index)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        CpiTable::from_reader(file)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("year,cpi\n");
        for (y, v) in &self.index {
            s.push_str(&format!("{y},{v}\n"));
        }
        s
    }
}

impl TryFrom<BTreeMap<i32, f64>> for CpiTable {
    type Error = Error;

    fn try_from(index: BTreeMap<i32, f64>) -> Result<Self> {
        CpiTable::new(index)
    }
}

impl From<CpiTable> for BTreeMap<i32, f64> {
    fn from(t: CpiTable) -> Self {
        t.index
    }
}

/// `amount * cpi[2022] / cpi[year]`.
pub fn adjust_to_2022(amount: f64, year: i32, cpi: &CpiTable) -> Result<f64> {
    let reference = cpi.get(REFERENCE_YEAR)?;
    let base = cpi.get(year)?;
    if year == REFERENCE_YEAR {
        return Ok(amount);
    }
    Ok(amount * reference / base)
}
