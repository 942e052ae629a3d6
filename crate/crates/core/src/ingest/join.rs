//! Outer join of incidents onto ZIP-level factors and hourly weather.

use serde::{Deserialize, Serialize};

use super::factors::{FactorColumn, FactorRow, FactorTable, HourlyWeather, WeatherObs};
use super::record::{IncidentRecord, IncidentTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeatherSource {
    Hourly,
    /// Temperature taken from the geo's monthly average; other fields missing.
    MonthlyFallback,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinedRow {
    pub incident: IncidentRecord,
    pub local: FactorRow,
    pub missing_local_factors: bool,
    pub weather: WeatherObs,
    pub weather_source: WeatherSource,
}

impl JoinedRow {
    pub fn local_value(&self, column: FactorColumn) -> Option<f64> {
        self.local.get(column)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinedTable {
    pub rows: Vec<JoinedRow>,
}

impl JoinedTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Attaches `(zip, incident_year)` factors and incident-hour weather to every
/// incident. Unmatched incidents are kept and flagged.
pub fn join_factors(
    incidents: &IncidentTable,
    zip_factors: &FactorTable,
    weather: &HourlyWeather,
) -> Result<JoinedTable> {
    if zip_factors.is_empty() {
        return Err(Error::Join("factor table is empty".into()));
    }
    let rows = incidents
        .records
        .iter()
        .map(|inc| join_one(inc, zip_factors, weather))
        .collect();
    Ok(JoinedTable { rows })
}

fn join_one(inc: &IncidentRecord, factors: &FactorTable, weather: &HourlyWeather) -> JoinedRow {
    let year = inc.incident_year;
    let month = inc.month();
    let mut local = FactorRow::default();
    let mut missing_local_factors = true;
    let mut obs = WeatherObs::default();
    let mut source = WeatherSource::Missing;

    if let Some(zip) = &inc.zip {
        missing_local_factors = factors.annual(zip, year).is_none();
        for col in FactorColumn::ALL {
            local.values[col.index()] = factors.value(zip, year, month, col);
        }
        if let Some(hourly) = weather.get(zip, inc.timestamp) {
            obs = *hourly;
            source = WeatherSource::Hourly;
        } else if let Some(t) = local.get(FactorColumn::MonthlyAvgTemp) {
            obs.temperature = Some(t);
            source = WeatherSource::MonthlyFallback;
        }
    }

    JoinedRow {
        incident: inc.clone(),
        local,
        missing_local_factors,
        weather: obs,
        weather_source: source,
    }
}
