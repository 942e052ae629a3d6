use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FactorColumn, FactorTable};
use crate::rates::RateTable;

/// Model frame for an occurrence GAM: positive response, state label, month,
/// and named covariate columns of equal length.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GamData {
    pub response: Vec<f64>,
    pub states: Vec<String>,
    pub months: Vec<u32>,
    pub covariates: BTreeMap<String, Vec<f64>>,
}

impl GamData {
    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    pub fn covariate(&self, name: &str) -> Result<&[f64]> {
        self.covariates
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::lookup("covariate", name))
    }

    pub fn subset(&self, rows: &[usize]) -> GamData {
        GamData {
            response: rows.iter().map(|&i| self.response[i]).collect(),
            states: rows.iter().map(|&i| self.states[i].clone()).collect(),
            months: rows.iter().map(|&i| self.months[i]).collect(),
            covariates: self
                .covariates
                .iter()
                .map(|(k, v)| (k.clone(), rows.iter().map(|&i| v[i]).collect()))
                .collect(),
        }
    }

    pub(crate) fn check_shape(&self) -> Result<()> {
        let n = self.response.len();
        if self.states.len() != n || self.months.len() != n {
            return Err(Error::Shape("state/month columns differ in length from response".into()));
        }
        if let Some((name, _)) = self.covariates.iter().find(|(_, v)| v.len() != n) {
            return Err(Error::Shape(format!("covariate `{name}` has the wrong length")));
        }
        Ok(())
    }

    /// Joins county-month rates with the county factor table: annual
    /// covariates from the `(county, year)` row, weather from the
    /// `(county, year, month)` row.
    pub fn from_rates(rates: &RateTable, county_factors: &FactorTable) -> Result<GamData> {
        let mut data = GamData::default();
        let mut columns: BTreeMap<String, Vec<f64>> = FactorColumn::OCCURRENCE_COVARIATES
            .iter()
            .map(|c| (c.as_str().to_string(), Vec::with_capacity(rates.len())))
            .collect();
        for row in &rates.rows {
            let state = row.state().ok_or_else(|| Error::Data {
                column: "county_fips".into(),
                message: format!("no state for county {}", row.county_fips),
            })?;
            for c in FactorColumn::OCCURRENCE_COVARIATES {
                let v = county_factors
                    .value(&row.county_fips, row.year, row.month, c)
                    .ok_or_else(|| Error::Data {
                        column: c.as_str().into(),
                        message: format!(
                            "missing for county {} in {}-{:02}",
                            row.county_fips, row.year, row.month
                        ),
                    })?;
                columns.get_mut(c.as_str()).unwrap().push(v);
            }
            data.response.push(row.rate);
            data.states.push(state.to_string());
            data.months.push(row.month);
        }
        data.covariates = columns;
        Ok(data)
    }
}
