use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_gam, GamData, GamFit, GamSpec};
use crate::error::{Error, Result};
use crate::ingest::geo::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Autumn,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Autumn];

    pub fn from_month(month: u32) -> Option<Season> {
        match month {
            12 | 1 | 2 => Some(Season::Winter),
            3..=5 => Some(Season::Spring),
            6..=8 => Some(Season::Summer),
            9..=11 => Some(Season::Autumn),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Winter => "winter",
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Autumn => "autumn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stratifier {
    Season,
    Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum StratumFit {
    Fitted(Box<GamFit>),
    Skipped { reason: String },
}

impl StratumFit {
    pub fn fit(&self) -> Option<&GamFit> {
        match self {
            StratumFit::Fitted(f) => Some(f),
            StratumFit::Skipped { .. } => None,
        }
    }
}

/// Row indices per stratum. Every stratum is present, possibly empty.
pub fn stratum_rows(
    data: &GamData,
    stratifier: Stratifier,
    region_map: &BTreeMap<String, Region>,
) -> Result<BTreeMap<String, Vec<usize>>> {
    let mut out: BTreeMap<String, Vec<usize>> = match stratifier {
        Stratifier::Season => Season::ALL.iter().map(|s| (s.as_str().to_string(), Vec::new())).collect(),
        Stratifier::Region => Region::ALL.iter().map(|r| (r.as_str().to_string(), Vec::new())).collect(),
    };
    for i in 0..data.len() {
        let key = match stratifier {
            Stratifier::Season => Season::from_month(data.months[i])
                .ok_or_else(|| Error::Data {
                    column: "month".into(),
                    message: format!("invalid month {}", data.months[i]),
                })?
                .as_str(),
            Stratifier::Region => region_map
                .get(&data.states[i])
                .ok_or_else(|| Error::lookup("region for state", data.states[i].as_str()))?
                .as_str(),
        };
        out.get_mut(key).unwrap().push(i);
    }
    Ok(out)
}

/// Refits `spec` on each stratum. Empty strata and strata too small for the
/// spec are reported as skipped; other errors abort.
pub fn fit_stratified(
    data: &GamData,
    spec: &GamSpec,
    stratifier: Stratifier,
    region_map: &BTreeMap<String, Region>,
) -> Result<BTreeMap<String, StratumFit>> {
    data.check_shape()?;
    let strata: Vec<(String, Vec<usize>)> = stratum_rows(data, stratifier, region_map)?.into_iter().collect();
    strata
        .into_par_iter()
        .map(|(name, rows)| {
            if rows.is_empty() {
                return Ok((name, StratumFit::Skipped { reason: "empty stratum".into() }));
            }
            match fit_gam(&data.subset(&rows), spec) {
                Ok(fit) => Ok((name, StratumFit::Fitted(Box::new(fit)))),
                Err(Error::InsufficientData(reason)) => Ok((name, StratumFit::Skipped { reason })),
                Err(e) => Err(e),
            }
        })
        .collect()
}
