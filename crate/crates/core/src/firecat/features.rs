use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FactorColumn, JoinedRow, JoinedTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Incident,
    Local,
}

impl FeatureGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Incident => "incident",
            FeatureGroup::Local => "local",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub group: FeatureGroup,
}

const INCIDENT_NUMERIC: [&str; 6] = [
    "stories_above",
    "stories_below",
    "total_sqft",
    "response_minutes",
    "hour",
    "month",
];
const INCIDENT_CATEGORICAL: [&str; 12] = [
    "property_use",
    "detector_present",
    "aes_present",
    "ignition_cause",
    "fire_origin_location",
    "first_ignited_item",
    "first_ignited_material",
    "heat_source",
    "ignition_factor",
    "human_factor",
    "primary_action",
    "growth_factor",
];
const WEATHER: [&str; 4] = ["temperature", "relative_humidity", "wind_speed", "precipitation"];

/// Kind and group of a feature that can be pulled from a joined row.
pub fn catalog(name: &str) -> Option<(FeatureKind, FeatureGroup)> {
    use FeatureGroup::*;
    use FeatureKind::*;
    if INCIDENT_NUMERIC.contains(&name) {
        Some((Numeric, Incident))
    } else if INCIDENT_CATEGORICAL.contains(&name) {
        Some((Categorical, Incident))
    } else if name == "state" {
        Some((Categorical, Local))
    } else if WEATHER.contains(&name) || FactorColumn::from_name(name).is_some() {
        Some((Numeric, Local))
    } else {
        None
    }
}

/// Ordered feature list; model columns follow this order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureManifest {
    pub features: Vec<FeatureSpec>,
}

impl Default for FeatureManifest {
    /// Every catalog feature: 18 incident-specific, 18 local.
    fn default() -> Self {
        let names = INCIDENT_NUMERIC
            .iter()
            .chain(&INCIDENT_CATEGORICAL)
            .copied()
            .chain(std::iter::once("state"))
            .chain(FactorColumn::ALL.iter().map(|c| c.as_str()))
            .chain(WEATHER);
        FeatureManifest::from_names(names).expect("catalog names resolve")
    }
}

impl FeatureManifest {
    pub fn from_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut features = Vec::new();
        for name in names {
            let (kind, group) = catalog(name).ok_or_else(|| Error::lookup("feature", name))?;
            if features.iter().any(|f: &FeatureSpec| f.name == name) {
                return Err(Error::Config(format!("feature `{name}` listed twice")));
            }
            features.push(FeatureSpec {
                name: name.to_string(),
                kind,
                group,
            });
        }
        if features.is_empty() {
            return Err(Error::Config("feature manifest is empty".into()));
        }
        Ok(FeatureManifest { features })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::lookup("feature", name))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureColumn {
    /// `None` marks a missing value.
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<String>),
}

impl FeatureColumn {
    pub fn len(&self) -> usize {
        match self {
            FeatureColumn::Numeric(v) => v.len(),
            FeatureColumn::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn subset(&self, rows: &[usize]) -> FeatureColumn {
        match self {
            FeatureColumn::Numeric(v) => FeatureColumn::Numeric(rows.iter().map(|&i| v[i]).collect()),
            FeatureColumn::Categorical(v) => {
                FeatureColumn::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }
}

/// Raw feature values, one column per manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFrame {
    pub manifest: FeatureManifest,
    pub columns: Vec<FeatureColumn>,
}

fn numeric(row: &JoinedRow, name: &str) -> Option<f64> {
    let inc = &row.incident;
    match name {
        "stories_above" => Some(f64::from(inc.stories_above)),
        "stories_below" => Some(f64::from(inc.stories_below)),
        "total_sqft" => Some(inc.total_sqft),
        "response_minutes" => Some(inc.response_minutes),
        "hour" => Some(f64::from(inc.hour())),
        "month" => Some(f64::from(inc.month())),
        "temperature" => row.weather.temperature,
        "relative_humidity" => row.weather.relative_humidity,
        "wind_speed" => row.weather.wind_speed,
        "precipitation" => row.weather.precipitation,
        other => FactorColumn::from_name(other).and_then(|c| row.local_value(c)),
    }
}

fn categorical(row: &JoinedRow, name: &str) -> String {
    let inc = &row.incident;
    match name {
        "property_use" => inc.property_use.clone(),
        "detector_present" => inc.detector_present.as_str().to_string(),
        "aes_present" => inc.aes_present.as_str().to_string(),
        "ignition_cause" => inc.ignition_cause.clone(),
        "fire_origin_location" => inc.fire_origin_location.clone(),
        "first_ignited_item" => inc.first_ignited_item.clone(),
        "first_ignited_material" => inc.first_ignited_material.clone(),
        "heat_source" => inc.heat_source.clone(),
        "ignition_factor" => inc.ignition_factor.clone(),
        "human_factor" => inc.human_factor.clone(),
        "primary_action" => inc.primary_action.clone(),
        "growth_factor" => inc.growth_factor.clone(),
        "state" => inc.state.clone(),
        other => unreachable!("`{other}` is not a categorical catalog feature"),
    }
}

impl FeatureFrame {
    pub fn from_joined(table: &JoinedTable, manifest: &FeatureManifest) -> Result<Self> {
        Self::from_rows(&table.rows, manifest)
    }

    pub fn from_rows(rows: &[JoinedRow], manifest: &FeatureManifest) -> Result<Self> {
        let mut columns = Vec::with_capacity(manifest.len());
        for f in &manifest.features {
            if catalog(&f.name).map(|(k, _)| k) != Some(f.kind) {
                return Err(Error::Config(format!(
                    "feature `{}` declared with the wrong kind",
                    f.name
                )));
            }
            columns.push(match f.kind {
                FeatureKind::Numeric => FeatureColumn::Numeric(rows.iter().map(|r| numeric(r, &f.name)).collect()),
                FeatureKind::Categorical => {
                    FeatureColumn::Categorical(rows.iter().map(|r| categorical(r, &f.name)).collect())
                }
            });
        }
        Ok(FeatureFrame {
            manifest: manifest.clone(),
            columns,
        })
    }

    /// Builds a frame from explicit columns; kinds must match the manifest.
    pub fn new(manifest: FeatureManifest, columns: Vec<FeatureColumn>) -> Result<Self> {
        if manifest.len() != columns.len() {
            return Err(Error::Shape(format!(
                "{} columns for {} manifest features",
                columns.len(),
                manifest.len()
            )));
        }
        let n = columns.first().map_or(0, FeatureColumn::len);
        for (f, c) in manifest.features.iter().zip(&columns) {
            let kind = match c {
                FeatureColumn::Numeric(_) => FeatureKind::Numeric,
                FeatureColumn::Categorical(_) => FeatureKind::Categorical,
            };
            if kind != f.kind {
                return Err(Error::Shape(format!("column `{}` has the wrong kind", f.name)));
            }
            if c.len() != n {
                return Err(Error::Shape(format!("column `{}` has the wrong length", f.name)));
            }
        }
        Ok(FeatureFrame { manifest, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, FeatureColumn::len)
    }

    pub fn subset(&self, rows: &[usize]) -> FeatureFrame {
        FeatureFrame {
            manifest: self.manifest.clone(),
            columns: self.columns.iter().map(|c| c.subset(rows)).collect(),
        }
    }

    pub fn column(&self, name: &str) -> Result<&FeatureColumn> {
        Ok(&self.columns[self.manifest.index_of(name)?])
    }
}
