//! Consequence labels: fire spread level, weighted-injury risk, and
//! CPI-adjusted economic-loss risk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{adjust_to_2022, CpiTable, IncidentRecord, InjuryCounts};

/// NFIRS fire-spread categories, including the one excluded at ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpreadStatus {
    ConfinedToObject,
    Room,
    Floor,
    Building,
    Beyond,
}

impl SpreadStatus {
    /// Accepts NFIRS numeric codes (1-5) and the textual category names.
    pub fn parse(code: &str) -> Option<SpreadStatus> {
        let norm = code.trim().to_ascii_lowercase().replace(" the ", " ");
        let status = match norm.as_str() {
            "1" | "object" | "confined to object of origin" => SpreadStatus::ConfinedToObject,
            "2" | "room" | "confined to room of origin" => SpreadStatus::Room,
            "3" | "floor" | "confined to floor of origin" => SpreadStatus::Floor,
            "4" | "building" | "confined to building of origin" => SpreadStatus::Building,
            "5" | "beyond" | "extending beyond building of origin"
            | "extended beyond building of origin" | "beyond building of origin" => {
                SpreadStatus::Beyond
            }
            _ => return None,
        };
        Some(status)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpreadLevel {
    Room = 0,
    Floor = 1,
    Building = 2,
    Beyond = 3,
}

impl SpreadLevel {
    pub const ALL: [SpreadLevel; 4] = [
        SpreadLevel::Room,
        SpreadLevel::Floor,
        SpreadLevel::Building,
        SpreadLevel::Beyond,
    ];

    pub fn from_code(code: &str) -> Result<SpreadLevel> {
        match SpreadStatus::parse(code) {
            Some(SpreadStatus::Room) => Ok(SpreadLevel::Room),
            Some(SpreadStatus::Floor) => Ok(SpreadLevel::Floor),
            Some(SpreadStatus::Building) => Ok(SpreadLevel::Building),
            Some(SpreadStatus::Beyond) => Ok(SpreadLevel::Beyond),
            Some(SpreadStatus::ConfinedToObject) => Err(Error::Label(format!(
                "spread code `{code}` is confined to object of origin and should have been filtered"
            ))),
            None => Err(Error::Label(format!("unknown spread code `{code}`"))),
        }
    }

    /// Canonical textual code.
    pub fn code(self) -> &'static str {
        match self {
            SpreadLevel::Room => "confined to the room of origin",
            SpreadLevel::Floor => "confined to the floor of origin",
            SpreadLevel::Building => "confined to the building of origin",
            SpreadLevel::Beyond => "extending beyond the building of origin",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

pub fn spread_label(code: &str) -> Result<SpreadLevel> {
    SpreadLevel::from_code(code)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLevel {
    Low = 0,
    Moderate = 1,
    High = 2,
}

impl RiskLevel {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Per-severity injury coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjuryWeights {
    pub minor: f64,
    pub moderate: f64,
    pub severe: f64,
    pub critical: f64,
    pub fatal: f64,
}

impl Default for InjuryWeights {
    fn default() -> Self {
        InjuryWeights {
            minor: 0.003,
            moderate: 0.047,
            severe: 0.266,
            critical: 0.593,
            fatal: 1.0,
        }
    }
}

impl InjuryWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.minor, self.moderate, self.severe, self.critical, self.fatal];
        if w.windows(2).any(|p| p[0] >= p[1]) || w[0] < 0.0 || self.fatal != 1.0 {
            return Err(Error::Config(
                "injury weights must be non-negative, strictly increasing, with fatal = 1".into(),
            ));
        }
        Ok(())
    }
}

pub fn injury_index(injuries: &InjuryCounts, weights: &InjuryWeights) -> f64 {
    weights.minor * f64::from(injuries.minor)
        + weights.moderate * f64::from(injuries.moderate)
        + weights.severe * f64::from(injuries.severe)
        + weights.critical * f64::from(injuries.critical)
        + weights.fatal * f64::from(injuries.fatal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileCuts {
    pub lower: f64,
    pub upper: f64,
}

impl Default for QuantileCuts {
    fn default() -> Self {
        QuantileCuts {
            lower: 0.40,
            upper: 0.75,
        }
    }
}

impl QuantileCuts {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.lower && self.lower < self.upper && self.upper < 1.0) {
            return Err(Error::Config(format!(
                "quantile cuts must satisfy 0 < lower < upper < 1, got ({}, {})",
                self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// Empirical quantile by linear interpolation between order statistics
/// (`h = (n - 1) p`). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Cut points fitted on training values and reused for every later split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskThresholds {
    pub target: String,
    pub t_low: f64,
    pub t_high: f64,
    pub cuts: QuantileCuts,
    pub n_train: usize,
}

impl RiskThresholds {
    pub fn fit(target: &str, values: &[f64], cuts: QuantileCuts) -> Result<Self> {
        cuts.validate()?;
        if values.is_empty() {
            return Err(Error::Label(format!("no training values for {target}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Label(format!("non-finite value in {target}")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(RiskThresholds {
            target: target.to_string(),
            t_low: quantile_sorted(&sorted, cuts.lower),
            t_high: quantile_sorted(&sorted, cuts.upper),
            cuts,
            n_train: values.len(),
        })
    }

    /// Boundary values belong to the lower class.
    pub fn label(&self, v: f64) -> RiskLevel {
        if v <= self.t_low {
            RiskLevel::Low
        } else if v <= self.t_high {
            RiskLevel::Moderate
        } else {
            RiskLevel::High
        }
    }
}

pub fn quantile_levels(values: &[f64], cuts: QuantileCuts) -> Result<(Vec<RiskLevel>, RiskThresholds)> {
    let thresholds = RiskThresholds::fit("values", values, cuts)?;
    let labels = values.iter().map(|v| thresholds.label(*v)).collect();
    Ok((labels, thresholds))
}

/// Total property + content loss in 2022 dollars.
pub fn adjusted_loss(property_loss: f64, content_loss: f64, year: i32, cpi: &CpiTable) -> Result<f64> {
    if property_loss < 0.0 || content_loss < 0.0 {
        return Err(Error::Label("negative loss".into()));
    }
    adjust_to_2022(property_loss + content_loss, year, cpi)
}

pub fn loss_label(
    property_loss: f64,
    content_loss: f64,
    year: i32,
    cpi: &CpiTable,
    thresholds: &RiskThresholds,
) -> Result<RiskLevel> {
    Ok(thresholds.label(adjusted_loss(property_loss, content_loss, year, cpi)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Spread,
    Injury,
    Loss,
}

impl TargetKind {
    pub const ALL: [TargetKind; 3] = [TargetKind::Spread, TargetKind::Injury, TargetKind::Loss];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::Spread => "spread",
            TargetKind::Injury => "injury",
            TargetKind::Loss => "loss",
        }
    }

    pub fn parse(name: &str) -> Result<TargetKind> {
        TargetKind::ALL
            .into_iter()
            .find(|t| t.as_str() == name)
            .ok_or_else(|| Error::lookup("target", name))
    }

    pub fn n_classes(self) -> usize {
        match self {
            TargetKind::Spread => 4,
            TargetKind::Injury | TargetKind::Loss => 3,
        }
    }

    pub fn class_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            TargetKind::Spread => &["room", "floor", "building", "beyond"],
            _ => &["low", "moderate", "high"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

#[derive(Default, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelOptions {
    pub injury_weights: InjuryWeights,
    pub cuts: QuantileCuts,
    /// Drop incidents without injuries from the injury target instead of
    /// labeling them low.
    pub exclude_zero_injury: bool,
}


/// Class labels for one target. `None` marks incidents excluded from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub target: TargetKind,
    pub labels: Vec<Option<usize>>,
    pub thresholds: Option<RiskThresholds>,
}

/// Labels every incident for `target`, fitting quantile thresholds on the
/// `train` indices only.
pub fn derive_labels(
    incidents: &[IncidentRecord],
    train: &[usize],
    target: TargetKind,
    cpi: &CpiTable,
    options: &LabelOptions,
) -> Result<LabelSet> {
    match target {
        TargetKind::Spread => {
            let labels = incidents
                .iter()
                .map(|r| spread_label(&r.spread_code).map(|l| Some(l.index())))
                .collect::<Result<Vec<_>>>()?;
            Ok(LabelSet {
                target,
                labels,
                thresholds: None,
            })
        }
        TargetKind::Injury | TargetKind::Loss => {
            let raw: Vec<Option<f64>> = incidents
                .iter()
                .map(|r| match target {
                    TargetKind::Injury => {
                        let v = injury_index(&r.injuries, &options.injury_weights);
                        Ok((!(options.exclude_zero_injury && v == 0.0)).then_some(v))
                    }
                    _ => adjusted_loss(r.property_loss_usd, r.content_loss_usd, r.incident_year, cpi)
                        .map(Some),
                })
                .collect::<Result<_>>()?;
            let train_values: Vec<f64> = train.iter().filter_map(|&i| raw[i]).collect();
            let thresholds = RiskThresholds::fit(target.as_str(), &train_values, options.cuts)?;
            let labels = raw
                .iter()
                .map(|v| v.map(|v| thresholds.label(v).index()))
                .collect();
            Ok(LabelSet {
                target,
                labels,
                thresholds: Some(thresholds),
            })
        }
    }
}
