//! Seeded synthetic corpora with known occurrence effects and consequence
//! class probabilities.
//!
//! County-month incident counts are Poisson with mean
//! `units / 1e5 * base_rate * exp(state_effect + sum_i f_i(u_i))`, where `u_i`
//! is covariate `i` rescaled to `[0, 1]` over its generation range, so the
//! log rate is additive in the configured effects. Each incident's
//! consequence classes are drawn from `softmax(ln base_k + strength * k * s)`
//! where `s` is a fixed risk score over incident and local factors; observed
//! fields (spread code, injury counts, dollar losses) are then realized from
//! the drawn class.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::cpi::{CpiTable, REFERENCE_YEAR};
use super::factors::{
    FactorColumn, FactorKey, FactorRow, FactorTable, GeoLevel, HourlyWeather, WeatherObs,
};
use super::geo::{self, Region};
use super::record::{IncidentRecord, IncidentTable, InjuryCounts, Presence};
use crate::error::{Error, Result};
use crate::targets::{SpreadLevel, TargetKind};

/// Shape of one covariate's contribution to the log incidence rate, as a
/// function of the covariate rescaled to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectShape {
    Flat,
    Linear { slope: f64 },
    Sine { amplitude: f64, cycles: f64 },
}

impl EffectShape {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            EffectShape::Flat => 0.0,
            EffectShape::Linear { slope } => slope * u,
            EffectShape::Sine { amplitude, cycles } => amplitude * (2.0 * PI * cycles * u).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OccurrenceConfig {
    /// Expected monthly incidents for a county of average size with all
    /// effects at zero.
    pub incidents_per_county_month: f64,
    /// Effects keyed by factor column name; absent columns are flat.
    pub effects: BTreeMap<String, EffectShape>,
    pub state_effect_sd: f64,
}

impl Default for OccurrenceConfig {
    fn default() -> Self {
        let effects = [
            ("black_ratio", EffectShape::Linear { slope: 0.5 }),
            ("monthly_avg_temp", EffectShape::Linear { slope: -0.6 }),
            (
                "occupied_ratio",
                EffectShape::Sine {
                    amplitude: 0.25,
                    cycles: 1.0,
                },
            ),
            ("industrial_ratio", EffectShape::Linear { slope: 0.3 }),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        OccurrenceConfig {
            incidents_per_county_month: 7.0,
            effects,
            state_effect_sd: 0.2,
        }
    }
}

/// Conditional class model for one consequence target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    /// Class probabilities at a neutral risk score; must sum to 1.
    pub base_probs: Vec<f64>,
    /// Log-odds shift per class step per unit of risk score. Zero makes
    /// labels independent of every factor.
    pub strength: f64,
}

impl ClassModel {
    pub fn probs(&self, score: f64) -> Vec<f64> {
        let logits: Vec<f64> = self
            .base_probs
            .iter()
            .enumerate()
            .map(|(k, p)| p.ln() + self.strength * k as f64 * score)
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / sum).collect()
    }

    fn validate(&self, name: &str, n_classes: usize) -> Result<()> {
        if self.base_probs.len() != n_classes {
            return Err(Error::Config(format!(
                "{name}: expected {n_classes} class probabilities, got {}",
                self.base_probs.len()
            )));
        }
        let sum: f64 = self.base_probs.iter().sum();
        if self.base_probs.iter().any(|p| !(*p > 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "{name}: class probabilities must be positive and sum to 1 (sum = {sum})"
            )));
        }
        if !self.strength.is_finite() {
            return Err(Error::Config(format!("{name}: strength must be finite")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsequenceConfig {
    pub spread: ClassModel,
    pub injury: ClassModel,
    pub loss: ClassModel,
}

impl Default for ConsequenceConfig {
    fn default() -> Self {
        ConsequenceConfig {
            spread: ClassModel {
                base_probs: vec![0.50, 0.22, 0.18, 0.10],
                strength: 1.2,
            },
            injury: ClassModel {
                base_probs: vec![0.60, 0.25, 0.15],
                strength: 1.3,
            },
            loss: ClassModel {
                base_probs: vec![0.40, 0.35, 0.25],
                strength: 1.2,
            },
        }
    }
}

impl ConsequenceConfig {
    pub fn model(&self, target: TargetKind) -> &ClassModel {
        match target {
            TargetKind::Spread => &self.spread,
            TargetKind::Injury => &self.injury,
            TargetKind::Loss => &self.loss,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub states_per_region: usize,
    pub counties_per_state: usize,
    pub zips_per_county: usize,
    pub start_year: i32,
    pub n_years: usize,
    /// Probability an incident hour has an hourly weather observation.
    pub hourly_weather_coverage: f64,
    pub occurrence: OccurrenceConfig,
    pub consequences: ConsequenceConfig,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            states_per_region: 3,
            counties_per_state: 5,
            zips_per_county: 3,
            start_year: 2019,
            n_years: 4,
            hourly_weather_coverage: 0.9,
            occurrence: OccurrenceConfig::default(),
            consequences: ConsequenceConfig::default(),
        }
    }
}

const REGION_STATES: [(Region, [&str; 5]); 4] = [
    (Region::Northeast, ["NY", "MA", "CT", "PA", "NJ"]),
    (Region::Midwest, ["IL", "OH", "MN", "MI", "WI"]),
    (Region::South, ["AL", "GA", "TX", "FL", "NC"]),
    (Region::West, ["CA", "CO", "WA", "OR", "AZ"]),
];

/// Generation range of each factor column; occurrence effects see the
/// value rescaled over this range.
pub fn covariate_range(column: FactorColumn) -> (f64, f64) {
    match column {
        FactorColumn::BlackRatio => (0.0, 0.6),
        FactorColumn::SeniorRatio => (0.10, 0.30),
        FactorColumn::BachelorRatio => (0.10, 0.60),
        FactorColumn::UrbanRatio => (0.20, 1.0),
        FactorColumn::OccupiedRatio => (0.75, 0.98),
        FactorColumn::BuiltAfter1980Ratio => (0.20, 0.80),
        FactorColumn::TransportStorageRatio => (0.02, 0.10),
        FactorColumn::IndustrialRatio => (0.05, 0.25),
        FactorColumn::MedianRentUsd => (700.0, 2200.0),
        FactorColumn::MedianIncomeUsd => (35000.0, 110000.0),
        FactorColumn::BuildingUnits => (60000.0, 200000.0),
        FactorColumn::MonthlyAvgTemp => (-10.0, 35.0),
        FactorColumn::PalmerZ => (-5.0, 5.0),
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.states_per_region) {
            return Err(Error::Config("states_per_region must be in 1..=5".into()));
        }
        if self.counties_per_state == 0 || self.counties_per_state > 499 {
            return Err(Error::Config("counties_per_state must be in 1..=499".into()));
        }
        if self.zips_per_county == 0 || self.zips_per_county > 9 {
            return Err(Error::Config("zips_per_county must be in 1..=9".into()));
        }
        if self.n_years == 0 {
            return Err(Error::Config("n_years must be positive".into()));
        }
        let cpi = CpiTable::cpi_u_2012_2022();
        for y in self.years() {
            cpi.get(y)
                .map_err(|_| Error::Config(format!("year {y} outside the bundled CPI table")))?;
        }
        if !(0.0..=1.0).contains(&self.hourly_weather_coverage) {
            return Err(Error::Config("hourly_weather_coverage must be in [0, 1]".into()));
        }
        let occ = &self.occurrence;
        if !(occ.incidents_per_county_month > 0.0) || !(occ.state_effect_sd >= 0.0) {
            return Err(Error::Config(
                "incidents_per_county_month must be positive and state_effect_sd non-negative"
                    .into(),
            ));
        }
        for name in occ.effects.keys() {
            if FactorColumn::from_name(name).is_none() {
                return Err(Error::Config(format!("unknown effect covariate `{name}`")));
            }
        }
        for target in TargetKind::ALL {
            self.consequences
                .model(target)
                .validate(target.as_str(), target.n_classes())?;
        }
        Ok(())
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start_year..self.start_year + self.n_years as i32
    }

    fn effect(&self, column: FactorColumn) -> EffectShape {
        self.occurrence
            .effects
            .get(column.as_str())
            .copied()
            .unwrap_or(EffectShape::Flat)
    }

    /// Log-rate contribution of all covariate effects for one county-month.
    pub fn log_effect(&self, row: impl Fn(FactorColumn) -> f64) -> f64 {
        FactorColumn::OCCURRENCE_COVARIATES
            .iter()
            .map(|&c| {
                let (lo, hi) = covariate_range(c);
                self.effect(c).eval(((row(c) - lo) / (hi - lo)).clamp(0.0, 1.0))
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub incidents: IncidentTable,
    pub zip_factors: FactorTable,
    pub county_factors: FactorTable,
    pub weather: HourlyWeather,
    pub cpi: CpiTable,
    pub state_effects: BTreeMap<String, f64>,
    /// Latent consequence classes per incident, indexed by
    /// `[spread, injury, loss]`.
    pub latent_classes: Vec<[usize; 3]>,
    /// Rate per 100,000 units implied by `incidents_per_county_month` for a
    /// county of average size with zero effects.
    pub base_rate: f64,
}

struct County {
    fips: String,
    state: String,
    zips: Vec<String>,
    units: f64,
    annual: FactorRow,
    temp_mean: f64,
}

pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<SyntheticCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cpi = CpiTable::cpi_u_2012_2022();

    let mean_units = {
        let (lo, hi) = covariate_range(FactorColumn::BuildingUnits);
        0.5 * (lo + hi)
    };
    let base_rate = config.occurrence.incidents_per_county_month * 1e5 / mean_units;

    let state_normal = Normal::new(0.0, config.occurrence.state_effect_sd.max(1e-300))
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut counties = Vec::new();
    let mut state_effects = BTreeMap::new();
    let mut zip_counter = 0usize;
    for (region, states) in REGION_STATES {
        for state in states.iter().take(config.states_per_region) {
            let effect = if config.occurrence.state_effect_sd > 0.0 {
                state_normal.sample(&mut rng)
            } else {
                0.0
            };
            state_effects.insert(state.to_string(), effect);
            let prefix = geo::state_fips(state).expect("bundled state");
            for j in 0..config.counties_per_state {
                let fips = format!("{prefix}{:03}", 2 * j + 1);
                let zips = (0..config.zips_per_county)
                    .map(|_| {
                        zip_counter += 1;
                        format!("{:05}", 10000 + zip_counter)
                    })
                    .collect();
                let mut annual = FactorRow::default();
                for c in FactorColumn::ALL {
                    if !c.is_monthly() {
                        let (lo, hi) = covariate_range(c);
                        annual.set(c, rng.random_range(lo..hi));
                    }
                }
                let temp_mean = match region {
                    Region::Northeast | Region::Midwest => rng.random_range(6.0..12.0),
                    Region::South => rng.random_range(15.0..21.0),
                    Region::West => rng.random_range(9.0..17.0),
                };
                counties.push(County {
                    fips,
                    state: state.to_string(),
                    zips,
                    units: annual.get(FactorColumn::BuildingUnits).unwrap().round(),
                    annual,
                    temp_mean,
                });
            }
        }
    }

    let mut county_factors = FactorTable::new(GeoLevel::County);
    let mut zip_factors = FactorTable::new(GeoLevel::Zip);
    let mut weather = HourlyWeather::default();
    let mut records = Vec::new();
    let mut latent_classes = Vec::new();
    let palmer = Normal::new(0.0, 1.5).unwrap();
    let jitter = Normal::new(0.0, 0.02).unwrap();

    for county in &counties {
        for year in config.years() {
            let mut annual = county.annual.clone();
            annual.set(FactorColumn::BuildingUnits, county.units);
            county_factors.insert(key(&county.fips, year, None), annual.clone())?;
            for zip in &county.zips {
                let mut zrow = FactorRow::default();
                for c in FactorColumn::ALL {
                    let Some(v) = annual.get(c) else { continue };
                    let v = if c.is_ratio() {
                        (v + jitter.sample(&mut rng)).clamp(0.0, 1.0)
                    } else if c == FactorColumn::BuildingUnits {
                        (v / county.zips.len() as f64).round()
                    } else {
                        v * (1.0 + jitter.sample(&mut rng))
                    };
                    zrow.set(c, v);
                }
                zip_factors.insert(key(zip, year, None), zrow)?;
            }

            for month in 1..=12u32 {
                let seasonal = 11.0 * (2.0 * PI * (month as f64 - 7.0) / 12.0).cos();
                let temp = county.temp_mean + seasonal + rng.random_range(-1.5..1.5);
                let pz: f64 = palmer.sample(&mut rng);
                let pz = pz.clamp(-4.9, 4.9);
                let mut mrow = FactorRow::default();
                mrow.set(FactorColumn::MonthlyAvgTemp, round2(temp));
                mrow.set(FactorColumn::PalmerZ, round2(pz));
                county_factors.insert(key(&county.fips, year, Some(month)), mrow.clone())?;
                for zip in &county.zips {
                    zip_factors.insert(key(zip, year, Some(month)), mrow.clone())?;
                }

                let lookup = |c: FactorColumn| {
                    if c.is_monthly() {
                        mrow.get(c).unwrap()
                    } else {
                        annual.get(c).unwrap()
                    }
                };
                let log_rate = base_rate.ln()
                    + state_effects[&county.state]
                    + config.log_effect(lookup);
                let lambda = county.units / 1e5 * log_rate.exp();
                let count = Poisson::new(lambda)
                    .map_err(|e| Error::Config(e.to_string()))?
                    .sample(&mut rng) as usize;

                for k in 0..count {
                    let ctx = IncidentContext {
                        county,
                        year,
                        month,
                        seq: k,
                        monthly_temp: temp,
                        zip_factors: &zip_factors,
                    };
                    let (record, obs, latent) = draw_incident(&ctx, config, &cpi, &mut rng);
                    if let Some(obs) = obs {
                        let zip = record.zip.as_deref().unwrap();
                        if weather.get(zip, record.timestamp).is_none() {
                            weather.insert(zip, record.timestamp, obs)?;
                        }
                    }
                    records.push(record);
                    latent_classes.push(latent);
                }
            }
        }
    }

    Ok(SyntheticCorpus {
        incidents: IncidentTable { records },
        zip_factors,
        county_factors,
        weather,
        cpi,
        state_effects,
        latent_classes,
        base_rate,
    })
}

fn key(geo: &str, year: i32, month: Option<u32>) -> FactorKey {
    FactorKey {
        geo_id: geo.to_string(),
        year,
        month,
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

struct IncidentContext<'a> {
    county: &'a County,
    year: i32,
    month: u32,
    seq: usize,
    monthly_temp: f64,
    zip_factors: &'a FactorTable,
}

fn pick<'a, R: Rng>(rng: &mut R, items: &[(&'a str, f64)]) -> &'a str {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut u = rng.random::<f64>() * total;
    for (item, w) in items {
        if u < *w {
            return item;
        }
        u -= w;
    }
    items[items.len() - 1].0
}

fn draw_class<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let mut u = rng.random::<f64>();
    for (k, p) in probs.iter().enumerate() {
        if u < *p {
            return k;
        }
        u -= p;
    }
    probs.len() - 1
}

fn presence<R: Rng>(rng: &mut R, present: f64, absent: f64) -> Presence {
    let u = rng.random::<f64>();
    if u < present {
        Presence::Present
    } else if u < present + absent {
        Presence::Absent
    } else {
        Presence::Unknown
    }
}

fn draw_incident<R: Rng>(
    ctx: &IncidentContext<'_>,
    config: &SyntheticConfig,
    cpi: &CpiTable,
    rng: &mut R,
) -> (IncidentRecord, Option<WeatherObs>, [usize; 3]) {
    let county = ctx.county;
    let zip = county.zips[rng.random_range(0..county.zips.len())].clone();
    let days = days_in_month(ctx.year, ctx.month);
    let day = rng.random_range(1..=days);
    let hour = rng.random_range(0..24u32);
    let timestamp = NaiveDate::from_ymd_opt(ctx.year, ctx.month, day)
        .unwrap()
        .and_hms_opt(hour, 0, 0)
        .unwrap();

    let property_use = pick(
        rng,
        &[
            ("419", 0.45),
            ("429", 0.20),
            ("500", 0.10),
            ("599", 0.08),
            ("700", 0.07),
            ("880", 0.05),
            ("161", 0.05),
        ],
    );
    let residential = matches!(property_use, "419" | "429");
    let stories_above = match property_use {
        "419" => rng.random_range(1..=3),
        "429" => rng.random_range(2..=12),
        _ => rng.random_range(1..=6),
    };
    let stories_below = rng.random_range(0..=1);
    let sqft_median: f64 = if residential { 1800.0 } else { 9000.0 };
    let total_sqft = LogNormal::new(sqft_median.ln(), 0.6)
        .unwrap()
        .sample(rng)
        .round();
    let detector_present = presence(rng, 0.68, 0.22);
    let aes_present = if residential {
        presence(rng, 0.08, 0.82)
    } else {
        presence(rng, 0.40, 0.50)
    };
    let ignition_cause = pick(
        rng,
        &[
            ("unintentional", 0.5),
            ("equipment failure", 0.2),
            ("intentional", 0.1),
            ("act of nature", 0.05),
            ("under investigation", 0.15),
        ],
    );
    let fire_origin_location = pick(
        rng,
        &[
            ("kitchen", 0.30),
            ("bedroom", 0.15),
            ("living room", 0.12),
            ("attic", 0.08),
            ("garage", 0.10),
            ("storage", 0.10),
            ("laundry", 0.15),
        ],
    );
    let first_ignited_item = pick(
        rng,
        &[
            ("cooking materials", 0.25),
            ("bedding", 0.10),
            ("upholstered furniture", 0.10),
            ("electrical wire", 0.20),
            ("structural member", 0.20),
            ("trash", 0.15),
        ],
    );
    let first_ignited_material = pick(
        rng,
        &[
            ("wood", 0.35),
            ("plastic", 0.20),
            ("fabric", 0.15),
            ("paper", 0.10),
            ("flammable liquid", 0.10),
            ("gas", 0.10),
        ],
    );
    let heat_source = pick(
        rng,
        &[
            ("cooking equipment", 0.3),
            ("electrical arcing", 0.25),
            ("smoking materials", 0.1),
            ("open flame", 0.2),
            ("hot ember", 0.15),
        ],
    );
    let ignition_factor = pick(
        rng,
        &[
            ("misuse of material", 0.2),
            ("mechanical failure", 0.2),
            ("electrical failure", 0.25),
            ("heat source too close", 0.2),
            ("unattended equipment", 0.15),
        ],
    );
    let human_factor = pick(
        rng,
        &[
            ("none", 0.70),
            ("asleep", 0.10),
            ("impaired", 0.08),
            ("age factor", 0.07),
            ("unattended person", 0.05),
        ],
    );
    let primary_action = pick(
        rng,
        &[
            ("extinguish", 0.6),
            ("search", 0.1),
            ("ventilate", 0.1),
            ("salvage", 0.1),
            ("investigate", 0.1),
        ],
    );
    let growth_factor = pick(
        rng,
        &[
            ("none", 0.70),
            ("delayed detection", 0.12),
            ("trouble finding location", 0.06),
            ("wind", 0.06),
            ("hoarding", 0.06),
        ],
    );
    let urban = ctx
        .zip_factors
        .annual(&zip, ctx.year)
        .and_then(|r| r.get(FactorColumn::UrbanRatio))
        .unwrap_or(0.5);
    let response_minutes =
        round2(LogNormal::new((9.0 - 4.0 * urban).ln(), 0.35).unwrap().sample(rng));

    let wind_speed: f64 = LogNormal::new(1.2, 0.5).unwrap().sample(rng);
    let obs = WeatherObs {
        temperature: Some(round2(
            ctx.monthly_temp + 4.0 * (2.0 * PI * (hour as f64 - 15.0) / 24.0).cos()
                + rng.random_range(-2.0..2.0),
        )),
        relative_humidity: Some(round2(rng.random_range(20.0..95.0))),
        wind_speed: Some(round2(wind_speed)),
        precipitation: Some(if rng.random::<f64>() < 0.8 {
            0.0
        } else {
            round2(rng.random_range(0.1..8.0))
        }),
    };
    let observed = rng.random::<f64>() < config.hourly_weather_coverage;

    let income = ctx
        .zip_factors
        .annual(&zip, ctx.year)
        .and_then(|r| r.get(FactorColumn::MedianIncomeUsd))
        .unwrap_or(70000.0);
    let resp_dev = response_minutes - 7.0;

    let spread_score = match detector_present {
        Presence::Absent => 0.8,
        _ => 0.0,
    } + match aes_present {
        Presence::Present => -0.8,
        Presence::Absent => 0.3,
        Presence::Unknown => 0.0,
    } + 0.12 * resp_dev
        + match first_ignited_material {
            "flammable liquid" => 0.9,
            "gas" => 0.6,
            "wood" => 0.2,
            _ => 0.0,
        }
        + match growth_factor {
            "delayed detection" => 0.8,
            "hoarding" => 0.6,
            "wind" => 0.5,
            _ => 0.0,
        }
        + 0.15 * (wind_speed - 3.5)
        - 0.45;

    let injury_score = match human_factor {
        "asleep" => 1.1,
        "impaired" => 0.9,
        "age factor" => 0.7,
        "unattended person" => 0.3,
        _ => 0.0,
    } + match detector_present {
        Presence::Absent => 0.7,
        _ => 0.0,
    } + if hour < 6 { 0.5 } else { 0.0 }
        + if fire_origin_location == "bedroom" { 0.4 } else { 0.0 }
        + 0.08 * resp_dev
        - 0.4;

    let loss_score = 0.6 * (total_sqft / sqft_median).ln()
        + 0.08 * f64::from(stories_above)
        + 0.10 * resp_dev
        + match property_use {
            "700" => 0.6,
            "880" => 0.5,
            "500" => 0.3,
            _ => 0.0,
        }
        + match aes_present {
            Presence::Present => -0.6,
            _ => 0.2,
        }
        + 0.8 * ((income - 70000.0) / 40000.0)
        + match first_ignited_material {
            "flammable liquid" => 0.5,
            _ => 0.0,
        }
        - 0.3;

    let cons = &config.consequences;
    let spread_class = draw_class(rng, &cons.spread.probs(spread_score));
    let injury_class = draw_class(rng, &cons.injury.probs(injury_score));
    let loss_class = draw_class(rng, &cons.loss.probs(loss_score));

    let injuries = match injury_class {
        0 => InjuryCounts::default(),
        1 => {
            if rng.random::<f64>() < 0.7 {
                InjuryCounts {
                    minor: rng.random_range(1..=2),
                    ..Default::default()
                }
            } else {
                InjuryCounts {
                    moderate: 1,
                    ..Default::default()
                }
            }
        }
        _ => match rng.random_range(0..3) {
            0 => InjuryCounts {
                severe: rng.random_range(1..=2),
                ..Default::default()
            },
            1 => InjuryCounts {
                critical: 1,
                minor: rng.random_range(0..=1),
                ..Default::default()
            },
            _ => InjuryCounts {
                fatal: 1,
                ..Default::default()
            },
        },
    };

    let real_loss: f64 = match loss_class {
        0 => LogNormal::new(1500f64.ln(), 0.7),
        1 => LogNormal::new(15000f64.ln(), 0.5),
        _ => LogNormal::new(120000f64.ln(), 0.7),
    }
    .unwrap()
    .sample(rng);
    let deflator = cpi.get(ctx.year).unwrap() / cpi.get(REFERENCE_YEAR).unwrap();
    let nominal = real_loss * deflator;
    let property_loss_usd = (0.75 * nominal).round();
    let content_loss_usd = (0.25 * nominal).round();

    let record = IncidentRecord {
        incident_id: format!("{}-{}{:02}-{:04}", county.fips, ctx.year, ctx.month, ctx.seq),
        state: county.state.clone(),
        county_fips: county.fips.clone(),
        zip: Some(zip),
        timestamp,
        property_use: property_use.into(),
        stories_above,
        stories_below,
        total_sqft,
        detector_present,
        aes_present,
        ignition_cause: ignition_cause.into(),
        fire_origin_location: fire_origin_location.into(),
        first_ignited_item: first_ignited_item.into(),
        first_ignited_material: first_ignited_material.into(),
        heat_source: heat_source.into(),
        ignition_factor: ignition_factor.into(),
        human_factor: human_factor.into(),
        primary_action: primary_action.into(),
        growth_factor: growth_factor.into(),
        response_minutes,
        spread_code: SpreadLevel::ALL[spread_class].code().into(),
        injuries,
        property_loss_usd,
        content_loss_usd,
        incident_year: timestamp.year(),
    };
    (
        record,
        observed.then_some(obs),
        [spread_class, injury_class, loss_class],
    )
}

fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    };
    NaiveDate::from_ymd_opt(ny, nm, 1)
        .unwrap()
        .pred_opt()
        .unwrap()
        .day()
}
