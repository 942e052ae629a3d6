//! Incident records and validated CSV loading.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::geo;
use crate::error::{Error, Result};
use crate::targets::{SpreadLevel, SpreadStatus};

/// Reserved level that absorbs empty and out-of-vocabulary categorical codes.
pub const UNKNOWN_LEVEL: &str = "unknown";

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Presence {
    Present,
    Absent,
    Unknown,
}

impl Presence {
    pub fn as_str(self) -> &'static str {
        match self {
            Presence::Present => "present",
            Presence::Absent => "absent",
            Presence::Unknown => "unknown",
        }
    }

    fn parse(raw: &str) -> Presence {
        match raw.trim().to_ascii_lowercase().as_str() {
            "present" | "yes" | "y" | "1" | "true" => Presence::Present,
            "absent" | "no" | "n" | "0" | "false" => Presence::Absent,
            _ => Presence::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjuryCounts {
    pub minor: u32,
    pub moderate: u32,
    pub severe: u32,
    pub critical: u32,
    pub fatal: u32,
}

impl InjuryCounts {
    pub fn total(&self) -> u32 {
        self.minor + self.moderate + self.severe + self.critical + self.fatal
    }
}

impl std::ops::Add for InjuryCounts {
    type Output = InjuryCounts;

    fn add(self, rhs: InjuryCounts) -> InjuryCounts {
        InjuryCounts {
            minor: self.minor + rhs.minor,
            moderate: self.moderate + rhs.moderate,
            severe: self.severe + rhs.severe,
            critical: self.critical + rhs.critical,
            fatal: self.fatal + rhs.fatal,
        }
    }
}

/// One building-fire event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub incident_id: String,
    pub state: String,
    pub county_fips: String,
    /// `None` when the report carries no usable ZIP; such incidents are
    /// flagged at join time rather than imputed.
    pub zip: Option<String>,
    pub timestamp: NaiveDateTime,
    pub property_use: String,
    pub stories_above: u32,
    pub stories_below: u32,
    pub total_sqft: f64,
    pub detector_present: Presence,
    pub aes_present: Presence,
    pub ignition_cause: String,
    pub fire_origin_location: String,
    pub first_ignited_item: String,
    pub first_ignited_material: String,
    pub heat_source: String,
    pub ignition_factor: String,
    pub human_factor: String,
    pub primary_action: String,
    pub growth_factor: String,
    pub response_minutes: f64,
    pub spread_code: String,
    pub injuries: InjuryCounts,
    pub property_loss_usd: f64,
    pub content_loss_usd: f64,
    pub incident_year: i32,
}

impl IncidentRecord {
    pub fn month(&self) -> u32 {
        self.timestamp.month()
    }

    pub fn hour(&self) -> u32 {
        self.timestamp.hour()
    }

    /// Checks the record-level invariants, returning the rejection reason.
    pub fn check_invariants(&self) -> std::result::Result<(), &'static str> {
        if !geo::is_digits(&self.county_fips, 5) {
            return Err("invalid county fips");
        }
        if let Some(zip) = &self.zip {
            if !geo::is_digits(zip, 5) {
                return Err("invalid zip");
            }
        }
        match geo::state_fips(&self.state) {
            Some(prefix) if self.county_fips.starts_with(prefix) => {}
            Some(_) => return Err("state/county mismatch"),
            None => return Err("unknown state"),
        }
        if self.timestamp.year() != self.incident_year {
            return Err("year mismatch");
        }
        let dollars = [self.property_loss_usd, self.content_loss_usd];
        if dollars.iter().any(|d| *d < 0.0) {
            return Err("negative dollars");
        }
        if self.total_sqft < 0.0 || self.response_minutes < 0.0 {
            return Err("negative measurement");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FieldKind {
    Required,
    Optional,
}

/// Logical incident fields in canonical column order.
pub const INCIDENT_FIELDS: &[&str] = &[
    "incident_id",
    "state",
    "county_fips",
    "zip",
    "timestamp",
    "property_use",
    "stories_above",
    "stories_below",
    "total_sqft",
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
    "response_minutes",
    "spread_code",
    "injuries_minor",
    "injuries_moderate",
    "injuries_severe",
    "injuries_critical",
    "injuries_fatal",
    "property_loss_usd",
    "content_loss_usd",
    "incident_year",
];

/// Categorical incident factors subject to vocabulary normalization.
pub const CATEGORICAL_FIELDS: &[&str] = &[
    "property_use",
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

fn field_kind(field: &str) -> FieldKind {
    match field {
        "incident_id" | "state" | "county_fips" | "zip" | "timestamp" | "property_use"
        | "spread_code" | "injuries_minor" | "injuries_moderate" | "injuries_severe"
        | "injuries_critical" | "injuries_fatal" | "property_loss_usd" | "content_loss_usd"
        | "incident_year" => FieldKind::Required,
        _ => FieldKind::Optional,
    }
}

/// Maps logical field names onto the header names of a particular export.
/// Fields without an entry use their logical name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SchemaMapping {
    pub columns: BTreeMap<String, String>,
}

impl SchemaMapping {
    pub fn header_for<'a>(&'a self, field: &'a str) -> &'a str {
        self.columns.get(field).map(String::as_str).unwrap_or(field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Spread codes excluded outright, compared case-insensitively.
    pub excluded_spread_codes: Vec<String>,
    /// When set, only these raw property-use codes are kept.
    pub allowed_property_uses: Option<Vec<String>>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            excluded_spread_codes: vec!["confined to object of origin".into(), "1".into()],
            allowed_property_uses: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadConfig {
    pub schema: SchemaMapping,
    pub filter: FilterConfig,
    /// Known codes per categorical field; codes outside the list become
    /// [`UNKNOWN_LEVEL`].
    pub vocabulary: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_in: usize,
    pub rows_kept: usize,
    pub rejects: BTreeMap<String, usize>,
}

impl LoadReport {
    fn reject(&mut self, reason: impl Into<String>) {
        *self.rejects.entry(reason.into()).or_default() += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IncidentTable {
    pub records: Vec<IncidentRecord>,
}

impl IncidentTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

enum RowOutcome {
    Kept(Box<IncidentRecord>),
    Unparseable(String),
    Rejected(&'static str),
    Filtered(&'static str),
}

pub fn load_incidents(path: &Path, config: &LoadConfig) -> Result<(IncidentTable, LoadReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_incidents_from_reader(file, config)
}

pub fn load_incidents_from_reader<R: Read>(
    reader: R,
    config: &LoadConfig,
) -> Result<(IncidentTable, LoadReport)> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut positions: BTreeMap<&str, usize> = BTreeMap::new();
    let mut missing = Vec::new();
    for field in INCIDENT_FIELDS {
        let header = config.schema.header_for(field);
        match headers.iter().position(|h| h.trim() == header) {
            Some(pos) => {
                positions.insert(field, pos);
            }
            None if field_kind(field) == FieldKind::Required => missing.push(header.to_string()),
            None => {}
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "missing required columns: {}",
            missing.join(", ")
        )));
    }

    let vocab: BTreeMap<&str, BTreeSet<&str>> = config
        .vocabulary
        .iter()
        .map(|(k, v)| (k.as_str(), v.iter().map(String::as_str).collect()))
        .collect();

    let mut report = LoadReport::default();
    let mut records = Vec::new();
    let mut unparseable = 0usize;
    for row in csv.records() {
        report.rows_in += 1;
        let row = match row {
            Ok(r) => r,
            Err(_) => {
                unparseable += 1;
                report.reject("unparseable row");
                continue;
            }
        };
        let get = |field: &str| -> Option<&str> {
            positions
                .get(field)
                .and_then(|&p| row.get(p))
                .map(str::trim)
        };
        match parse_row(&get, config, &vocab) {
            RowOutcome::Kept(rec) => records.push(*rec),
            RowOutcome::Unparseable(reason) => {
                unparseable += 1;
                report.reject(reason);
            }
            RowOutcome::Rejected(reason) => report.reject(reason),
            RowOutcome::Filtered(reason) => report.reject(format!("filtered: {reason}")),
        }
    }
    if report.rows_in > 0 && unparseable * 2 > report.rows_in {
        return Err(Error::TooManyFailures {
            failed: unparseable,
            total: report.rows_in,
        });
    }
    report.rows_kept = records.len();
    Ok((IncidentTable { records }, report))
}

fn parse_row<'r>(
    get: &dyn Fn(&str) -> Option<&'r str>,
    config: &LoadConfig,
    vocab: &BTreeMap<&str, BTreeSet<&str>>,
) -> RowOutcome {
    macro_rules! try_parse {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(reason) => return RowOutcome::Unparseable(reason),
            }
        };
    }
    let text = |field: &str| get(field).unwrap_or("").to_string();
    let category = |field: &str| {
        let raw = get(field).unwrap_or("");
        if raw.is_empty() {
            return UNKNOWN_LEVEL.to_string();
        }
        match vocab.get(field) {
            Some(known) if !known.contains(raw) => UNKNOWN_LEVEL.to_string(),
            _ => raw.to_string(),
        }
    };

    let incident_id = text("incident_id");
    if incident_id.is_empty() {
        return RowOutcome::Unparseable("unparseable incident_id".into());
    }
    let timestamp = try_parse!(parse_timestamp(get("timestamp").unwrap_or("")));
    let incident_year = try_parse!(parse_int(get, "incident_year"));
    let injuries = SignedInjuries {
        minor: try_parse!(parse_count(get, "injuries_minor")),
        moderate: try_parse!(parse_count(get, "injuries_moderate")),
        severe: try_parse!(parse_count(get, "injuries_severe")),
        critical: try_parse!(parse_count(get, "injuries_critical")),
        fatal: try_parse!(parse_count(get, "injuries_fatal")),
    };
    let (Some(stories_above), Some(stories_below)) = (
        try_parse!(parse_opt_count(get, "stories_above")),
        try_parse!(parse_opt_count(get, "stories_below")),
    ) else {
        return RowOutcome::Rejected("negative count");
    };
    let Some(injuries) = injuries.checked() else {
        return RowOutcome::Rejected("negative count");
    };

    let zip = get("zip").filter(|z| !z.is_empty()).map(str::to_string);
    let record = IncidentRecord {
        incident_id,
        state: text("state").to_ascii_uppercase(),
        county_fips: text("county_fips"),
        zip,
        timestamp,
        property_use: category("property_use"),
        stories_above,
        stories_below,
        total_sqft: try_parse!(parse_opt_f64(get, "total_sqft")),
        detector_present: Presence::parse(get("detector_present").unwrap_or("")),
        aes_present: Presence::parse(get("aes_present").unwrap_or("")),
        ignition_cause: category("ignition_cause"),
        fire_origin_location: category("fire_origin_location"),
        first_ignited_item: category("first_ignited_item"),
        first_ignited_material: category("first_ignited_material"),
        heat_source: category("heat_source"),
        ignition_factor: category("ignition_factor"),
        human_factor: category("human_factor"),
        primary_action: category("primary_action"),
        growth_factor: category("growth_factor"),
        response_minutes: try_parse!(parse_opt_f64(get, "response_minutes")),
        spread_code: text("spread_code"),
        injuries,
        property_loss_usd: try_parse!(parse_f64(get, "property_loss_usd")),
        content_loss_usd: try_parse!(parse_f64(get, "content_loss_usd")),
        incident_year: incident_year as i32,
    };

    if let Err(reason) = record.check_invariants() {
        return RowOutcome::Rejected(reason);
    }

    let spread = record.spread_code.to_ascii_lowercase();
    if config
        .filter
        .excluded_spread_codes
        .iter()
        .any(|c| c.eq_ignore_ascii_case(&spread))
        || SpreadStatus::parse(&record.spread_code) == Some(SpreadStatus::ConfinedToObject)
    {
        return RowOutcome::Filtered("confined to object of origin");
    }
    if SpreadLevel::from_code(&record.spread_code).is_err() {
        return RowOutcome::Rejected("unknown spread code");
    }
    if let Some(allowed) = &config.filter.allowed_property_uses {
        let raw = get("property_use").unwrap_or("");
        if !allowed.iter().any(|a| a == raw) {
            return RowOutcome::Filtered("property use");
        }
    }
    RowOutcome::Kept(Box::new(record))
}

// Signed intermediate form so negative counts surface as invariant rejects
// rather than parse failures.
struct SignedInjuries {
    minor: i64,
    moderate: i64,
    severe: i64,
    critical: i64,
    fatal: i64,
}

impl SignedInjuries {
    fn checked(self) -> Option<InjuryCounts> {
        let c = |v: i64| u32::try_from(v).ok();
        Some(InjuryCounts {
            minor: c(self.minor)?,
            moderate: c(self.moderate)?,
            severe: c(self.severe)?,
            critical: c(self.critical)?,
            fatal: c(self.fatal)?,
        })
    }
}

fn parse_timestamp(raw: &str) -> std::result::Result<NaiveDateTime, String> {
    const FORMATS: &[&str] = &[
        "%Y-%m-%d %H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%dT%H:%M:%S",
        "%m/%d/%Y %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .and_then(|ts| ts.with_minute(0)?.with_second(0)?.with_nanosecond(0))
        .ok_or_else(|| "unparseable timestamp".to_string())
}

fn parse_int<'r>(get: &dyn Fn(&str) -> Option<&'r str>, field: &str) -> std::result::Result<i64, String> {
    get(field)
        .and_then(|v| v.parse::<i64>().ok())
        .ok_or_else(|| format!("unparseable {field}"))
}

fn parse_count<'r>(get: &dyn Fn(&str) -> Option<&'r str>, field: &str) -> std::result::Result<i64, String> {
    match get(field) {
        Some("") | None => Ok(0),
        Some(v) => v.parse::<i64>().map_err(|_| format!("unparseable {field}")),
    }
}

fn parse_opt_count<'r>(
    get: &dyn Fn(&str) -> Option<&'r str>,
    field: &str,
) -> std::result::Result<Option<u32>, String> {
    parse_count(get, field).map(|v| u32::try_from(v).ok())
}

fn parse_f64<'r>(get: &dyn Fn(&str) -> Option<&'r str>, field: &str) -> std::result::Result<f64, String> {
    get(field)
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("unparseable {field}"))
}

fn parse_opt_f64<'r>(
    get: &dyn Fn(&str) -> Option<&'r str>,
    field: &str,
) -> std::result::Result<f64, String> {
    match get(field) {
        Some("") | None => Ok(0.0),
        Some(_) => parse_f64(get, field),
    }
}

/// Writes records with canonical headers, readable by
/// [`load_incidents_from_reader`] under the default schema.
pub fn write_incidents<W: Write>(writer: W, records: &[IncidentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(INCIDENT_FIELDS)?;
    for r in records {
        w.write_record([
            r.incident_id.clone(),
            r.state.clone(),
            r.county_fips.clone(),
            r.zip.clone().unwrap_or_default(),
            r.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            r.property_use.clone(),
            r.stories_above.to_string(),
            r.stories_below.to_string(),
            r.total_sqft.to_string(),
            r.detector_present.as_str().to_string(),
            r.aes_present.as_str().to_string(),
            r.ignition_cause.clone(),
            r.fire_origin_location.clone(),
            r.first_ignited_item.clone(),
            r.first_ignited_material.clone(),
            r.heat_source.clone(),
            r.ignition_factor.clone(),
            r.human_factor.clone(),
            r.primary_action.clone(),
            r.growth_factor.clone(),
            r.response_minutes.to_string(),
            r.spread_code.clone(),
            r.injuries.minor.to_string(),
            r.injuries.moderate.to_string(),
            r.injuries.severe.to_string(),
            r.injuries.critical.to_string(),
            r.injuries.fatal.to_string(),
            r.property_loss_usd.to_string(),
            r.content_loss_usd.to_string(),
            r.incident_year.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<incident writer>", e))?;
    Ok(())
}

pub fn write_incidents_file(path: &Path, records: &[IncidentRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_incidents(file, records)
}
