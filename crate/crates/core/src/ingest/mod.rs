//! Loading, validating, and joining incident- and geo-level tables.

mod cpi;
mod factors;
pub mod geo;
mod join;
mod record;
mod synthetic;

pub use cpi::{adjust_to_2022, CpiTable, REFERENCE_YEAR};
pub use factors::{
    FactorColumn, FactorKey, FactorRow, FactorTable, GeoLevel, HourlyWeather, WeatherObs,
};
pub use join::{join_factors, JoinedRow, JoinedTable, WeatherSource};
pub use record::{
    load_incidents, load_incidents_from_reader, write_incidents, write_incidents_file,
    FilterConfig, IncidentRecord, IncidentTable, InjuryCounts, LoadConfig, LoadReport, Presence,
    SchemaMapping, CATEGORICAL_FIELDS, INCIDENT_FIELDS, TIMESTAMP_FORMAT, UNKNOWN_LEVEL,
};
pub use synthetic::{
    covariate_range, generate_synthetic, ClassModel, ConsequenceConfig, EffectShape,
    OccurrenceConfig, SyntheticConfig, SyntheticCorpus,
};
