//! State postal codes, FIPS prefixes, and Census regions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Northeast,
    Midwest,
    South,
    West,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::Northeast,
        Region::Midwest,
        Region::South,
        Region::West,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Northeast => "northeast",
            Region::Midwest => "midwest",
            Region::South => "south",
            Region::West => "west",
        }
    }
}

// (postal code, FIPS, region)
const STATES: &[(&str, &str, Region)] = &[
    ("AL", "01", Region::South),
    ("AK", "02", Region::West),
    ("AZ", "04", Region::West),
    ("AR", "05", Region::South),
    ("CA", "06", Region::West),
    ("CO", "08", Region::West),
    ("CT", "09", Region::Northeast),
    ("DE", "10", Region::South),
    ("DC", "11", Region::South),
    ("FL", "12", Region::South),
    ("GA", "13", Region::South),
    ("HI", "15", Region::West),
    ("ID", "16", Region::West),
    ("IL", "17", Region::Midwest),
    ("IN", "18", Region::Midwest),
    ("IA", "19", Region::Midwest),
    ("KS", "20", Region::Midwest),
    ("KY", "21", Region::South),
    ("LA", "22", Region::South),
    ("ME", "23", Region::Northeast),
    ("MD", "24", Region::South),
    ("MA", "25", Region::Northeast),
    ("MI", "26", Region::Midwest),
    ("MN", "27", Region::Midwest),
    ("MS", "28", Region::South),
    ("MO", "29", Region::Midwest),
    ("MT", "30", Region::West),
    ("NE", "31", Region::Midwest),
    ("NV", "32", Region::West),
    ("NH", "33", Region::Northeast),
    ("NJ", "34", Region::Northeast),
    ("NM", "35", Region::West),
    ("NY", "36", Region::Northeast),
    ("NC", "37", Region::South),
    ("ND", "38", Region::Midwest),
    ("OH", "39", Region::Midwest),
    ("OK", "40", Region::South),
    ("OR", "41", Region::West),
    ("PA", "42", Region::Northeast),
    ("RI", "44", Region::Northeast),
    ("SC", "45", Region::South),
    ("SD", "46", Region::Midwest),
    ("TN", "47", Region::South),
    ("TX", "48", Region::South),
    ("UT", "49", Region::West),
    ("VT", "50", Region::Northeast),
    ("VA", "51", Region::South),
    ("WA", "53", Region::West),
    ("WV", "54", Region::South),
    ("WI", "55", Region::Midwest),
    ("WY", "56", Region::West),
];

pub fn state_fips(state: &str) -> Option<&'static str> {
    STATES
        .iter()
        .find(|(code, _, _)| code.eq_ignore_ascii_case(state))
        .map(|(_, fips, _)| *fips)
}

pub fn state_for_fips(prefix: &str) -> Option<&'static str> {
    STATES
        .iter()
        .find(|(_, fips, _)| *fips == prefix)
        .map(|(code, _, _)| *code)
}

/// State owning a 5-digit county FIPS code.
pub fn state_for_county(county_fips: &str) -> Option<&'static str> {
    county_fips.get(..2).and_then(state_for_fips)
}

/// Census Bureau four-region assignment for every state and DC.
pub fn census_regions() -> BTreeMap<String, Region> {
    STATES
        .iter()
        .map(|(code, _, region)| (code.to_string(), *region))
        .collect()
}

pub(crate) fn is_digits(s: &str, len: usize) -> bool {
    s.len() == len && s.bytes().all(|b| b.is_ascii_digit())
}
