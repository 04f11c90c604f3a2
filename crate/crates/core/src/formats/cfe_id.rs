use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Identifier of a Common Flaws and Exposures entry, written
/// `CFE-<year>-<seq>` with the sequence zero-padded to at least four digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CfeId {
    pub year: u16,
    pub sequence: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed CFE id `{text}`: {reason}")]
pub struct IdSyntaxError {
    pub text: String,
    pub reason: &'static str,
}

impl CfeId {
    pub fn new(year: u16, sequence: u64) -> Self {
        Self { year, sequence }
    }
}

pub fn parse_cfe_id(text: &str) -> Result<CfeId, IdSyntaxError> {
    let fail = |reason| IdSyntaxError {
        text: text.to_string(),
        reason,
    };
    let rest = text
        .strip_prefix("CFE-")
        .ok_or_else(|| fail("missing `CFE-` prefix"))?;
    let (year, seq) = rest
        .split_once('-')
        .ok_or_else(|| fail("missing sequence"))?;
    if year.len() != 4 || !year.bytes().all(|b| b.is_ascii_digit()) {
        return Err(fail("year must be exactly 4 digits"));
    }
    if seq.len() < 4 || !seq.bytes().all(|b| b.is_ascii_digit()) {
        return Err(fail("sequence must be at least 4 digits"));
    }
    // a sequence wider than four digits carries no padding
    if seq.len() > 4 && seq.starts_with('0') {
        return Err(fail("sequence has superfluous zero padding"));
    }
    let sequence: u64 = seq.parse().map_err(|_| fail("sequence out of range"))?;
    if sequence == 0 {
        return Err(fail("sequence starts at 1"));
    }
    Ok(CfeId {
        year: year.parse().expect("four ascii digits"),
        sequence,
    })
}

pub fn format_cfe_id(id: &CfeId) -> String {
    format!("CFE-{:04}-{:04}", id.year, id.sequence)
}

impl fmt::Display for CfeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_cfe_id(self))
    }
}

impl FromStr for CfeId {
    type Err = IdSyntaxError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_cfe_id(text)
    }
}

impl Serialize for CfeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CfeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
