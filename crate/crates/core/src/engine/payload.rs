//! Typed action payloads. Unknown fields are rejected so typos surface as
//! `PayloadInvalid` instead of being silently dropped.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EngineError;
use crate::domain::{Breadth, Track};
use crate::formats::CfeId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReasonPayload {
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackPayload {
    pub track: Track,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignCfePayload {
    pub cfe_id: CfeId,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub affected_uses: BTreeSet<String>,
    pub affected_lineage: BTreeSet<String>,
    #[serde(default)]
    pub remediating_commits: BTreeSet<String>,
    #[serde(default)]
    pub effective_guardrails: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breadth: Option<Breadth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cultural_scope_notes: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishPayload {
    pub advisory_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfe_id: Option<CfeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cve_ref: Option<String>,
    pub title: String,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommendations: Option<String>,
    pub record_uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vex_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixPayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hex_statement_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vex_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignCvePayload {
    pub cve_ref: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrantAppealPayload {
    pub cve_ref: String,
    pub resolution: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnterEmbargoPayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expires_at: Option<DateTime<Utc>>,
}

/// Decode a payload; `null` counts as an empty object.
pub(crate) fn decode<T: DeserializeOwned>(payload: &Value) -> Result<T, EngineError> {
    let value = if payload.is_null() {
        Value::Object(Default::default())
    } else {
        payload.clone()
    };
    serde_json::from_value(value).map_err(|e| EngineError::PayloadInvalid(e.to_string()))
}

pub(crate) fn non_blank(field: &str, text: &str) -> Result<(), EngineError> {
    if text.trim().is_empty() {
        Err(EngineError::PayloadInvalid(format!(
            "`{field}` must not be blank"
        )))
    } else {
        Ok(())
    }
}

pub(crate) fn expect_empty(payload: &Value) -> Result<(), EngineError> {
    match payload {
        Value::Null => Ok(()),
        Value::Object(map) if map.is_empty() => Ok(()),
        _ => Err(EngineError::PayloadInvalid(
            "this action takes no payload".into(),
        )),
    }
}
