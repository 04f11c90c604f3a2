//! Embargo-aware projections of a case.

use serde::Serialize;
use serde_json::Value;

use super::{effective_roles, CaseFile, CaseState};
use crate::domain::{Actor, Advisory, Bracket, ModelRef, Role, Track};
use crate::formats::{CfeId, Digest};

/// Keys that only the case's participants and neutral bodies may see.
pub const EMBARGOED_FIELDS: &[&str] = &[
    "report",
    "narrative",
    "impact",
    "evidence",
    "sampling_protocol",
    "participants",
    "embargo",
    "audit",
    "payload",
    "reporter_id",
    "vendor_id",
    "reason",
    "appeal_resolution",
    "sealed_payload",
];

/// What a non-participant may learn once the case is published.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PublicCaseView {
    pub case_id: String,
    pub track: Track,
    pub state: CaseState,
    pub model_ref: ModelRef,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfe_id: Option<CfeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cve_ref: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub severity_bracket: Option<Bracket>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<Advisory>,
    /// Digests of sealed evidence payloads; the payloads themselves never leave storage.
    pub evidence_digests: Vec<Digest>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseView {
    /// The caller may not learn that the case exists.
    Hidden,
    Public(Box<PublicCaseView>),
    Full(Box<CaseFile>),
}

impl CaseView {
    pub fn is_hidden(&self) -> bool {
        matches!(self, CaseView::Hidden)
    }

    /// JSON body for the view; `None` when hidden.
    pub fn to_value(&self) -> Option<Value> {
        match self {
            CaseView::Hidden => None,
            CaseView::Public(view) => serde_json::to_value(view).ok(),
            CaseView::Full(case) => serde_json::to_value(case).ok(),
        }
    }
}

pub fn embargo_view(case: &CaseFile, actor: Option<&Actor>) -> CaseView {
    let privileged = actor.is_some_and(|actor| {
        let roles = effective_roles(case, actor);
        case.is_participant(&actor.actor_id)
            || roles.contains(&Role::Committee)
            || roles.contains(&Role::Adjudicator)
    });
    if privileged {
        return CaseView::Full(Box::new(case.clone()));
    }
    if !case.state.is_disclosed() {
        return CaseView::Hidden;
    }
    CaseView::Public(Box::new(PublicCaseView {
        case_id: case.case_id.clone(),
        track: case.track,
        state: case.state,
        model_ref: case.model_ref.clone(),
        cfe_id: case.cfe_id,
        cve_ref: case.cve_ref.clone(),
        advisory_id: case.advisory_id.clone(),
        severity_bracket: case.severity.as_ref().map(|s| s.bracket),
        advisory: case.advisory.clone(),
        evidence_digests: case
            .evidence
            .iter()
            .filter_map(|e| e.sealed_payload_digest.clone())
            .collect(),
    }))
}

/// JSON pointers of every embargoed key anywhere in `value`.
pub fn embargoed_field_paths(value: &Value) -> Vec<String> {
    fn walk(value: &Value, path: &str, out: &mut Vec<String>) {
        match value {
            Value::Object(map) => {
                for (key, child) in map {
                    let here = format!("{path}/{key}");
                    if EMBARGOED_FIELDS.contains(&key.as_str()) {
                        out.push(here.clone());
                    }
                    walk(child, &here, out);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(child, &format!("{path}/{i}"), out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(value, "", &mut out);
    out
}
