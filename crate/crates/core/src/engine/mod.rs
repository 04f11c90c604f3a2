//! The disclosure lifecycle: a role-guarded state machine over case files.
//!
//! Every mutation goes through [`apply_transition`] (table moves) or one of
//! the annotation helpers, and appends exactly one [`AuditEvent`]. Folding the
//! audit trail with [`replay`] rebuilds the identical case file.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{
    Advisory, CfeRecord, EmbargoWindow, EvidenceSet, ModelRef, Report, Role, Severity, Track,
};
use crate::formats::{CfeId, Digest};

mod case;
mod ids;
mod payload;
mod table;
mod view;

pub use case::{
    actions_for, apply_transition, assign_cfe, attach_evidence, effective_roles, legal_actions,
    publish_advisory, record_recommendation, replay, replay_event, submit_report, SubmitPayload,
};
pub use ids::{CfeAllocator, CveClient, StubCveClient};
pub use payload::{
    AssignCfePayload, AssignCvePayload, EnterEmbargoPayload, FixPayload, GrantAppealPayload,
    PublishPayload, ReasonPayload, TrackPayload,
};
pub use table::{
    find_rule, legal_actions_for, roles_for_action, transition_table_document, TransitionRule,
    TERMINAL_STATES, TRANSITIONS,
};
pub use view::{embargo_view, embargoed_field_paths, CaseView, PublicCaseView, EMBARGOED_FIELDS};

pub const DEFAULT_EMBARGO_DAYS: i64 = 90;

token_enum! {
    pub enum CaseState {
        Submitted => "submitted",
        VendorTriage => "vendor_triage",
        VendorAcknowledged => "vendor_acknowledged",
        CfeRequested => "cfe_requested",
        CfeAssigned => "cfe_assigned",
        VendorRejected => "vendor_rejected",
        Adjudication => "adjudication",
        PanelAccepted => "panel_accepted",
        PanelRejected => "panel_rejected",
        VendorConfirmed => "vendor_confirmed",
        CveRequested => "cve_requested",
        CveAssigned => "cve_assigned",
        VendorDisputed => "vendor_disputed",
        CveProgramAppeal => "cve_program_appeal",
        Embargoed => "embargoed",
        Published => "published",
        Fixed => "fixed",
        ClosedInvalid => "closed_invalid",
        Withdrawn => "withdrawn",
    }
}

impl CaseState {
    /// Published or later: the public fields of the case may be disclosed.
    pub fn is_disclosed(self) -> bool {
        matches!(self, CaseState::Published | CaseState::Fixed)
    }
}

token_enum! {
    pub enum Action {
        Submit => "submit",
        AttachEvidence => "attach_evidence",
        RecordRecommendation => "record_recommendation",
        Acknowledge => "acknowledge",
        Reject => "reject",
        ReassignTrack => "reassign_track",
        CloseInvalid => "close_invalid",
        Withdraw => "withdraw",
        RequestCfe => "request_cfe",
        AssignCfe => "assign_cfe",
        Escalate => "escalate",
        Accept => "accept",
        Publish => "publish",
        Fix => "fix",
        Confirm => "confirm",
        Dispute => "dispute",
        RequestCve => "request_cve",
        AssignCve => "assign_cve",
        Appeal => "appeal",
        GrantAppeal => "grant_appeal",
        DenyAppeal => "deny_appeal",
        EnterEmbargo => "enter_embargo",
    }
}

impl Action {
    /// Actions that move a case through the transition table.
    pub const TRANSITIONS: &'static [Action] = &[
        Action::Acknowledge,
        Action::Reject,
        Action::ReassignTrack,
        Action::CloseInvalid,
        Action::Withdraw,
        Action::RequestCfe,
        Action::AssignCfe,
        Action::Escalate,
        Action::Accept,
        Action::Publish,
        Action::Fix,
        Action::Confirm,
        Action::Dispute,
        Action::RequestCve,
        Action::AssignCve,
        Action::Appeal,
        Action::GrantAppeal,
        Action::DenyAppeal,
        Action::EnterEmbargo,
    ];

    pub fn is_transition(self) -> bool {
        Self::TRANSITIONS.contains(&self)
    }
}

token_enum! {
    /// Shape of the payload an action expects.
    pub enum PayloadKind {
        None => "none",
        Reason => "reason",
        Track => "track",
        AssignCfe => "assign_cfe",
        Publish => "publish",
        Fix => "fix",
        AssignCve => "assign_cve",
        GrantAppeal => "grant_appeal",
        EnterEmbargo => "enter_embargo",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown model {0}")]
    UnknownModel(ModelRef),
    #[error("`{action}` is not a legal action in state `{state}`")]
    IllegalTransition { state: CaseState, action: Action },
    #[error("actor `{actor_id}` holds no role permitted to `{action}`")]
    RoleNotPermitted { action: Action, actor_id: String },
    #[error("case is at version {actual}, request expected {expected}")]
    StaleVersion { expected: u64, actual: u64 },
    #[error("invalid payload: {0}")]
    PayloadInvalid(String),
    #[error("missing identifier: {0}")]
    MissingIdentifier(String),
    #[error("illegal state: {0}")]
    IllegalState(String),
    #[error("replay diverged: {0}")]
    ReplayMismatch(String),
}

/// One entry of a case's append-only trail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub seq: u64,
    pub actor_id: String,
    /// The effective role under which the actor acted.
    pub role: Role,
    pub action: Action,
    pub from_state: CaseState,
    pub to_state: CaseState,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_digest: Option<Digest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseFile {
    pub case_id: String,
    pub track: Track,
    pub state: CaseState,
    pub report: Report,
    pub model_ref: ModelRef,
    pub reporter_id: String,
    pub vendor_id: String,
    pub participants: BTreeMap<Role, BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embargo: Option<EmbargoWindow>,
    pub evidence: Vec<EvidenceSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfe_id: Option<CfeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cve_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<Severity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfe_record: Option<CfeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory: Option<Advisory>,
    /// Why the case was closed, rejected or disputed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appeal_resolution: Option<String>,
    /// Exposure statement backing publication or fix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vex_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fix_ref: Option<String>,
    pub version: u64,
    pub audit: Vec<AuditEvent>,
}

impl CaseFile {
    pub fn is_participant(&self, actor_id: &str) -> bool {
        self.embargo
            .as_ref()
            .is_some_and(|embargo| embargo.participants.contains(actor_id))
            || self.participants.values().any(|ids| ids.contains(actor_id))
    }

    pub fn evidence_of<'a>(&'a self, party: &'a str) -> impl Iterator<Item = &'a EvidenceSet> + 'a {
        self.evidence.iter().filter(move |e| e.party == party)
    }
}
