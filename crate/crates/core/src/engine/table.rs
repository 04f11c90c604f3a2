//! The transition table: the only source of workflow rules.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use super::{Action, CaseState, PayloadKind};
use crate::domain::{Role, Track};

/// One permitted move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionRule {
    pub track: Track,
    pub from: CaseState,
    pub action: Action,
    pub roles: &'static [Role],
    pub to: CaseState,
    pub payload: PayloadKind,
}

use Action as A;
use CaseState as S;
use PayloadKind as P;
use Role as R;
use Track as T;

const fn rule(
    track: Track,
    from: CaseState,
    action: Action,
    roles: &'static [Role],
    to: CaseState,
    payload: PayloadKind,
) -> TransitionRule {
    TransitionRule {
        track,
        from,
        action,
        roles,
        to,
        payload,
    }
}

const VENDOR: &[Role] = &[R::Vendor];
const REPORTER: &[Role] = &[R::Reporter];
const COMMITTEE: &[Role] = &[R::Committee];
const ADJUDICATOR: &[Role] = &[R::Adjudicator];
const VENDOR_OR_COMMITTEE: &[Role] = &[R::Vendor, R::Committee];

pub static TRANSITIONS: &[TransitionRule] = &[
    // Unclassified intake waits for the vendor to pick a track.
    rule(
        T::Ambiguous,
        S::Submitted,
        A::ReassignTrack,
        VENDOR,
        S::VendorTriage,
        P::Track,
    ),
    rule(
        T::Ambiguous,
        S::Submitted,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    // Safety track.
    rule(
        T::Safety,
        S::Submitted,
        A::Acknowledge,
        VENDOR,
        S::VendorAcknowledged,
        P::None,
    ),
    rule(
        T::Safety,
        S::Submitted,
        A::Reject,
        VENDOR,
        S::VendorRejected,
        P::Reason,
    ),
    rule(
        T::Safety,
        S::Submitted,
        A::ReassignTrack,
        VENDOR,
        S::VendorTriage,
        P::Track,
    ),
    rule(
        T::Safety,
        S::Submitted,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Safety,
        S::VendorTriage,
        A::Acknowledge,
        VENDOR,
        S::VendorAcknowledged,
        P::None,
    ),
    rule(
        T::Safety,
        S::VendorTriage,
        A::Reject,
        VENDOR,
        S::VendorRejected,
        P::Reason,
    ),
    rule(
        T::Safety,
        S::VendorTriage,
        A::CloseInvalid,
        VENDOR,
        S::ClosedInvalid,
        P::Reason,
    ),
    rule(
        T::Safety,
        S::VendorTriage,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Safety,
        S::VendorAcknowledged,
        A::RequestCfe,
        VENDOR_OR_COMMITTEE,
        S::CfeRequested,
        P::None,
    ),
    rule(
        T::Safety,
        S::VendorAcknowledged,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Safety,
        S::CfeRequested,
        A::AssignCfe,
        COMMITTEE,
        S::CfeAssigned,
        P::AssignCfe,
    ),
    rule(
        T::Safety,
        S::CfeRequested,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Safety,
        S::VendorRejected,
        A::Escalate,
        REPORTER,
        S::Adjudication,
        P::None,
    ),
    rule(
        T::Safety,
        S::VendorRejected,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Safety,
        S::Adjudication,
        A::Accept,
        ADJUDICATOR,
        S::PanelAccepted,
        P::None,
    ),
    rule(
        T::Safety,
        S::Adjudication,
        A::Reject,
        ADJUDICATOR,
        S::PanelRejected,
        P::Reason,
    ),
    rule(
        T::Safety,
        S::Adjudication,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Safety,
        S::PanelAccepted,
        A::RequestCfe,
        VENDOR_OR_COMMITTEE,
        S::CfeRequested,
        P::None,
    ),
    rule(
        T::Safety,
        S::PanelAccepted,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Safety,
        S::CfeAssigned,
        A::Publish,
        VENDOR_OR_COMMITTEE,
        S::Published,
        P::Publish,
    ),
    rule(T::Safety, S::Published, A::Fix, VENDOR, S::Fixed, P::Fix),
    // Security track.
    rule(
        T::Security,
        S::Submitted,
        A::Confirm,
        VENDOR,
        S::VendorConfirmed,
        P::None,
    ),
    rule(
        T::Security,
        S::Submitted,
        A::Dispute,
        VENDOR,
        S::VendorDisputed,
        P::Reason,
    ),
    rule(
        T::Security,
        S::Submitted,
        A::ReassignTrack,
        VENDOR,
        S::VendorTriage,
        P::Track,
    ),
    rule(
        T::Security,
        S::Submitted,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Security,
        S::VendorTriage,
        A::Confirm,
        VENDOR,
        S::VendorConfirmed,
        P::None,
    ),
    rule(
        T::Security,
        S::VendorTriage,
        A::Dispute,
        VENDOR,
        S::VendorDisputed,
        P::Reason,
    ),
    rule(
        T::Security,
        S::VendorTriage,
        A::CloseInvalid,
        VENDOR,
        S::ClosedInvalid,
        P::Reason,
    ),
    rule(
        T::Security,
        S::VendorTriage,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Security,
        S::VendorConfirmed,
        A::RequestCve,
        VENDOR,
        S::CveRequested,
        P::None,
    ),
    rule(
        T::Security,
        S::VendorConfirmed,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Security,
        S::CveRequested,
        A::AssignCve,
        VENDOR,
        S::CveAssigned,
        P::AssignCve,
    ),
    rule(
        T::Security,
        S::CveRequested,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Security,
        S::VendorDisputed,
        A::Appeal,
        REPORTER,
        S::CveProgramAppeal,
        P::None,
    ),
    rule(
        T::Security,
        S::VendorDisputed,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Security,
        S::CveProgramAppeal,
        A::GrantAppeal,
        COMMITTEE,
        S::CveAssigned,
        P::GrantAppeal,
    ),
    rule(
        T::Security,
        S::CveProgramAppeal,
        A::DenyAppeal,
        COMMITTEE,
        S::ClosedInvalid,
        P::Reason,
    ),
    rule(
        T::Security,
        S::CveProgramAppeal,
        A::Withdraw,
        REPORTER,
        S::Withdrawn,
        P::None,
    ),
    rule(
        T::Security,
        S::CveAssigned,
        A::EnterEmbargo,
        VENDOR,
        S::Embargoed,
        P::EnterEmbargo,
    ),
    rule(
        T::Security,
        S::Embargoed,
        A::Publish,
        VENDOR_OR_COMMITTEE,
        S::Published,
        P::Publish,
    ),
    rule(T::Security, S::Published, A::Fix, VENDOR, S::Fixed, P::Fix),
];

pub const TERMINAL_STATES: &[CaseState] =
    &[S::ClosedInvalid, S::Withdrawn, S::PanelRejected, S::Fixed];

impl CaseState {
    pub fn is_terminal(self) -> bool {
        TERMINAL_STATES.contains(&self)
    }
}

pub fn find_rule(track: Track, from: CaseState, action: Action) -> Option<&'static TransitionRule> {
    TRANSITIONS
        .iter()
        .find(|r| r.track == track && r.from == from && r.action == action)
}

/// Roles that may perform `action` anywhere on `track`.
pub fn roles_for_action(track: Track, action: Action) -> BTreeSet<Role> {
    TRANSITIONS
        .iter()
        .filter(|r| r.track == track && r.action == action)
        .flat_map(|r| r.roles.iter().copied())
        .collect()
}

/// Actions a holder of `role` may take from `(track, state)`.
pub fn legal_actions_for(track: Track, state: CaseState, role: Role) -> BTreeSet<Action> {
    TRANSITIONS
        .iter()
        .filter(|r| r.track == track && r.from == state && r.roles.contains(&role))
        .map(|r| r.action)
        .collect()
}

fn payload_schema(kind: PayloadKind) -> Value {
    let string = json!({"type": "string", "minLength": 1});
    let string_set = json!({"type": "array", "items": {"type": "string"}, "uniqueItems": true});
    match kind {
        PayloadKind::None => json!({"type": ["object", "null"], "properties": {}}),
        PayloadKind::Reason => json!({
            "type": "object",
            "required": ["reason"],
            "properties": {"reason": string},
        }),
        PayloadKind::Track => json!({
            "type": "object",
            "required": ["track"],
            "properties": {"track": {"enum": ["security", "safety"]}},
        }),
        PayloadKind::AssignCfe => json!({
            "type": "object",
            "required": ["cfe_id", "title", "affected_uses", "affected_lineage"],
            "properties": {
                "cfe_id": {"type": "string", "pattern": "^CFE-[0-9]{4}-[0-9]{4,}$", "server_filled": true},
                "title": string,
                "description": {"type": "string"},
                "affected_uses": string_set,
                "affected_lineage": string_set,
                "remediating_commits": string_set,
                "effective_guardrails": string_set,
                "breadth": {"enum": ["individual", "group", "societal"]},
                "cultural_scope_notes": {"type": "string"},
            },
        }),
        PayloadKind::Publish => json!({
            "type": "object",
            "required": ["title", "summary"],
            "properties": {
                "advisory_id": {"type": "string", "server_filled": true},
                "cfe_id": {"type": "string", "description": "required on the safety track"},
                "cve_ref": {"type": "string", "description": "required on the security track"},
                "title": string,
                "summary": string,
                "recommendations": {"type": "string"},
                "record_uri": {"type": "string", "server_filled": true},
                "vex_ref": {"type": "string", "description": "exposure statement reference, required on the security track"},
            },
        }),
        PayloadKind::Fix => json!({
            "type": "object",
            "properties": {
                "hex_statement_id": {"type": "string", "description": "a `fixed` exposure statement, required on the safety track"},
                "vex_ref": {"type": "string", "description": "required on the security track"},
            },
        }),
        PayloadKind::AssignCve => json!({
            "type": "object",
            "properties": {"cve_ref": {"type": "string", "description": "supplied by a CNA vendor, otherwise assigned by the CVE client"}},
        }),
        PayloadKind::GrantAppeal => json!({
            "type": "object",
            "required": ["resolution"],
            "properties": {
                "resolution": string,
                "cve_ref": {"type": "string", "server_filled": true},
            },
        }),
        PayloadKind::EnterEmbargo => json!({
            "type": "object",
            "properties": {"expires_at": {"type": "string", "format": "date-time"}},
        }),
    }
}

/// Machine-readable self-description of the workflow.
pub fn transition_table_document() -> Value {
    let rows: Vec<Value> = TRANSITIONS
        .iter()
        .map(|r| {
            json!({
                "track": r.track,
                "from": r.from,
                "action": r.action,
                "roles": r.roles,
                "to": r.to,
                "payload": r.payload,
            })
        })
        .collect();
    let schemas: serde_json::Map<String, Value> = PayloadKind::ALL
        .iter()
        .map(|kind| (kind.as_str().to_string(), payload_schema(*kind)))
        .collect();
    json!({
        "version": 1,
        "tracks": Track::ALL,
        "states": CaseState::ALL,
        "actions": Action::TRANSITIONS,
        "annotations": [Action::AttachEvidence, Action::RecordRecommendation],
        "roles": Role::ALL,
        "terminal_states": TERMINAL_STATES,
        "transitions": rows,
        "payload_schemas": schemas,
    })
}
