use std::collections::BTreeSet;

use chrono::{DateTime, Datelike, Duration, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::payload::{decode, expect_empty, non_blank};
use super::table::{find_rule, legal_actions_for, roles_for_action};
use super::{
    Action, AssignCfePayload, AssignCvePayload, AuditEvent, CaseFile, CaseState, CfeAllocator,
    EngineError, EnterEmbargoPayload, FixPayload, GrantAppealPayload, PayloadKind, PublishPayload,
    ReasonPayload, TrackPayload,
};
use crate::domain::{
    check_scope, classify_report, severity_bracket, Actor, Advisory, Breadth, CfeRecord, CfeStatus,
    DomainError, EmbargoWindow, EvidenceSet, ModelCard, Report, Role, ScopeVerdict, Severity,
    Track, RE_REVIEW_DAYS,
};
use crate::formats::{to_canonical_bytes, Digest};
use crate::stats::AdjudicationReport;

/// Everything needed to re-run intake during replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitPayload {
    pub case_id: String,
    pub report: Report,
    pub vendor_id: String,
    pub embargo_days: i64,
}

fn digest_of(value: &Value) -> Digest {
    Digest::of(&to_canonical_bytes(value).expect("payloads are finite JSON"))
}

fn intake_severity(report: &Report, breadth: Option<Breadth>) -> Option<Severity> {
    let breadth = breadth
        .or(report.impact.breadth)
        .unwrap_or(Breadth::Individual);
    severity_bracket(&report.impact.harm_categories, breadth).ok()
}

/// Open a case. Out-of-scope safety reports close immediately with the
/// matched exclusion recorded on the intake event.
pub fn submit_report(
    case_id: impl Into<String>,
    report: Report,
    card: &ModelCard,
    vendor_id: impl Into<String>,
    embargo_days: i64,
    at: DateTime<Utc>,
) -> Result<CaseFile, EngineError> {
    let case_id = case_id.into();
    let vendor_id = vendor_id.into();
    if embargo_days < 1 {
        return Err(EngineError::PayloadInvalid(
            "embargo must last at least one day".into(),
        ));
    }
    if !report.impact.is_valid() {
        return Err(EngineError::PayloadInvalid(
            "impact must claim at least one CIA loss or harm category".into(),
        ));
    }
    if report.reporter_id.trim().is_empty() {
        return Err(EngineError::PayloadInvalid(
            "reporter_id must not be blank".into(),
        ));
    }
    if let Some(evidence) = &report.evidence {
        if !evidence.is_valid() {
            return Err(EngineError::PayloadInvalid(
                "evidence needs n >= 1 and k <= n".into(),
            ));
        }
    }
    let track = classify_report(&report, card).map_err(|e| match e {
        DomainError::UnknownModel { name, version } => {
            EngineError::UnknownModel(crate::domain::ModelRef { name, version })
        }
        other => EngineError::PayloadInvalid(other.to_string()),
    })?;

    let (state, reason) = match (track, check_scope(&report, card)) {
        (Track::Safety, ScopeVerdict::OutOfScope(matched)) => {
            (CaseState::ClosedInvalid, Some(matched))
        }
        _ => (CaseState::Submitted, None),
    };

    let reporter_id = report.reporter_id.clone();
    let payload = serde_json::to_value(SubmitPayload {
        case_id: case_id.clone(),
        report: report.clone(),
        vendor_id: vendor_id.clone(),
        embargo_days,
    })
    .expect("submit payload serializes");

    let mut evidence = Vec::new();
    if let Some(mut set) = report.evidence.clone() {
        set.party = reporter_id.clone();
        evidence.push(set);
    }
    let participants = [
        (Role::Reporter, BTreeSet::from([reporter_id.clone()])),
        (Role::Vendor, BTreeSet::from([vendor_id.clone()])),
    ]
    .into();

    Ok(CaseFile {
        case_id,
        track,
        state,
        model_ref: report.model_ref.clone(),
        severity: intake_severity(&report, None),
        report,
        embargo: Some(EmbargoWindow {
            starts_at: at,
            expires_at: at + Duration::days(embargo_days),
            participants: BTreeSet::from([reporter_id.clone(), vendor_id.clone()]),
            lifted_at: None,
        }),
        participants,
        evidence,
        cfe_id: None,
        cve_ref: None,
        advisory_id: None,
        cfe_record: None,
        advisory: None,
        appeal_resolution: None,
        vex_ref: None,
        fix_ref: None,
        version: 1,
        audit: vec![AuditEvent {
            seq: 1,
            actor_id: reporter_id.clone(),
            role: Role::Reporter,
            action: Action::Submit,
            from_state: CaseState::Submitted,
            to_state: state,
            timestamp: at,
            payload_digest: Some(digest_of(&payload)),
            payload: Some(payload),
            detail: reason
                .as_ref()
                .map(|matched| format!("out of scope: {matched}")),
        }],
        reason: reason.map(|matched| format!("out of scope: {matched}")),
        reporter_id,
        vendor_id,
    })
}

/// Roles the actor may exercise on this particular case. Committee and
/// adjudicator roles lapse for the case's own vendor and reporter.
pub fn effective_roles(case: &CaseFile, actor: &Actor) -> BTreeSet<Role> {
    let interested = actor.actor_id == case.vendor_id || actor.actor_id == case.reporter_id;
    actor
        .roles
        .iter()
        .copied()
        .filter(|role| match role {
            Role::Reporter => actor.actor_id == case.reporter_id,
            Role::Vendor => actor.actor_id == case.vendor_id,
            Role::Committee | Role::Adjudicator => !interested,
            Role::Consumer | Role::Public => true,
        })
        .collect()
}

pub fn legal_actions(case: &CaseFile, role: Role) -> BTreeSet<Action> {
    if case.state.is_terminal() {
        return BTreeSet::new();
    }
    legal_actions_for(case.track, case.state, role)
}

/// Union of [`legal_actions`] over the actor's effective roles.
pub fn actions_for(case: &CaseFile, actor: &Actor) -> BTreeSet<Action> {
    effective_roles(case, actor)
        .into_iter()
        .flat_map(|role| legal_actions(case, role))
        .collect()
}

fn check_version(case: &CaseFile, expected: Option<u64>) -> Result<(), EngineError> {
    match expected {
        Some(expected) if expected != case.version => Err(EngineError::StaleVersion {
            expected,
            actual: case.version,
        }),
        _ => Ok(()),
    }
}

fn push_event(
    case: &mut CaseFile,
    actor: &Actor,
    role: Role,
    action: Action,
    to: CaseState,
    payload: Option<Value>,
    at: DateTime<Utc>,
) {
    let event = AuditEvent {
        seq: case.audit.len() as u64 + 1,
        actor_id: actor.actor_id.clone(),
        role,
        action,
        from_state: case.state,
        to_state: to,
        timestamp: at,
        payload_digest: payload.as_ref().map(digest_of),
        payload,
        detail: None,
    };
    case.state = to;
    case.audit.push(event);
    case.version = case.audit.len() as u64;
    case.participants
        .entry(role)
        .or_default()
        .insert(actor.actor_id.clone());
}

/// Move a case one step along the transition table.
pub fn apply_transition(
    case: &CaseFile,
    action: Action,
    actor: &Actor,
    payload: &Value,
    expected_version: u64,
    at: DateTime<Utc>,
) -> Result<CaseFile, EngineError> {
    check_version(case, Some(expected_version))?;
    let illegal = || EngineError::IllegalTransition {
        state: case.state,
        action,
    };
    let denied = || EngineError::RoleNotPermitted {
        action,
        actor_id: actor.actor_id.clone(),
    };
    if !action.is_transition() {
        return Err(illegal());
    }
    let roles = effective_roles(case, actor);
    if roles.is_disjoint(&roles_for_action(case.track, action)) {
        return Err(denied());
    }
    let rule = find_rule(case.track, case.state, action).ok_or_else(illegal)?;
    let role = *rule
        .roles
        .iter()
        .find(|r| roles.contains(r))
        .ok_or_else(denied)?;

    let mut next = case.clone();
    apply_payload(&mut next, rule.payload, payload, at)?;
    let recorded = (!payload.is_null()).then(|| payload.clone());
    push_event(&mut next, actor, role, action, rule.to, recorded, at);
    Ok(next)
}

fn apply_payload(
    case: &mut CaseFile,
    kind: PayloadKind,
    payload: &Value,
    at: DateTime<Utc>,
) -> Result<(), EngineError> {
    match kind {
        PayloadKind::None => expect_empty(payload),
        PayloadKind::Reason => {
            let p: ReasonPayload = decode(payload)?;
            non_blank("reason", &p.reason)?;
            case.reason = Some(p.reason);
            Ok(())
        }
        PayloadKind::Track => {
            let p: TrackPayload = decode(payload)?;
            if p.track == Track::Ambiguous || p.track == case.track {
                return Err(EngineError::PayloadInvalid(format!(
                    "cannot reassign a {} case to `{}`",
                    case.track, p.track
                )));
            }
            case.track = p.track;
            Ok(())
        }
        PayloadKind::AssignCfe => {
            let p: AssignCfePayload = decode(payload)?;
            non_blank("title", &p.title)?;
            let severity = intake_severity(&case.report, p.breadth);
            case.cfe_id = Some(p.cfe_id);
            case.severity = severity.clone();
            case.cfe_record = Some(CfeRecord {
                cfe_id: p.cfe_id,
                status: CfeStatus::Reserved,
                title: p.title,
                description: p.description,
                model_ref: case.model_ref.clone(),
                affected_uses: p.affected_uses,
                affected_lineage: p.affected_lineage,
                remediating_commits: p.remediating_commits,
                effective_guardrails: p.effective_guardrails,
                severity,
                advisory_id: None,
                assigned_at: at,
                published_at: None,
                re_review_at: at + Duration::days(RE_REVIEW_DAYS),
                cultural_scope_notes: p.cultural_scope_notes,
            });
            Ok(())
        }
        PayloadKind::Publish => {
            let p: PublishPayload = decode(payload)?;
            for (field, text) in [
                ("advisory_id", &p.advisory_id),
                ("title", &p.title),
                ("summary", &p.summary),
            ] {
                non_blank(field, text)?;
            }
            match case.track {
                Track::Safety => match p.cfe_id {
                    None => {
                        return Err(EngineError::MissingIdentifier(
                            "the advisory must reference the case's CFE id".into(),
                        ))
                    }
                    Some(id) if Some(id) != case.cfe_id => {
                        return Err(EngineError::PayloadInvalid(format!(
                            "advisory references {id}, not this case's CFE"
                        )))
                    }
                    Some(_) => {}
                },
                _ => {
                    match &p.cve_ref {
                        None => {
                            return Err(EngineError::MissingIdentifier(
                                "the advisory must reference the case's CVE".into(),
                            ))
                        }
                        Some(cve) if Some(cve) != case.cve_ref.as_ref() => {
                            return Err(EngineError::PayloadInvalid(format!(
                                "advisory references {cve}, not this case's CVE"
                            )))
                        }
                        Some(_) => {}
                    }
                    let vex = p.vex_ref.as_deref().unwrap_or_default();
                    non_blank("vex_ref", vex)?;
                }
            }
            let advisory = Advisory {
                advisory_id: p.advisory_id.clone(),
                cfe_id: p.cfe_id,
                cve_ref: p.cve_ref,
                title: p.title,
                summary: p.summary,
                recommendations: p.recommendations,
                model_ref: case.model_ref.clone(),
                severity_bracket: case.severity.as_ref().map(|s| s.bracket),
                published_at: at,
                record_uri: p.record_uri,
            };
            if let Some(record) = case.cfe_record.as_mut() {
                record.status = CfeStatus::Published;
                record.published_at = Some(at);
                record.advisory_id = Some(p.advisory_id.clone());
            }
            if let Some(embargo) = case.embargo.as_mut() {
                embargo.lifted_at = Some(at);
            }
            case.advisory_id = Some(p.advisory_id);
            case.advisory = Some(advisory);
            case.vex_ref = p.vex_ref;
            Ok(())
        }
        PayloadKind::Fix => {
            let p: FixPayload = decode(payload)?;
            let reference = match case.track {
                Track::Safety => p.hex_statement_id.ok_or_else(|| {
                    EngineError::PayloadInvalid(
                        "`hex_statement_id` of a `fixed` statement is required".into(),
                    )
                })?,
                _ => p
                    .vex_ref
                    .ok_or_else(|| EngineError::PayloadInvalid("`vex_ref` is required".into()))?,
            };
            non_blank("statement reference", &reference)?;
            if let Some(record) = case.cfe_record.as_mut() {
                record.status = CfeStatus::Fixed;
            }
            case.fix_ref = Some(reference);
            Ok(())
        }
        PayloadKind::AssignCve => {
            let p: AssignCvePayload = decode(payload)?;
            non_blank("cve_ref", &p.cve_ref)?;
            case.cve_ref = Some(p.cve_ref);
            Ok(())
        }
        PayloadKind::GrantAppeal => {
            let p: GrantAppealPayload = decode(payload)?;
            non_blank("cve_ref", &p.cve_ref)?;
            non_blank("resolution", &p.resolution)?;
            case.cve_ref = Some(p.cve_ref);
            case.appeal_resolution = Some(p.resolution);
            Ok(())
        }
        PayloadKind::EnterEmbargo => {
            let p: EnterEmbargoPayload = decode(payload)?;
            if let Some(expires_at) = p.expires_at {
                if expires_at <= at {
                    return Err(EngineError::PayloadInvalid(
                        "embargo expiry must lie in the future".into(),
                    ));
                }
                if let Some(embargo) = case.embargo.as_mut() {
                    embargo.expires_at = expires_at;
                }
            }
            Ok(())
        }
    }
}

/// Reserve the next CFE id and move the case to `CfeAssigned`. The id is
/// only consumed when the transition succeeds, so sequences stay gap-free.
pub fn assign_cfe(
    case: &CaseFile,
    committee: &Actor,
    allocator: &mut CfeAllocator,
    details: &Value,
    expected_version: u64,
    at: DateTime<Utc>,
) -> Result<(CaseFile, CfeRecord), EngineError> {
    let year = u16::try_from(at.year())
        .map_err(|_| EngineError::PayloadInvalid("year out of range".into()))?;
    let id = allocator.peek(year);
    let mut payload = match details {
        Value::Object(map) => map.clone(),
        Value::Null => Default::default(),
        _ => {
            return Err(EngineError::PayloadInvalid(
                "assign_cfe payload must be an object".into(),
            ))
        }
    };
    payload.insert("cfe_id".into(), Value::String(id.to_string()));
    let next = apply_transition(
        case,
        Action::AssignCfe,
        committee,
        &Value::Object(payload),
        expected_version,
        at,
    )?;
    allocator.allocate(year);
    let record = next
        .cfe_record
        .clone()
        .expect("assignment creates the record");
    Ok((next, record))
}

pub fn publish_advisory(
    case: &CaseFile,
    actor: &Actor,
    advisory: &Value,
    expected_version: u64,
    at: DateTime<Utc>,
) -> Result<(CaseFile, Advisory), EngineError> {
    let next = apply_transition(case, Action::Publish, actor, advisory, expected_version, at)?;
    let published = next
        .advisory
        .clone()
        .expect("publication creates the advisory");
    Ok((next, published))
}

/// Add a party's evidence summary. Only the reporter and the vendor submit
/// evidence, and only while the case is open.
pub fn attach_evidence(
    case: &CaseFile,
    actor: &Actor,
    mut evidence: EvidenceSet,
    expected_version: Option<u64>,
    at: DateTime<Utc>,
) -> Result<CaseFile, EngineError> {
    check_version(case, expected_version)?;
    let roles = effective_roles(case, actor);
    let role = [Role::Reporter, Role::Vendor]
        .into_iter()
        .find(|r| roles.contains(r))
        .ok_or_else(|| EngineError::RoleNotPermitted {
            action: Action::AttachEvidence,
            actor_id: actor.actor_id.clone(),
        })?;
    if case.state.is_terminal() {
        return Err(EngineError::IllegalTransition {
            state: case.state,
            action: Action::AttachEvidence,
        });
    }
    evidence.party = actor.actor_id.clone();
    if !evidence.is_valid() {
        return Err(EngineError::PayloadInvalid(
            "evidence needs n >= 1 and k <= n".into(),
        ));
    }
    let mut next = case.clone();
    let payload = serde_json::to_value(&evidence).expect("evidence serializes");
    next.evidence.push(evidence);
    let state = next.state;
    push_event(
        &mut next,
        actor,
        role,
        Action::AttachEvidence,
        state,
        Some(payload),
        at,
    );
    Ok(next)
}

/// Log the panel kernel's advice. The case does not move.
pub fn record_recommendation(
    case: &CaseFile,
    actor: &Actor,
    report: &AdjudicationReport,
    expected_version: Option<u64>,
    at: DateTime<Utc>,
) -> Result<CaseFile, EngineError> {
    check_version(case, expected_version)?;
    if !effective_roles(case, actor).contains(&Role::Adjudicator) {
        return Err(EngineError::RoleNotPermitted {
            action: Action::RecordRecommendation,
            actor_id: actor.actor_id.clone(),
        });
    }
    if case.state != CaseState::Adjudication {
        return Err(EngineError::IllegalTransition {
            state: case.state,
            action: Action::RecordRecommendation,
        });
    }
    let mut next = case.clone();
    let payload = serde_json::to_value(report).expect("report serializes");
    push_event(
        &mut next,
        actor,
        Role::Adjudicator,
        Action::RecordRecommendation,
        case.state,
        Some(payload),
        at,
    );
    Ok(next)
}

/// Rebuild a case by re-running every logged event through the engine and
/// checking that each regenerated event matches the logged one.
pub fn replay(events: &[AuditEvent], card: &ModelCard) -> Result<CaseFile, EngineError> {
    let mut case: Option<CaseFile> = None;
    if events.is_empty() {
        return Err(EngineError::ReplayMismatch("empty trail".into()));
    }
    for event in events {
        case = Some(replay_event(case.as_ref(), event, card)?);
    }
    Ok(case.expect("trail is non-empty"))
}

/// Apply one logged event on top of `case` (`None` before intake) and verify
/// that the engine regenerates it byte for byte.
pub fn replay_event(
    case: Option<&CaseFile>,
    event: &AuditEvent,
    card: &ModelCard,
) -> Result<CaseFile, EngineError> {
    let payload = event.payload.clone().unwrap_or(Value::Null);
    let next = match (case, event.action) {
        (None, Action::Submit) => {
            let intake: SubmitPayload = decode(&payload)?;
            submit_report(
                intake.case_id,
                intake.report,
                card,
                intake.vendor_id,
                intake.embargo_days,
                event.timestamp,
            )?
        }
        (None, action) => {
            return Err(EngineError::ReplayMismatch(format!(
                "trail starts with `{action}`"
            )))
        }
        (Some(_), Action::Submit) => {
            return Err(EngineError::ReplayMismatch(format!(
                "second intake at seq {}",
                event.seq
            )))
        }
        (Some(case), action) => {
            let actor = Actor::new(event.actor_id.clone(), [event.role]);
            match action {
                Action::AttachEvidence => {
                    attach_evidence(case, &actor, decode(&payload)?, None, event.timestamp)?
                }
                Action::RecordRecommendation => {
                    record_recommendation(case, &actor, &decode(&payload)?, None, event.timestamp)?
                }
                action => apply_transition(
                    case,
                    action,
                    &actor,
                    &payload,
                    case.version,
                    event.timestamp,
                )?,
            }
        }
    };
    expect_same(&next, event)?;
    Ok(next)
}

fn expect_same(case: &CaseFile, logged: &AuditEvent) -> Result<(), EngineError> {
    let canonical = |event: &AuditEvent| to_canonical_bytes(event).ok();
    match case.audit.last() {
        Some(regenerated) if canonical(regenerated) == canonical(logged) => Ok(()),
        _ => Err(EngineError::ReplayMismatch(format!(
            "event {} of {} does not reproduce",
            logged.seq, case.case_id
        ))),
    }
}
