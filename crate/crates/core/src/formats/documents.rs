//! Taxonomy descriptors, CFE records, advisories and report intake bodies.

use std::collections::BTreeSet;

use super::finding::FindingCode;
use super::reader::{parse_json, pointer, Obj, Reader};
use super::{to_canonical_bytes, CfeId, FormatError};
use crate::domain::{
    severity_bracket, Advisory, Bracket, Breadth, CfeRecord, CfeStatus, ClaimedTrack, HarmCategory,
    ImpactClaim, ModelRef, Severity, TaxonomyDescriptor,
};
use serde::{Deserialize, Serialize};

fn infallible(bytes: Result<Vec<u8>, FormatError>) -> Vec<u8> {
    bytes.expect("document contains no floating point values")
}

pub fn parse_taxonomy(bytes: &[u8]) -> Result<TaxonomyDescriptor, FormatError> {
    let root = parse_json(bytes)?;
    let mut r = Reader::new();
    let descriptor = r.as_object(&root, "").and_then(|obj| {
        let id = r.string(&obj, "id");
        let version = r.string(&obj, "version");
        let license_id = r.string(&obj, "license_id");
        let open_development = r.boolean(&obj, "open_development");
        let extensible = r.boolean(&obj, "extensible");
        let publishes_raw_responses = r.boolean(&obj, "publishes_raw_responses");
        let benchmark_integration_uri = r.opt_string(&obj, "benchmark_integration_uri");
        let cultural_scope_notes = r.opt_string(&obj, "cultural_scope_notes");
        Some(TaxonomyDescriptor {
            id: id?,
            version: version?,
            license_id: license_id?,
            open_development: open_development?,
            extensible: extensible?,
            publishes_raw_responses: publishes_raw_responses?,
            benchmark_integration_uri: benchmark_integration_uri.ok()?,
            cultural_scope_notes: cultural_scope_notes.ok()?.unwrap_or_default(),
        })
    });
    r.finish(descriptor)
}

pub fn emit_taxonomy(descriptor: &TaxonomyDescriptor) -> Vec<u8> {
    infallible(to_canonical_bytes(descriptor))
}

pub(crate) fn read_model_ref(r: &mut Reader, obj: &Obj<'_>, key: &str) -> Option<ModelRef> {
    let model = r.object(obj, key)?;
    let name = r.string(&model, "name");
    let version = r.string(&model, "version");
    Some(ModelRef {
        name: name?,
        version: version?,
    })
}

fn read_token_set<T: std::str::FromStr + Ord>(
    r: &mut Reader,
    obj: &Obj<'_>,
    key: &str,
    code: FindingCode,
) -> Option<BTreeSet<T>> {
    let raw = r.opt_string_set(obj, key)?;
    let path = pointer(&obj.path, key);
    let mut ok = true;
    let mut out = BTreeSet::new();
    for text in raw {
        match r.parse_token(&text, &path, code) {
            Some(token) => {
                out.insert(token);
            }
            None => ok = false,
        }
    }
    ok.then_some(out)
}

fn read_severity(r: &mut Reader, obj: &Obj<'_>) -> Option<Option<Severity>> {
    let Some(value) = r.opt_field(obj, "severity") else {
        return Some(None);
    };
    let sev = r.as_object(value, &pointer(&obj.path, "severity"))?;
    let harms: Option<BTreeSet<HarmCategory>> =
        read_token_set(r, &sev, "harm_categories", FindingCode::UnknownEnumValue);
    let breadth: Option<Breadth> = r.token(&sev, "breadth", FindingCode::UnknownEnumValue);
    let bracket: Option<Bracket> = r.token(&sev, "bracket", FindingCode::UnknownEnumValue);
    let (harms, breadth, bracket) = (harms?, breadth?, bracket?);
    match severity_bracket(&harms, breadth) {
        Ok(expected) if expected.bracket == bracket => Some(Some(expected)),
        Ok(expected) => {
            r.push(
                FindingCode::SeverityMismatch,
                pointer(&sev.path, "bracket"),
                format!(
                    "bracket `{bracket}` does not match the mapping table (`{}`)",
                    expected.bracket
                ),
            );
            None
        }
        Err(_) => {
            r.push(
                FindingCode::EmptyField,
                pointer(&sev.path, "harm_categories"),
                "severity requires at least one harm category",
            );
            None
        }
    }
}

pub fn parse_cfe_record(bytes: &[u8]) -> Result<CfeRecord, FormatError> {
    let root = parse_json(bytes)?;
    let mut r = Reader::new();
    let record = r.as_object(&root, "").and_then(|obj| {
        let cfe_id: Option<CfeId> = r.token(&obj, "cfe_id", FindingCode::InvalidCfeId);
        let status: Option<CfeStatus> = r.token(&obj, "status", FindingCode::UnknownEnumValue);
        let title = r.string(&obj, "title");
        let description = r.opt_string(&obj, "description");
        let model_ref = read_model_ref(&mut r, &obj, "model_ref");
        let affected_uses = r
            .field(&obj, "affected_uses")
            .and_then(|_| r.opt_string_set(&obj, "affected_uses"));
        let affected_lineage = r
            .field(&obj, "affected_lineage")
            .and_then(|_| r.opt_string_set(&obj, "affected_lineage"));
        let remediating_commits = r.opt_string_set(&obj, "remediating_commits");
        let effective_guardrails = r.opt_string_set(&obj, "effective_guardrails");
        let severity = read_severity(&mut r, &obj);
        let advisory_id = r.opt_string(&obj, "advisory_id");
        let assigned_at = r.timestamp(&obj, "assigned_at");
        let published_at = r.opt_timestamp(&obj, "published_at");
        let re_review_at = r.timestamp(&obj, "re_review_at");
        let cultural_scope_notes = r.opt_string(&obj, "cultural_scope_notes");
        Some(CfeRecord {
            cfe_id: cfe_id?,
            status: status?,
            title: title?,
            description: description.ok()?.unwrap_or_default(),
            model_ref: model_ref?,
            affected_uses: affected_uses?,
            affected_lineage: affected_lineage?,
            remediating_commits: remediating_commits?,
            effective_guardrails: effective_guardrails?,
            severity: severity?,
            advisory_id: advisory_id.ok()?,
            assigned_at: assigned_at?,
            published_at: published_at.ok()?,
            re_review_at: re_review_at?,
            cultural_scope_notes: cultural_scope_notes.ok()?,
        })
    });
    r.finish(record)
}

pub fn emit_cfe_record(record: &CfeRecord) -> Vec<u8> {
    infallible(to_canonical_bytes(record))
}

pub fn parse_advisory(bytes: &[u8]) -> Result<Advisory, FormatError> {
    let root = parse_json(bytes)?;
    let mut r = Reader::new();
    let advisory = r.as_object(&root, "").and_then(|obj| {
        let advisory_id = r.string(&obj, "advisory_id");
        let cfe_id = r.opt_token::<CfeId>(&obj, "cfe_id", FindingCode::InvalidCfeId);
        let cve_ref = r.opt_string(&obj, "cve_ref");
        if matches!((&cfe_id, &cve_ref), (Ok(None), Ok(None))) {
            r.push(
                FindingCode::MissingIdentifier,
                "",
                "an advisory must reference a cfe_id or a cve_ref",
            );
        }
        let title = r.string(&obj, "title");
        let summary = r.string(&obj, "summary");
        let recommendations = r.opt_string(&obj, "recommendations");
        let model_ref = read_model_ref(&mut r, &obj, "model_ref");
        let severity_bracket =
            r.opt_token::<Bracket>(&obj, "severity_bracket", FindingCode::UnknownEnumValue);
        let published_at = r.timestamp(&obj, "published_at");
        let record_uri = r.string(&obj, "record_uri");
        Some(Advisory {
            advisory_id: advisory_id?,
            cfe_id: cfe_id.ok()?,
            cve_ref: cve_ref.ok()?,
            title: title?,
            summary: summary?,
            recommendations: recommendations.ok()?,
            model_ref: model_ref?,
            severity_bracket: severity_bracket.ok()?,
            published_at: published_at?,
            record_uri: record_uri?,
        })
    });
    r.finish(advisory)
}

pub fn emit_advisory(advisory: &Advisory) -> Vec<u8> {
    infallible(to_canonical_bytes(advisory))
}

/// Evidence as submitted by a party; the party identity and payload digest
/// are filled in by the registry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSubmission {
    pub n: u64,
    pub k: u64,
    pub sampling_protocol: String,
}

/// Report body as submitted; reporter and timestamp come from the session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSubmission {
    pub model_ref: ModelRef,
    pub claimed_track: ClaimedTrack,
    pub impact: ImpactClaim,
    pub narrative: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EvidenceSubmission>,
}

fn read_evidence(r: &mut Reader, obj: &Obj<'_>) -> Option<EvidenceSubmission> {
    let n = r.uint(obj, "n");
    let k = r.uint(obj, "k");
    let sampling_protocol = r.text(obj, "sampling_protocol");
    if let Some(0) = n {
        r.push(
            FindingCode::WrongType,
            pointer(&obj.path, "n"),
            "n must be at least 1",
        );
        return None;
    }
    if let (Some(n), Some(k)) = (n, k) {
        if k > n {
            r.push(
                FindingCode::ViolationsExceedTrials,
                pointer(&obj.path, "k"),
                format!("k = {k} exceeds n = {n}"),
            );
            return None;
        }
    }
    Some(EvidenceSubmission {
        n: n?,
        k: k?,
        sampling_protocol: sampling_protocol?,
    })
}

pub fn parse_evidence_submission(bytes: &[u8]) -> Result<EvidenceSubmission, FormatError> {
    let root = parse_json(bytes)?;
    let mut r = Reader::new();
    let evidence = r
        .as_object(&root, "")
        .and_then(|obj| read_evidence(&mut r, &obj));
    r.finish(evidence)
}

fn read_impact(r: &mut Reader, obj: &Obj<'_>) -> Option<ImpactClaim> {
    let confidentiality_loss = r.boolean(obj, "confidentiality_loss");
    let integrity_loss = r.boolean(obj, "integrity_loss");
    let availability_loss = r.boolean(obj, "availability_loss");
    let harm_categories = r.field(obj, "harm_categories").and_then(|_| {
        read_token_set::<HarmCategory>(r, obj, "harm_categories", FindingCode::UnknownEnumValue)
    });
    let within_declared_use = r.boolean(obj, "within_declared_use");
    let categories = r.opt_string_set(obj, "categories");
    let breadth = r.opt_token::<Breadth>(obj, "breadth", FindingCode::UnknownEnumValue);
    let claim = ImpactClaim {
        confidentiality_loss: confidentiality_loss?,
        integrity_loss: integrity_loss?,
        availability_loss: availability_loss?,
        harm_categories: harm_categories?,
        within_declared_use: within_declared_use?,
        categories: categories?,
        breadth: breadth.ok()?,
    };
    if !claim.is_valid() {
        r.push(
            FindingCode::NoImpactClaimed,
            obj.path.clone(),
            "claim at least one CIA loss or one harm category",
        );
        return None;
    }
    Some(claim)
}

pub fn parse_report_submission(bytes: &[u8]) -> Result<ReportSubmission, FormatError> {
    let root = parse_json(bytes)?;
    let mut r = Reader::new();
    let report = r.as_object(&root, "").and_then(|obj| {
        let model_ref = read_model_ref(&mut r, &obj, "model_ref");
        let claimed_track =
            r.token::<ClaimedTrack>(&obj, "claimed_track", FindingCode::UnknownEnumValue);
        let impact = r
            .object(&obj, "impact")
            .and_then(|impact| read_impact(&mut r, &impact));
        let narrative = r.string(&obj, "narrative");
        let evidence = match r.opt_field(&obj, "evidence") {
            None => Some(None),
            Some(value) => r
                .as_object(value, "/evidence")
                .and_then(|ev| read_evidence(&mut r, &ev))
                .map(Some),
        };
        Some(ReportSubmission {
            model_ref: model_ref?,
            claimed_track: claimed_track?,
            impact: impact?,
            narrative: narrative?,
            evidence: evidence?,
        })
    });
    r.finish(report)
}
