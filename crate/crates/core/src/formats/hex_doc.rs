//! `.hex.json` exposure statements.

use super::finding::FindingCode;
use super::reader::{parse_json, Reader};
use super::{to_canonical_bytes, CfeId, FormatError};
use crate::hex::{
    check_status_fields, HexStatement, HexStatus, HexSubcomponent, Justification, LifecycleStage,
};

/// Parse and validate a statement. Unknown fields are ignored so that newer
/// producers can add fields without breaking older consumers.
pub fn parse_hex(bytes: &[u8]) -> Result<HexStatement, FormatError> {
    let root = parse_json(bytes)?;
    let mut r = Reader::new();
    let statement = r.as_object(&root, "").and_then(|obj| {
        let statement_id = r.string(&obj, "statement_id");
        let cfe_id: Option<CfeId> = r.token(&obj, "cfe_id", FindingCode::InvalidCfeId);
        let deployment_ref = r.string(&obj, "deployment_ref");
        let subcomponent = r.object(&obj, "subcomponent").and_then(|sub| {
            let commit = r.string(&sub, "commit");
            let stage: Option<LifecycleStage> =
                r.token(&sub, "lifecycle_stage", FindingCode::UnknownLifecycleStage);
            let source = r.text(&sub, "source");
            Some(HexSubcomponent {
                commit: commit?,
                lifecycle_stage: stage?,
                source: source?,
            })
        });
        let status: Option<HexStatus> = r.token(&obj, "status", FindingCode::UnknownStatus);
        let justification: Result<Option<Justification>, ()> =
            r.opt_token(&obj, "justification", FindingCode::UnknownJustification);
        let impact_statement = r.opt_string(&obj, "impact_statement");
        let action_statement = r.opt_string(&obj, "action_statement");
        let issued_at = r.timestamp(&obj, "issued_at");
        let supersedes = r.opt_string(&obj, "supersedes");
        if let (Some(status), Ok(justification), Ok(impact)) =
            (status, justification, &impact_statement)
        {
            for finding in check_status_fields(status, justification, impact.as_deref()) {
                r.push(finding.code, finding.path, finding.message);
            }
        }
        Some(HexStatement {
            statement_id: statement_id?,
            cfe_id: cfe_id?,
            deployment_ref: deployment_ref?,
            subcomponent: subcomponent?,
            status: status?,
            justification: justification.ok()?,
            impact_statement: impact_statement.ok()?,
            action_statement: action_statement.ok()?,
            issued_at: issued_at?,
            supersedes: supersedes.ok()?,
        })
    });
    r.finish(statement)
}

pub fn emit_hex(statement: &HexStatement) -> Vec<u8> {
    to_canonical_bytes(statement).expect("statements contain no floating point values")
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    fn body() -> serde_json::Value {
        json!({
            "statement_id": "hex-1",
            "cfe_id": "CFE-2025-0001",
            "deployment_ref": "acme-chat-prod",
            "subcomponent": {"commit": "base-v1", "lifecycle_stage": "training", "source": "m@1"},
            "status": "unaffected",
            "justification": "guardrails_in_place",
            "issued_at": "2025-03-01T00:00:00Z",
            "x_vendor_extension": {"anything": true}
        })
    }

    fn codes(value: &serde_json::Value) -> Vec<FindingCode> {
        let err = parse_hex(value.to_string().as_bytes()).unwrap_err();
        err.findings().iter().map(|f| f.code).collect()
    }

    #[test]
    fn valid_unaffected_statement() {
        let stmt = parse_hex(body().to_string().as_bytes()).unwrap();
        assert_eq!(stmt.justification, Some(Justification::GuardrailsInPlace));
        assert_eq!(parse_hex(&emit_hex(&stmt)).unwrap(), stmt);
    }

    #[test]
    fn unaffected_needs_justification() {
        let mut doc = body();
        doc.as_object_mut().unwrap().remove("justification");
        assert_eq!(codes(&doc), vec![FindingCode::JustificationRequired]);
    }

    #[test]
    fn unknown_status_token() {
        let mut doc = body();
        doc["status"] = json!("maybe");
        assert_eq!(codes(&doc), vec![FindingCode::UnknownStatus]);
    }

    #[test]
    fn collects_every_defect() {
        let mut doc = body();
        doc["cfe_id"] = json!("CFE-25-1");
        doc["subcomponent"]["lifecycle_stage"] = json!("deployment");
        doc["justification"] = json!("because");
        doc["issued_at"] = json!("yesterday");
        let found = codes(&doc);
        assert_eq!(found.len(), 4, "{found:?}");
    }

    #[test]
    fn affected_rejects_justification() {
        let mut doc = body();
        doc["status"] = json!("affected");
        let found = codes(&doc);
        assert!(found.contains(&FindingCode::JustificationNotAllowed));
        assert!(found.contains(&FindingCode::ImpactStatementRequired));
    }
}
