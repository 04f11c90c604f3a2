//! Small, fully valid sample documents for tests, examples and demos.

use chrono::{DateTime, TimeZone, Utc};
use serde_json::{json, Value};

use crate::domain::{
    CfeRecord, CfeStatus, ClaimedTrack, HarmCategory, ImpactClaim, ModelCard, ModelRef, Report,
    UseStatement,
};
use crate::formats::{CfeId, Digest};
use crate::hex::DeploymentProfile;

pub const SAMPLE_MODEL: &str = "acme-chat";
pub const SAMPLE_COMMIT: &str = "base-v1";
pub const SAMPLE_USE: &str = "chat_assistant";

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 3, 1, 0, 0, 0).unwrap()
}

/// The smallest card that parses: one use statement, no exclusions, one channel.
pub fn minimal_card_json() -> Value {
    json!({
        "schema_version": "1.0",
        "model_name": SAMPLE_MODEL,
        "model_version": SAMPLE_COMMIT,
        "lineage": ["pretrain-0", SAMPLE_COMMIT],
        "intent_and_use": [{
            "who": "customer support agents",
            "what": "drafting replies to support tickets",
            "how": "replies are polite, factual and free of demographic bias",
            "use_tags": [SAMPLE_USE]
        }],
        "scope": {"exclusions_declared": true, "exclusions": []},
        "evaluation_data": [],
        "governance": {"security_report_channel": "mailto:security@acme.example"},
        "taxonomy_ref": {"id": "ai-hazard-categories", "version": "1.0"}
    })
}

/// A card the linter has nothing to say about.
pub fn sample_card_json() -> Value {
    let mut doc = minimal_card_json();
    doc["scope"]["exclusions"] = json!([
        {"category": "prompt_injection", "description": "No protection against injected instructions is claimed."}
    ]);
    doc["evaluation_data"] = json!([{
        "framework_id": "safety-bench",
        "framework_version": "2.3",
        "dataset_ref": "safety-bench/prompts-v4",
        "outputs": {"refusal_rate": 0.97, "tolerated_violation_rate": 0.01},
        "reproducible": true
    }]);
    doc["governance"] = json!({
        "security_report_channel": "mailto:security@acme.example",
        "safety_report_channel": "https://acme.example/safety",
        "maintainer": "Acme Model Team",
        "methodology": "https://acme.example/disclosure"
    });
    doc["references"] = json!([{
        "kind": "aibom",
        "uri": "https://acme.example/aibom.json",
        "digest": Digest::of(b"aibom").to_string()
    }]);
    doc
}

pub fn sample_card() -> ModelCard {
    serde_json::from_value(sample_card_json()).expect("sample card is well-formed")
}

pub fn sample_model_ref() -> ModelRef {
    ModelRef {
        name: SAMPLE_MODEL.into(),
        version: SAMPLE_COMMIT.into(),
    }
}

/// An in-scope safety report.
pub fn sample_report() -> Report {
    Report {
        reporter_id: "reporter-1".into(),
        model_ref: sample_model_ref(),
        claimed_track: ClaimedTrack::Safety,
        impact: ImpactClaim {
            confidentiality_loss: false,
            integrity_loss: false,
            availability_loss: false,
            harm_categories: [HarmCategory::HarmfulContent].into(),
            within_declared_use: true,
            categories: [SAMPLE_USE.to_string()].into(),
            breadth: None,
        },
        narrative: "Benign support prompts elicit demeaning replies.".into(),
        evidence: None,
        reported_at: t0(),
    }
}

/// A published hazard affecting the sample model in its declared use.
pub fn sample_cfe() -> CfeRecord {
    CfeRecord {
        cfe_id: CfeId {
            year: 2025,
            sequence: 1,
        },
        status: CfeStatus::Published,
        title: "Demeaning replies in support chat".into(),
        description: String::new(),
        model_ref: sample_model_ref(),
        affected_uses: [SAMPLE_USE.to_string()].into(),
        affected_lineage: [SAMPLE_COMMIT.to_string()].into(),
        remediating_commits: Default::default(),
        effective_guardrails: Default::default(),
        severity: None,
        advisory_id: None,
        assigned_at: t0(),
        published_at: Some(t0()),
        re_review_at: t0(),
        cultural_scope_notes: None,
    }
}

pub fn sample_profile() -> DeploymentProfile {
    DeploymentProfile {
        deployment_ref: "acme-chat-prod".into(),
        model_commit: SAMPLE_COMMIT.into(),
        declared_use: UseStatement {
            who: "retail customers".into(),
            what: "order status questions".into(),
            how: "answers are accurate and courteous".into(),
            use_tags: [SAMPLE_USE.to_string()].into(),
        },
        guardrails: Default::default(),
        tuning_lineage: Vec::new(),
    }
}
