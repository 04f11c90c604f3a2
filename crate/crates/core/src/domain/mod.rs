//! Domain vocabulary shared by every other module.
//!
//! Everything here is an immutable value type; the operations in the
//! submodules are pure functions over them.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::formats::Digest;

mod classify;
mod records;
mod scope;
mod severity;
mod taxonomy;

pub use classify::classify_report;
pub use records::{Advisory, CfeRecord, CfeStatus};
pub use scope::{check_scope, ScopeVerdict, UNDECLARED_USE};
pub use severity::{breadth_floor, harm_floor, severity_bracket};
pub use taxonomy::{default_license_allowlist, validate_taxonomy};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("unknown model {name}@{version}")]
    UnknownModel { name: String, version: String },
    #[error("severity requires at least one harm category")]
    EmptyHarmSet,
}

/// Extended model card.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCard {
    pub schema_version: String,
    pub model_name: String,
    pub model_version: String,
    /// Parent commits, oldest first; the last element is `model_version`.
    pub lineage: Vec<String>,
    pub intent_and_use: Vec<UseStatement>,
    pub scope: Scope,
    pub evaluation_data: Vec<EvaluationRecord>,
    pub governance: GovernanceInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<Vec<ReferenceEntry>>,
    pub taxonomy_ref: TaxonomyRef,
}

impl ModelCard {
    pub fn model_ref(&self) -> ModelRef {
        ModelRef {
            name: self.model_name.clone(),
            version: self.model_version.clone(),
        }
    }

    /// Union of the category tags of every declared use.
    pub fn use_tags(&self) -> BTreeSet<String> {
        self.intent_and_use
            .iter()
            .flat_map(|u| u.use_tags.iter().cloned())
            .collect()
    }

    /// Violation rate the card publishes as tolerated, if any evaluation
    /// records one under [`TOLERATED_RATE_METRIC`].
    pub fn tolerated_violation_rate(&self) -> Option<f64> {
        self.evaluation_data
            .iter()
            .filter_map(|record| record.outputs.get(TOLERATED_RATE_METRIC).copied())
            .find(|rate| (0.0..1.0).contains(rate))
    }
}

/// Evaluation output key under which a card publishes its tolerated
/// violation rate.
pub const TOLERATED_RATE_METRIC: &str = "tolerated_violation_rate";

/// Who uses the model, for what, and how well it is claimed to perform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseStatement {
    pub who: String,
    pub what: String,
    /// Efficacy statement.
    pub how: String,
    /// Controlled-vocabulary tags used for exposure matching.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub use_tags: BTreeSet<String>,
}

impl UseStatement {
    pub fn is_complete(&self) -> bool {
        [&self.who, &self.what, &self.how]
            .iter()
            .all(|clause| !clause.trim().is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scope {
    /// True even when `exclusions` is empty; distinguishes "none" from "unstated".
    pub exclusions_declared: bool,
    pub exclusions: Vec<Exclusion>,
}

/// A known issue the model maker declares unaddressable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    /// Controlled-vocabulary tag, e.g. `prompt_injection`.
    pub category: String,
    /// Informational only; never used for matching.
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub framework_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub framework_version: Option<String>,
    pub dataset_ref: String,
    pub outputs: BTreeMap<String, f64>,
    pub reproducible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GovernanceInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub security_report_channel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_report_channel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maintainer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methodology: Option<String>,
    /// The model maker is a CVE Numbering Authority.
    #[serde(default)]
    pub cve_numbering_authority: bool,
}

impl GovernanceInfo {
    pub fn has_report_channel(&self) -> bool {
        self.security_report_channel.is_some() || self.safety_report_channel.is_some()
    }
}

token_enum! {
    pub enum ReferenceKind {
        Aibom => "aibom",
        SafetyAudit => "safety_audit",
        SecurityAudit => "security_audit",
        Other => "other",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub kind: ReferenceKind,
    pub uri: String,
    pub digest: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaxonomyRef {
    pub id: String,
    pub version: String,
}

/// Hazard taxonomy descriptor, checked against the taxonomy selection
/// parameters by [`validate_taxonomy`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyDescriptor {
    pub id: String,
    pub version: String,
    pub license_id: String,
    pub open_development: bool,
    pub extensible: bool,
    pub publishes_raw_responses: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark_integration_uri: Option<String>,
    pub cultural_scope_notes: String,
}

impl TaxonomyDescriptor {
    pub fn reference(&self) -> TaxonomyRef {
        TaxonomyRef {
            id: self.id.clone(),
            version: self.version.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelRef {
    pub name: String,
    pub version: String,
}

impl std::fmt::Display for ModelRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}@{}", self.name, self.version)
    }
}

token_enum! {
    /// Track the reporter believes the issue belongs to.
    pub enum ClaimedTrack {
        Security => "security",
        Safety => "safety",
        Unknown => "unknown",
    }
}

token_enum! {
    /// Track a case is handled on.
    pub enum Track {
        Security => "security",
        Safety => "safety",
        Ambiguous => "ambiguous",
    }
}

/// Result of [`classify_report`].
pub type TrackAssignment = Track;

token_enum! {
    pub enum HarmCategory {
        LossOfLife => "loss_of_life",
        PhysicalOrMentalInjury => "physical_or_mental_injury",
        SocialDisruption => "social_disruption",
        EconomicDisruption => "economic_disruption",
        EnvironmentalHarm => "environmental_harm",
        BiasInDecisionMaking => "bias_in_decision_making",
        HarmfulContent => "harmful_content",
    }
}

token_enum! {
    pub enum Breadth {
        Individual => "individual",
        Group => "group",
        Societal => "societal",
    }
}

token_enum! {
    /// Severity bracket, ordered low < medium < high < critical.
    pub enum Bracket {
        Low => "low",
        Medium => "medium",
        High => "high",
        Critical => "critical",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactClaim {
    pub confidentiality_loss: bool,
    pub integrity_loss: bool,
    pub availability_loss: bool,
    pub harm_categories: BTreeSet<HarmCategory>,
    pub within_declared_use: bool,
    /// Hazard category tags (same vocabulary as scope exclusions).
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub categories: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breadth: Option<Breadth>,
}

impl ImpactClaim {
    pub fn any_cia(&self) -> bool {
        self.confidentiality_loss || self.integrity_loss || self.availability_loss
    }

    pub fn any_harm(&self) -> bool {
        !self.harm_categories.is_empty()
    }

    /// At least one CIA flag or harm category must be claimed.
    pub fn is_valid(&self) -> bool {
        self.any_cia() || self.any_harm()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub reporter_id: String,
    pub model_ref: ModelRef,
    pub claimed_track: ClaimedTrack,
    pub impact: ImpactClaim,
    pub narrative: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EvidenceSet>,
    pub reported_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Severity {
    pub harm_categories: BTreeSet<HarmCategory>,
    pub breadth: Breadth,
    pub bracket: Bracket,
}

token_enum! {
    pub enum Role {
        Reporter => "reporter",
        Vendor => "vendor",
        Committee => "committee",
        Adjudicator => "adjudicator",
        Consumer => "consumer",
        Public => "public",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Actor {
    pub actor_id: String,
    pub display_name: String,
    pub roles: BTreeSet<Role>,
}

impl Actor {
    pub fn new(actor_id: impl Into<String>, roles: impl IntoIterator<Item = Role>) -> Self {
        let actor_id = actor_id.into();
        Self {
            display_name: actor_id.clone(),
            actor_id,
            roles: roles.into_iter().collect(),
        }
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.roles.contains(&role)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbargoWindow {
    pub starts_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
    /// Always contains the case's reporter and vendor.
    pub participants: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifted_at: Option<DateTime<Utc>>,
}

impl EmbargoWindow {
    pub fn is_active(&self) -> bool {
        self.lifted_at.is_none()
    }

    pub fn is_expired(&self, now: DateTime<Utc>) -> bool {
        self.is_active() && now >= self.expires_at
    }
}

/// One party's sample summary: `k` violations observed in `n` trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub party: String,
    pub n: u64,
    pub k: u64,
    pub sampling_protocol: String,
    /// Digest of the sealed raw prompt/output pairs, when uploaded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sealed_payload_digest: Option<Digest>,
}

impl EvidenceSet {
    pub fn new(party: impl Into<String>, k: u64, n: u64) -> Self {
        Self {
            party: party.into(),
            n,
            k,
            sampling_protocol: String::new(),
            sealed_payload_digest: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.n >= 1 && self.k <= self.n
    }
}

/// Re-review horizon applied to every CFE record: harm perception shifts
/// over time, so each record carries a date at which it must be revisited.
pub const RE_REVIEW_DAYS: i64 = 365;
