use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Bracket, ModelRef, Severity};
use crate::formats::CfeId;

token_enum! {
    pub enum CfeStatus {
        Reserved => "reserved",
        UnderInvestigation => "under_investigation",
        Published => "published",
        Fixed => "fixed",
    }
}

impl CfeStatus {
    /// Reserved records are not yet actionable for exposure statements.
    pub fn is_actionable(self) -> bool {
        !matches!(self, CfeStatus::Reserved)
    }

    pub fn is_public(self) -> bool {
        matches!(self, CfeStatus::Published | CfeStatus::Fixed)
    }
}

/// A Common Flaws and Exposures entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfeRecord {
    pub cfe_id: CfeId,
    pub status: CfeStatus,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub model_ref: ModelRef,
    /// Use-category tags the hazard impacts.
    pub affected_uses: BTreeSet<String>,
    /// Commits known to carry the hazard.
    pub affected_lineage: BTreeSet<String>,
    /// Commits that remove the hazard.
    #[serde(default)]
    pub remediating_commits: BTreeSet<String>,
    /// Guardrails the vendor asserts are effective against this hazard.
    #[serde(default)]
    pub effective_guardrails: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<Severity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory_id: Option<String>,
    pub assigned_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<DateTime<Utc>>,
    pub re_review_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cultural_scope_notes: Option<String>,
}

/// Public advisory pointing at the public CFE or CVE record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advisory {
    pub advisory_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfe_id: Option<CfeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cve_ref: Option<String>,
    pub title: String,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommendations: Option<String>,
    pub model_ref: ModelRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity_bracket: Option<Bracket>,
    pub published_at: DateTime<Utc>,
    /// Location of the public record the advisory points to.
    pub record_uri: String,
}

impl Advisory {
    /// The identifier the advisory is about.
    pub fn subject(&self) -> Option<String> {
        self.cfe_id
            .map(|id| id.to_string())
            .or_else(|| self.cve_ref.clone())
    }
}
