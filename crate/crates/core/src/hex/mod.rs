//! Hazards Exposure eXchange (HEX): statements binding a published CFE to a
//! concrete deployment, their derivation from deployment profiles, variant
//! closure over model lineage, and supersession chains.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::domain::UseStatement;
use crate::formats::{CfeId, Finding, FindingCode};

mod exposure;
mod ledger;
mod variants;

pub use exposure::{decide, evaluate_exposure, ExposureFacts, LineageMatch};
pub use ledger::{supersede, HexLedger, StatusUpdate};
pub use variants::{
    affected_closure, classify_lineage, hex_for_variants, LineageClass, LineageGraph,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HexError {
    #[error("{0} is not actionable yet (still reserved)")]
    CfeNotActionable(CfeId),
    #[error("lineage graph has a cycle through commit `{0}`")]
    CyclicLineage(String),
    #[error("statement issued at {new} cannot supersede one issued at {old}")]
    SupersedeOrderViolation {
        old: DateTime<Utc>,
        new: DateTime<Utc>,
    },
    #[error("statement does not continue the chain for {cfe_id}/{deployment_ref}: {reason}")]
    ChainMismatch {
        cfe_id: CfeId,
        deployment_ref: String,
        reason: String,
    },
    #[error("invalid statement: {} finding(s)", .0.len())]
    Invalid(Vec<Finding>),
    #[error("invalid deployment profile: {0}")]
    InvalidProfile(String),
}

token_enum! {
    pub enum LifecycleStage {
        Development => "development",
        Training => "training",
        FineTuning => "fine_tuning",
        Inference => "inference",
    }
}

token_enum! {
    pub enum HexStatus {
        Affected => "affected",
        Unaffected => "unaffected",
        Fixed => "fixed",
        UnderInvestigation => "under_investigation",
    }
}

token_enum! {
    pub enum Justification {
        ModelUseNotApproved => "model_use_not_approved",
        GuardrailsInPlace => "guardrails_in_place",
        TunedOut => "tuned_out",
        /// The deployment's lineage never contained the hazardous commit.
        HazardNotInModelLineage => "hazard_not_in_model_lineage",
    }
}

/// Where in the model lifecycle the hazard is introduced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexSubcomponent {
    pub commit: String,
    pub lifecycle_stage: LifecycleStage,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexStatement {
    pub statement_id: String,
    pub cfe_id: CfeId,
    pub deployment_ref: String,
    pub subcomponent: HexSubcomponent,
    pub status: HexStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub justification: Option<Justification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact_statement: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_statement: Option<String>,
    pub issued_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersedes: Option<String>,
}

impl HexStatement {
    /// Invariant violations; empty for a well-formed statement.
    pub fn check(&self) -> Vec<Finding> {
        check_status_fields(
            self.status,
            self.justification,
            self.impact_statement.as_deref(),
        )
    }
}

pub(crate) fn check_status_fields(
    status: HexStatus,
    justification: Option<Justification>,
    impact: Option<&str>,
) -> Vec<Finding> {
    let mut findings = Vec::new();
    match (status, justification) {
        (HexStatus::Unaffected, None) => findings.push(Finding::new(
            FindingCode::JustificationRequired,
            "/justification",
            "status `unaffected` requires a justification",
        )),
        (HexStatus::Unaffected, Some(_)) | (_, None) => {}
        (other, Some(_)) => findings.push(Finding::new(
            FindingCode::JustificationNotAllowed,
            "/justification",
            format!("status `{other}` must not carry a justification"),
        )),
    }
    match (status, impact) {
        (HexStatus::Affected, None) => findings.push(Finding::new(
            FindingCode::ImpactStatementRequired,
            "/impact_statement",
            "status `affected` requires an impact statement",
        )),
        (HexStatus::Affected, Some(_)) | (_, None) => {}
        (other, Some(_)) => findings.push(Finding::new(
            FindingCode::ImpactStatementNotAllowed,
            "/impact_statement",
            format!("status `{other}` must not carry an impact statement"),
        )),
    }
    findings
}

/// A consumer's declared deployment of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeploymentProfile {
    pub deployment_ref: String,
    pub model_commit: String,
    pub declared_use: UseStatement,
    #[serde(default)]
    pub guardrails: BTreeSet<String>,
    /// Fine-tunes applied after `model_commit`, oldest first.
    #[serde(default)]
    pub tuning_lineage: Vec<String>,
}

impl DeploymentProfile {
    pub fn is_valid(&self) -> bool {
        !self.model_commit.trim().is_empty() && !self.deployment_ref.trim().is_empty()
    }

    /// The commit actually served: the last fine-tune, else the base model.
    pub fn deployed_commit(&self) -> &str {
        self.tuning_lineage.last().unwrap_or(&self.model_commit)
    }
}
