use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::exposure::statement_id;
use super::{HexError, HexStatement, HexStatus, HexSubcomponent, Justification};
use crate::formats::CfeId;

/// A new status for an existing (cfe, deployment) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusUpdate {
    pub status: HexStatus,
    pub justification: Option<Justification>,
    pub impact_statement: Option<String>,
    pub action_statement: Option<String>,
    /// Keeps the previous subcomponent when absent.
    pub subcomponent: Option<HexSubcomponent>,
    pub issued_at: DateTime<Utc>,
}

impl StatusUpdate {
    pub fn new(status: HexStatus, issued_at: DateTime<Utc>) -> Self {
        Self {
            status,
            justification: None,
            impact_statement: None,
            action_statement: None,
            subcomponent: None,
            issued_at,
        }
    }
}

/// Build the statement that replaces `old`.
pub fn supersede(old: &HexStatement, update: StatusUpdate) -> Result<HexStatement, HexError> {
    if update.issued_at <= old.issued_at {
        return Err(HexError::SupersedeOrderViolation {
            old: old.issued_at,
            new: update.issued_at,
        });
    }
    let next = HexStatement {
        statement_id: statement_id(
            old.cfe_id,
            &old.deployment_ref,
            update.issued_at,
            update.status,
        ),
        cfe_id: old.cfe_id,
        deployment_ref: old.deployment_ref.clone(),
        subcomponent: update
            .subcomponent
            .unwrap_or_else(|| old.subcomponent.clone()),
        status: update.status,
        justification: update.justification,
        impact_statement: update.impact_statement,
        action_statement: update.action_statement,
        issued_at: update.issued_at,
        supersedes: Some(old.statement_id.clone()),
    };
    let findings = next.check();
    if findings.is_empty() {
        Ok(next)
    } else {
        Err(HexError::Invalid(findings))
    }
}

/// Supersession chains, one per (cfe, deployment) pair, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexLedger {
    chains: BTreeMap<CfeId, BTreeMap<String, Vec<HexStatement>>>,
}

impl HexLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Check that `stmt` may extend its chain without recording it.
    pub fn validate(&self, stmt: &HexStatement) -> Result<(), HexError> {
        let findings = stmt.check();
        if !findings.is_empty() {
            return Err(HexError::Invalid(findings));
        }
        let mismatch = |reason: String| HexError::ChainMismatch {
            cfe_id: stmt.cfe_id,
            deployment_ref: stmt.deployment_ref.clone(),
            reason,
        };
        if self.get(&stmt.statement_id).is_some() {
            return Err(mismatch(format!(
                "statement id `{}` already recorded",
                stmt.statement_id
            )));
        }
        match (
            self.effective(stmt.cfe_id, &stmt.deployment_ref),
            &stmt.supersedes,
        ) {
            (None, None) => Ok(()),
            (None, Some(prev)) => Err(mismatch(format!("nothing to supersede (got `{prev}`)"))),
            (Some(head), None) => Err(mismatch(format!(
                "must supersede the effective statement `{}`",
                head.statement_id
            ))),
            (Some(head), Some(prev)) if *prev != head.statement_id => Err(mismatch(format!(
                "supersedes `{prev}` but the effective statement is `{}`",
                head.statement_id
            ))),
            (Some(head), Some(_)) if stmt.issued_at <= head.issued_at => {
                Err(HexError::SupersedeOrderViolation {
                    old: head.issued_at,
                    new: stmt.issued_at,
                })
            }
            _ => Ok(()),
        }
    }

    pub fn record(&mut self, stmt: HexStatement) -> Result<(), HexError> {
        self.validate(&stmt)?;
        self.chains
            .entry(stmt.cfe_id)
            .or_default()
            .entry(stmt.deployment_ref.clone())
            .or_default()
            .push(stmt);
        Ok(())
    }

    /// The newest statement in the pair's chain.
    pub fn effective(&self, cfe_id: CfeId, deployment_ref: &str) -> Option<&HexStatement> {
        self.chain(cfe_id, deployment_ref).last()
    }

    pub fn chain(&self, cfe_id: CfeId, deployment_ref: &str) -> &[HexStatement] {
        self.chains
            .get(&cfe_id)
            .and_then(|by_dep| by_dep.get(deployment_ref))
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    /// Every statement for a CFE, grouped by deployment then chain order.
    pub fn for_cfe(&self, cfe_id: CfeId) -> Vec<&HexStatement> {
        self.chains
            .get(&cfe_id)
            .map(|by_dep| by_dep.values().flatten().collect())
            .unwrap_or_default()
    }

    pub fn get(&self, statement_id: &str) -> Option<&HexStatement> {
        self.iter().find(|stmt| stmt.statement_id == statement_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &HexStatement> {
        self.chains
            .values()
            .flat_map(|by_dep| by_dep.values().flatten())
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }
}
