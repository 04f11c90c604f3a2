use serde::{Deserialize, Serialize};

use super::{ModelCard, Report};

/// Pseudo-exclusion recorded when a harm-only report falls outside every
/// declared use.
pub const UNDECLARED_USE: &str = "undeclared_use";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    tag = "verdict",
    content = "matched_exclusion",
    rename_all = "snake_case"
)]
pub enum ScopeVerdict {
    InScope,
    OutOfScope(String),
}

impl ScopeVerdict {
    pub fn is_in_scope(&self) -> bool {
        matches!(self, ScopeVerdict::InScope)
    }
}

/// Match a report against the card's declared exclusions.
///
/// Matching is tag equality between the report's hazard categories and the
/// exclusion categories; exclusion descriptions are never consulted. The
/// first exclusion in card order wins.
pub fn check_scope(report: &Report, card: &ModelCard) -> ScopeVerdict {
    let claimed = &report.impact.categories;
    if let Some(exclusion) = card
        .scope
        .exclusions
        .iter()
        .find(|exclusion| claimed.contains(&exclusion.category))
    {
        return ScopeVerdict::OutOfScope(exclusion.category.clone());
    }
    if !report.impact.within_declared_use && !report.impact.any_cia() {
        return ScopeVerdict::OutOfScope(UNDECLARED_USE.to_string());
    }
    ScopeVerdict::InScope
}
