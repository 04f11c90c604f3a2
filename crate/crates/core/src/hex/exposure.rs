use chrono::{DateTime, Utc};

use super::{
    DeploymentProfile, HexError, HexStatement, HexStatus, HexSubcomponent, Justification,
    LifecycleStage,
};
use crate::domain::{CfeRecord, CfeStatus};
use crate::formats::{CfeId, Digest};

/// The commit through which a deployment inherits the hazard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineageMatch {
    pub commit: String,
    pub stage: LifecycleStage,
}

/// The five predicates the status derivation depends on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposureFacts {
    pub lineage: Option<LineageMatch>,
    pub matched_use: Option<String>,
    pub remediation: Option<String>,
    pub guardrail: Option<String>,
    pub cfe_status: CfeStatus,
}

/// Outcome of the rule cascade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub status: HexStatus,
    pub justification: Option<Justification>,
    pub impact_statement: Option<String>,
}

/// Apply the derivation rules in precedence order: lineage, use, tuning,
/// guardrails, investigation status, affected. The strongest
/// non-applicability claim wins.
pub fn decide(facts: &ExposureFacts) -> Decision {
    let unaffected = |justification| Decision {
        status: HexStatus::Unaffected,
        justification: Some(justification),
        impact_statement: None,
    };
    if facts.lineage.is_none() {
        return unaffected(Justification::HazardNotInModelLineage);
    }
    let Some(matched_use) = &facts.matched_use else {
        return unaffected(Justification::ModelUseNotApproved);
    };
    if facts.remediation.is_some() {
        if facts.cfe_status == CfeStatus::Fixed {
            return Decision {
                status: HexStatus::Fixed,
                justification: None,
                impact_statement: None,
            };
        }
        return unaffected(Justification::TunedOut);
    }
    if facts.guardrail.is_some() {
        return unaffected(Justification::GuardrailsInPlace);
    }
    if facts.cfe_status == CfeStatus::UnderInvestigation {
        return Decision {
            status: HexStatus::UnderInvestigation,
            justification: None,
            impact_statement: None,
        };
    }
    Decision {
        status: HexStatus::Affected,
        justification: None,
        impact_statement: Some(format!(
            "declared use `{matched_use}` matches an impacted use of the hazard"
        )),
    }
}

pub(crate) fn check_inputs(cfe: &CfeRecord, profile: &DeploymentProfile) -> Result<(), HexError> {
    if !cfe.status.is_actionable() {
        return Err(HexError::CfeNotActionable(cfe.cfe_id));
    }
    if !profile.is_valid() {
        return Err(HexError::InvalidProfile(format!(
            "deployment `{}` needs a non-empty deployment_ref and model_commit",
            profile.deployment_ref
        )));
    }
    Ok(())
}

/// Facts that do not depend on lineage: use match, remediation, guardrail.
pub(crate) fn shared_facts(
    cfe: &CfeRecord,
    profile: &DeploymentProfile,
    lineage: Option<LineageMatch>,
) -> ExposureFacts {
    ExposureFacts {
        lineage,
        matched_use: profile
            .declared_use
            .use_tags
            .iter()
            .find(|tag| cfe.affected_uses.contains(*tag))
            .cloned(),
        remediation: profile
            .tuning_lineage
            .iter()
            .find(|commit| cfe.remediating_commits.contains(*commit))
            .cloned(),
        guardrail: profile
            .guardrails
            .iter()
            .find(|guard| cfe.effective_guardrails.contains(*guard))
            .cloned(),
        cfe_status: cfe.status,
    }
}

fn direct_lineage(cfe: &CfeRecord, profile: &DeploymentProfile) -> Option<LineageMatch> {
    if cfe.affected_lineage.contains(&profile.model_commit) {
        return Some(LineageMatch {
            commit: profile.model_commit.clone(),
            stage: LifecycleStage::Training,
        });
    }
    profile
        .tuning_lineage
        .iter()
        .find(|commit| cfe.affected_lineage.contains(*commit))
        .map(|commit| LineageMatch {
            commit: commit.clone(),
            stage: LifecycleStage::FineTuning,
        })
}

/// Derive the exposure statement for one deployment of a published CFE.
pub fn evaluate_exposure(
    cfe: &CfeRecord,
    profile: &DeploymentProfile,
    issued_at: DateTime<Utc>,
) -> Result<HexStatement, HexError> {
    check_inputs(cfe, profile)?;
    let facts = shared_facts(cfe, profile, direct_lineage(cfe, profile));
    Ok(build_statement(cfe, profile, &facts, issued_at))
}

pub(crate) fn build_statement(
    cfe: &CfeRecord,
    profile: &DeploymentProfile,
    facts: &ExposureFacts,
    issued_at: DateTime<Utc>,
) -> HexStatement {
    let decision = decide(facts);
    let subcomponent = match &facts.lineage {
        Some(found) => HexSubcomponent {
            commit: found.commit.clone(),
            lifecycle_stage: found.stage,
            source: match found.stage {
                LifecycleStage::Training | LifecycleStage::Development => cfe.model_ref.to_string(),
                _ => profile.deployment_ref.clone(),
            },
        },
        None => HexSubcomponent {
            commit: profile.deployed_commit().to_string(),
            lifecycle_stage: LifecycleStage::Inference,
            source: profile.deployment_ref.clone(),
        },
    };
    let action_statement = (decision.status == HexStatus::Affected).then(|| remedy_advice(cfe));
    HexStatement {
        statement_id: statement_id(
            cfe.cfe_id,
            &profile.deployment_ref,
            issued_at,
            decision.status,
        ),
        cfe_id: cfe.cfe_id,
        deployment_ref: profile.deployment_ref.clone(),
        subcomponent,
        status: decision.status,
        justification: decision.justification,
        impact_statement: decision.impact_statement,
        action_statement,
        issued_at,
        supersedes: None,
    }
}

fn remedy_advice(cfe: &CfeRecord) -> String {
    let mut parts = Vec::new();
    if !cfe.remediating_commits.is_empty() {
        let commits: Vec<&str> = cfe.remediating_commits.iter().map(String::as_str).collect();
        parts.push(format!(
            "move to a remediating commit ({})",
            commits.join(", ")
        ));
    }
    if !cfe.effective_guardrails.is_empty() {
        let guards: Vec<&str> = cfe
            .effective_guardrails
            .iter()
            .map(String::as_str)
            .collect();
        parts.push(format!(
            "deploy an effective guardrail ({})",
            guards.join(", ")
        ));
    }
    if parts.is_empty() {
        "no remediation published yet; restrict the deployment to unaffected uses".to_string()
    } else {
        parts.join(" or ")
    }
}

pub(crate) fn statement_id(
    cfe_id: CfeId,
    deployment_ref: &str,
    issued_at: DateTime<Utc>,
    status: HexStatus,
) -> String {
    let seed = format!(
        "{cfe_id}\n{deployment_ref}\n{}\n{status}",
        issued_at.to_rfc3339()
    );
    format!("hex-{}", &Digest::of(seed.as_bytes()).hex()[..16])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{sample_cfe, sample_profile, t0};

    #[test]
    fn disjoint_lineage() {
        let mut profile = sample_profile();
        profile.model_commit = "unrelated".into();
        let stmt = evaluate_exposure(&sample_cfe(), &profile, t0()).unwrap();
        assert_eq!(stmt.status, HexStatus::Unaffected);
        assert_eq!(
            stmt.justification,
            Some(Justification::HazardNotInModelLineage)
        );
    }

    #[test]
    fn guardrail_in_place() {
        let mut cfe = sample_cfe();
        cfe.effective_guardrails.insert("toxicity-filter".into());
        let mut profile = sample_profile();
        profile.guardrails.insert("toxicity-filter".into());
        let stmt = evaluate_exposure(&cfe, &profile, t0()).unwrap();
        assert_eq!(stmt.status, HexStatus::Unaffected);
        assert_eq!(stmt.justification, Some(Justification::GuardrailsInPlace));
    }

    #[test]
    fn unmitigated_published_hazard_is_affected() {
        let stmt = evaluate_exposure(&sample_cfe(), &sample_profile(), t0()).unwrap();
        assert_eq!(stmt.status, HexStatus::Affected);
        assert!(stmt
            .impact_statement
            .as_deref()
            .unwrap()
            .contains("chat_assistant"));
        assert!(stmt.check().is_empty());
    }

    #[test]
    fn use_mismatch() {
        let mut profile = sample_profile();
        profile.declared_use.use_tags = ["image_captioning".to_string()].into();
        let stmt = evaluate_exposure(&sample_cfe(), &profile, t0()).unwrap();
        assert_eq!(stmt.justification, Some(Justification::ModelUseNotApproved));
    }

    #[test]
    fn fixed_cfe_with_fix_applied() {
        let mut cfe = sample_cfe();
        cfe.status = CfeStatus::Fixed;
        cfe.remediating_commits.insert("fix-1".into());
        let mut profile = sample_profile();
        profile.tuning_lineage.push("fix-1".into());
        let stmt = evaluate_exposure(&cfe, &profile, t0()).unwrap();
        assert_eq!(stmt.status, HexStatus::Fixed);
        assert_eq!(stmt.justification, None);
    }

    #[test]
    fn reserved_cfe_is_not_actionable() {
        let mut cfe = sample_cfe();
        cfe.status = CfeStatus::Reserved;
        assert!(matches!(
            evaluate_exposure(&cfe, &sample_profile(), t0()),
            Err(HexError::CfeNotActionable(_))
        ));
    }

    #[test]
    fn exhaustive_rule_order() {
        for bits in 0u8..32 {
            let [lineage, use_match, remediation, guardrail, published] =
                [0, 1, 2, 3, 4].map(|i| bits & (1 << i) != 0);
            let facts = ExposureFacts {
                lineage: lineage.then(|| LineageMatch {
                    commit: "c".into(),
                    stage: LifecycleStage::Training,
                }),
                matched_use: use_match.then(|| "u".into()),
                remediation: remediation.then(|| "r".into()),
                guardrail: guardrail.then(|| "g".into()),
                cfe_status: if published {
                    CfeStatus::Published
                } else {
                    CfeStatus::UnderInvestigation
                },
            };
            let decision = decide(&facts);
            let affected = lineage && use_match && !remediation && !guardrail && published;
            assert_eq!(
                decision.status == HexStatus::Affected,
                affected,
                "bits={bits:05b}"
            );
            assert!(super::super::check_status_fields(
                decision.status,
                decision.justification,
                decision.impact_statement.as_deref()
            )
            .is_empty());
        }
    }
}
