use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::exposure::{build_statement, check_inputs, shared_facts};
use super::{DeploymentProfile, HexError, HexStatement, LifecycleStage, LineageMatch};
use crate::domain::CfeRecord;

/// Commit ancestry as a child to parent map. Roots have no entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineageGraph {
    parents: BTreeMap<String, String>,
}

impl LineageGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, child: impl Into<String>, parent: impl Into<String>) {
        self.parents.insert(child.into(), parent.into());
    }

    pub fn parent(&self, commit: &str) -> Option<&str> {
        self.parents.get(commit).map(String::as_str)
    }

    /// Every commit mentioned as a child or a parent.
    pub fn commits(&self) -> BTreeSet<&str> {
        self.parents
            .iter()
            .flat_map(|(child, parent)| [child.as_str(), parent.as_str()])
            .collect()
    }

    pub fn ensure_acyclic(&self) -> Result<(), HexError> {
        let mut cleared: BTreeSet<&str> = BTreeSet::new();
        for start in self.parents.keys() {
            let mut path = BTreeSet::new();
            let mut cursor = Some(start.as_str());
            while let Some(commit) = cursor {
                if cleared.contains(commit) {
                    break;
                }
                if !path.insert(commit) {
                    return Err(HexError::CyclicLineage(commit.to_string()));
                }
                cursor = self.parent(commit);
            }
            cleared.extend(path);
        }
        Ok(())
    }

    /// Overlay a deployment's own fine-tune chain onto the shared graph.
    fn with_profile(&self, profile: &DeploymentProfile) -> LineageGraph {
        let mut graph = self.clone();
        let mut parent = profile.model_commit.as_str();
        for commit in &profile.tuning_lineage {
            if commit != parent {
                graph.insert(commit.clone(), parent);
            }
            parent = commit;
        }
        graph
    }
}

impl<C: Into<String>, P: Into<String>> FromIterator<(C, P)> for LineageGraph {
    fn from_iter<I: IntoIterator<Item = (C, P)>>(iter: I) -> Self {
        let mut graph = LineageGraph::new();
        for (child, parent) in iter {
            graph.insert(child, parent);
        }
        graph
    }
}

/// How a commit relates to a hazard's lineage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineageClass {
    /// Inherits the hazard from `via` (possibly itself).
    Affected {
        via: String,
    },
    /// Descends from `via` but `remediated_by` lies on the path.
    Remediated {
        via: String,
        remediated_by: String,
    },
    Unrelated,
}

/// Walk from `commit` toward the root until the nearest affected ancestor.
pub fn classify_lineage(
    graph: &LineageGraph,
    cfe: &CfeRecord,
    commit: &str,
) -> Result<LineageClass, HexError> {
    let mut visited = BTreeSet::new();
    let mut remedy: Option<&str> = None;
    let mut cursor = Some(commit);
    while let Some(current) = cursor {
        if !visited.insert(current) {
            return Err(HexError::CyclicLineage(current.to_string()));
        }
        if cfe.affected_lineage.contains(current) {
            let via = current.to_string();
            return Ok(match remedy {
                None => LineageClass::Affected { via },
                Some(by) => LineageClass::Remediated {
                    via,
                    remediated_by: by.to_string(),
                },
            });
        }
        if remedy.is_none() && cfe.remediating_commits.contains(current) {
            remedy = Some(current);
        }
        cursor = graph.parent(current);
    }
    Ok(LineageClass::Unrelated)
}

/// Commits of the graph (plus the affected roots themselves) that inherit the hazard.
pub fn affected_closure(
    graph: &LineageGraph,
    cfe: &CfeRecord,
) -> Result<BTreeSet<String>, HexError> {
    graph.ensure_acyclic()?;
    let mut out = BTreeSet::new();
    let commits = graph.commits();
    let candidates = commits
        .iter()
        .copied()
        .chain(cfe.affected_lineage.iter().map(String::as_str));
    for commit in candidates {
        if let LineageClass::Affected { .. } = classify_lineage(graph, cfe, commit)? {
            out.insert(commit.to_string());
        }
    }
    Ok(out)
}

/// One statement per profile, with the hazard propagated to descendants of
/// affected commits unless a remediating commit intervenes.
pub fn hex_for_variants(
    cfe: &CfeRecord,
    graph: &LineageGraph,
    profiles: &[DeploymentProfile],
    issued_at: DateTime<Utc>,
) -> Result<Vec<HexStatement>, HexError> {
    graph.ensure_acyclic()?;
    let mut out = Vec::with_capacity(profiles.len());
    for profile in profiles {
        check_inputs(cfe, profile)?;
        let local = graph.with_profile(profile);
        local.ensure_acyclic()?;
        let class = classify_lineage(&local, cfe, profile.deployed_commit())?;
        let stage_of = |commit: &str| {
            if profile.tuning_lineage.iter().any(|c| c == commit) {
                LifecycleStage::FineTuning
            } else {
                LifecycleStage::Training
            }
        };
        let (lineage, remediation) = match class {
            LineageClass::Affected { via } => (
                Some(LineageMatch {
                    stage: stage_of(&via),
                    commit: via,
                }),
                None,
            ),
            LineageClass::Remediated { via, remediated_by } => (
                Some(LineageMatch {
                    stage: stage_of(&via),
                    commit: via,
                }),
                Some(remediated_by),
            ),
            LineageClass::Unrelated => (None, None),
        };
        let mut facts = shared_facts(cfe, profile, lineage);
        facts.remediation = remediation;
        out.push(build_statement(cfe, profile, &facts, issued_at));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hex::{HexStatus, Justification};
    use crate::testing::{sample_cfe, sample_profile, t0};

    fn graph() -> LineageGraph {
        // base-v1 is affected (see sample_cfe); ft-a and ft-b are variants.
        [
            ("ft-a", "base-v1"),
            ("ft-b", "ft-fix"),
            ("ft-fix", "base-v1"),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn variant_inherits_hazard() {
        let mut profile = sample_profile();
        profile.model_commit = "ft-a".into();
        let stmts = hex_for_variants(&sample_cfe(), &graph(), &[profile], t0()).unwrap();
        assert_eq!(stmts[0].status, HexStatus::Affected);
        assert_eq!(stmts[0].subcomponent.commit, "base-v1");
    }

    #[test]
    fn remediated_path_is_tuned_out() {
        let mut cfe = sample_cfe();
        cfe.remediating_commits.insert("ft-fix".into());
        let mut profile = sample_profile();
        profile.model_commit = "ft-b".into();
        let stmts = hex_for_variants(&cfe, &graph(), &[profile], t0()).unwrap();
        assert_eq!(stmts[0].justification, Some(Justification::TunedOut));
    }

    #[test]
    fn no_profiles_no_statements() {
        assert!(hex_for_variants(&sample_cfe(), &graph(), &[], t0())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn cycles_are_rejected() {
        let cyclic: LineageGraph = [("a", "b"), ("b", "c"), ("c", "a")].into_iter().collect();
        assert!(matches!(
            cyclic.ensure_acyclic(),
            Err(HexError::CyclicLineage(_))
        ));
        assert!(matches!(
            hex_for_variants(&sample_cfe(), &cyclic, &[], t0()),
            Err(HexError::CyclicLineage(_))
        ));
    }

    #[test]
    fn closure_contains_descendants_only() {
        let mut cfe = sample_cfe();
        cfe.remediating_commits.insert("ft-fix".into());
        let mut g = graph();
        g.insert("base-v1", "root");
        let closure = affected_closure(&g, &cfe).unwrap();
        let expected: BTreeSet<String> =
            ["base-v1", "ft-a"].iter().map(|s| s.to_string()).collect();
        assert_eq!(closure, expected);
    }
}
