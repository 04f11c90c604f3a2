use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::documents::parse_taxonomy;
use super::finding::{Finding, FindingCode};
use super::reader::{parse_json, pointer, Obj, Reader};
use super::{to_canonical_bytes, Digest, FormatError};
use crate::domain::{
    default_license_allowlist, validate_taxonomy, EvaluationRecord, Exclusion, GovernanceInfo,
    ModelCard, ReferenceEntry, ReferenceKind, Scope, TaxonomyDescriptor, TaxonomyRef, UseStatement,
};

const SUPPORTED_MAJOR: &str = "1";

const BUILTIN_TAXONOMY: &str = r#"{
  "id": "ai-hazard-categories",
  "version": "1.0",
  "license_id": "CC-BY-4.0",
  "open_development": true,
  "extensible": true,
  "publishes_raw_responses": false,
  "cultural_scope_notes": "Harm categories are assessed against the deploying community's norms; entries are re-reviewed yearly."
}"#;

/// Parse and validate a model card, reporting every violated invariant.
pub fn parse_model_card(bytes: &[u8]) -> Result<ModelCard, FormatError> {
    let root = parse_json(bytes)?;
    let mut reader = Reader::new();
    let card = read_card(&mut reader, &root);
    reader.finish(card)
}

/// Parse then lint: the card (when it parses) and every finding about it.
/// Parse failures that are not schema findings become a single `WRONG_TYPE`.
pub fn check_model_card(bytes: &[u8], ctx: &LintContext) -> (Option<ModelCard>, Vec<Finding>) {
    match parse_model_card(bytes) {
        Ok(card) => {
            let findings = lint_model_card(&card, ctx);
            (Some(card), findings)
        }
        Err(FormatError::Schema(findings)) => (None, findings),
        Err(other) => (
            None,
            vec![Finding::new(FindingCode::WrongType, "", other.to_string())],
        ),
    }
}

pub fn emit_model_card(card: &ModelCard) -> Result<Vec<u8>, FormatError> {
    for (idx, record) in card.evaluation_data.iter().enumerate() {
        if let Some((name, _)) = record.outputs.iter().find(|(_, value)| !value.is_finite()) {
            return Err(FormatError::UnsupportedValue(format!(
                "evaluation_data[{idx}].outputs.{name} is not a finite number"
            )));
        }
    }
    to_canonical_bytes(card)
}

fn read_card(r: &mut Reader, root: &Value) -> Option<ModelCard> {
    let obj = r.as_object(root, "")?;

    let schema_version = r.string(&obj, "schema_version");
    if let Some(version) = &schema_version {
        if version.split('.').next() != Some(SUPPORTED_MAJOR) {
            r.push(
                FindingCode::UnsupportedSchemaVersion,
                "/schema_version",
                format!("schema_version `{version}` is not a 1.x card"),
            );
        }
    }
    let model_name = r.string(&obj, "model_name");
    let model_version = r.string(&obj, "model_version");
    let lineage = r.string_list(&obj, "lineage");
    if let (Some(version), Some(lineage)) = (&model_version, &lineage) {
        if lineage.last() != Some(version) {
            r.push(
                FindingCode::VersionNotInLineage,
                "/lineage",
                format!("lineage must end with model_version `{version}`"),
            );
        }
    }
    let intent_and_use = read_uses(r, &obj);
    let scope = r
        .object(&obj, "scope")
        .and_then(|scope| read_scope(r, &scope));
    let evaluation_data = read_evaluations(r, &obj);
    let governance = r
        .object(&obj, "governance")
        .and_then(|gov| read_governance(r, &gov));
    let references = read_references(r, &obj);
    let taxonomy_ref = r.object(&obj, "taxonomy_ref").and_then(|tax| {
        let id = r.string(&tax, "id");
        let version = r.string(&tax, "version");
        Some(TaxonomyRef {
            id: id?,
            version: version?,
        })
    });

    Some(ModelCard {
        schema_version: schema_version?,
        model_name: model_name?,
        model_version: model_version?,
        lineage: lineage?,
        intent_and_use: intent_and_use?,
        scope: scope?,
        evaluation_data: evaluation_data?,
        governance: governance?,
        references: references?,
        taxonomy_ref: taxonomy_ref?,
    })
}

fn read_uses(r: &mut Reader, obj: &Obj<'_>) -> Option<Vec<UseStatement>> {
    let items = r.array(obj, "intent_and_use")?;
    if items.is_empty() {
        r.push(
            FindingCode::EmptyIntentAndUse,
            "/intent_and_use",
            "at least one intent-and-use statement is required",
        );
        return None;
    }
    let mut ok = true;
    let mut uses = Vec::with_capacity(items.len());
    for (idx, item) in items.iter().enumerate() {
        let path = pointer("/intent_and_use", &idx.to_string());
        let Some(entry) = r.as_object(item, &path) else {
            ok = false;
            continue;
        };
        let clause = |r: &mut Reader, key: &str| -> Option<String> {
            let clause_path = pointer(&path, key);
            match r.opt_field(&entry, key) {
                Some(Value::String(text)) if !text.trim().is_empty() => Some(text.clone()),
                Some(Value::String(_)) | None => {
                    r.push(
                        FindingCode::IncompleteUseStatement,
                        clause_path,
                        format!("use statement is missing its `{key}` clause"),
                    );
                    None
                }
                Some(other) => {
                    r.wrong_type(&clause_path, "string", other);
                    None
                }
            }
        };
        let who = clause(r, "who");
        let what = clause(r, "what");
        let how = clause(r, "how");
        let use_tags = r.opt_string_set(&entry, "use_tags");
        match (who, what, how, use_tags) {
            (Some(who), Some(what), Some(how), Some(use_tags)) => uses.push(UseStatement {
                who,
                what,
                how,
                use_tags,
            }),
            _ => ok = false,
        }
    }
    ok.then_some(uses)
}

fn read_scope(r: &mut Reader, scope: &Obj<'_>) -> Option<Scope> {
    let declared = r.boolean(scope, "exclusions_declared");
    if declared == Some(false) {
        r.push(
            FindingCode::ExclusionsNotDeclared,
            pointer(&scope.path, "exclusions_declared"),
            "exclusions_declared must be true, also when there are no exclusions",
        );
    }
    let items = r.array(scope, "exclusions");
    let mut exclusions = Vec::new();
    let mut ok = true;
    for (idx, item) in items.into_iter().flatten().enumerate() {
        let path = pointer(&pointer(&scope.path, "exclusions"), &idx.to_string());
        let Some(entry) = r.as_object(item, &path) else {
            ok = false;
            continue;
        };
        let category = r.string(&entry, "category");
        let description = match r.opt_string(&entry, "description") {
            Ok(text) => Some(text.unwrap_or_default()),
            Err(()) => None,
        };
        match (category, description) {
            (Some(category), Some(description)) => exclusions.push(Exclusion {
                category,
                description,
            }),
            _ => ok = false,
        }
    }
    let _ = items?;
    (ok && declared.is_some()).then(|| Scope {
        exclusions_declared: declared.unwrap_or_default(),
        exclusions,
    })
}

fn read_evaluations(r: &mut Reader, obj: &Obj<'_>) -> Option<Vec<EvaluationRecord>> {
    let items = r.array(obj, "evaluation_data")?;
    let mut ok = true;
    let mut records = Vec::with_capacity(items.len());
    for (idx, item) in items.iter().enumerate() {
        let path = pointer("/evaluation_data", &idx.to_string());
        let Some(entry) = r.as_object(item, &path) else {
            ok = false;
            continue;
        };
        let framework_id = r.opt_string(&entry, "framework_id");
        let framework_version = r.opt_string(&entry, "framework_version");
        let dataset_ref = r.string(&entry, "dataset_ref");
        let outputs = r.number_map(&entry, "outputs");
        let reproducible = r.boolean(&entry, "reproducible");
        match (
            framework_id,
            framework_version,
            dataset_ref,
            outputs,
            reproducible,
        ) {
            (
                Ok(framework_id),
                Ok(framework_version),
                Some(dataset_ref),
                Some(outputs),
                Some(reproducible),
            ) => records.push(EvaluationRecord {
                framework_id,
                framework_version,
                dataset_ref,
                outputs,
                reproducible,
            }),
            _ => ok = false,
        }
    }
    ok.then_some(records)
}

fn read_governance(r: &mut Reader, gov: &Obj<'_>) -> Option<GovernanceInfo> {
    let security = r.opt_string(gov, "security_report_channel");
    let safety = r.opt_string(gov, "safety_report_channel");
    let maintainer = r.opt_string(gov, "maintainer");
    let methodology = r.opt_string(gov, "methodology");
    let cna = r.opt_boolean(gov, "cve_numbering_authority", false);
    let info = GovernanceInfo {
        security_report_channel: security.ok()?,
        safety_report_channel: safety.ok()?,
        maintainer: maintainer.ok()?,
        methodology: methodology.ok()?,
        cve_numbering_authority: cna?,
    };
    if !info.has_report_channel() {
        r.push(
            FindingCode::NoReportChannel,
            gov.path.clone(),
            "governance must name a security_report_channel or a safety_report_channel",
        );
        return None;
    }
    Some(info)
}

fn read_references(r: &mut Reader, obj: &Obj<'_>) -> Option<Option<Vec<ReferenceEntry>>> {
    let Some(value) = r.opt_field(obj, "references") else {
        return Some(None);
    };
    let Value::Array(items) = value else {
        r.wrong_type("/references", "array", value);
        return None;
    };
    let mut ok = true;
    let mut refs = Vec::with_capacity(items.len());
    for (idx, item) in items.iter().enumerate() {
        let path = pointer("/references", &idx.to_string());
        let Some(entry) = r.as_object(item, &path) else {
            ok = false;
            continue;
        };
        let kind: Option<ReferenceKind> = r.token(&entry, "kind", FindingCode::UnknownEnumValue);
        let uri = r.string(&entry, "uri");
        let digest: Option<Digest> = r.token(&entry, "digest", FindingCode::InvalidDigest);
        match (kind, uri, digest) {
            (Some(kind), Some(uri), Some(digest)) => {
                refs.push(ReferenceEntry { kind, uri, digest })
            }
            _ => ok = false,
        }
    }
    ok.then_some(Some(refs))
}

/// What the linter needs beyond the card itself: known hazard taxonomies
/// and the permissive-license allowlist.
#[derive(Debug, Clone)]
pub struct LintContext {
    pub taxonomies: BTreeMap<TaxonomyRef, TaxonomyDescriptor>,
    pub license_allowlist: BTreeSet<String>,
}

impl Default for LintContext {
    fn default() -> Self {
        let builtin =
            parse_taxonomy(BUILTIN_TAXONOMY.as_bytes()).expect("builtin taxonomy is valid");
        Self {
            taxonomies: [(builtin.reference(), builtin)].into(),
            license_allowlist: default_license_allowlist(),
        }
    }
}

impl LintContext {
    pub fn with_allowlist(mut self, allowlist: BTreeSet<String>) -> Self {
        self.license_allowlist = allowlist;
        self
    }

    pub fn add_taxonomy(&mut self, descriptor: TaxonomyDescriptor) {
        self.taxonomies.insert(descriptor.reference(), descriptor);
    }
}

/// Advisory checks beyond structural validity.
pub fn lint_model_card(card: &ModelCard, ctx: &LintContext) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (idx, record) in card.evaluation_data.iter().enumerate() {
        if record.framework_id.is_some() && record.outputs.is_empty() {
            findings.push(Finding::new(
                FindingCode::EvalWithoutOutputs,
                format!("/evaluation_data/{idx}/outputs"),
                format!(
                    "evaluation names framework `{}` but records no outputs",
                    record.framework_id.as_deref().unwrap_or_default()
                ),
            ));
        }
    }
    if card.governance.safety_report_channel.is_none() {
        findings.push(Finding::new(
            FindingCode::NoSafetyChannel,
            "/governance/safety_report_channel",
            "no safety report channel; hazard reporters have no discoverable intake",
        ));
    }
    if card.references.as_ref().is_none_or(|refs| refs.is_empty()) {
        findings.push(Finding::new(
            FindingCode::NoReferences,
            "/references",
            "no references to an AIBOM, safety audit or security audit",
        ));
    }
    match ctx.taxonomies.get(&card.taxonomy_ref) {
        Some(descriptor) => {
            let violations = validate_taxonomy(descriptor, &ctx.license_allowlist);
            if !violations.is_empty() {
                let codes: Vec<&str> = violations.iter().map(|f| f.code.as_str()).collect();
                findings.push(Finding::new(
                    FindingCode::NonconformantTaxonomy,
                    "/taxonomy_ref",
                    format!(
                        "taxonomy {}@{} violates: {}",
                        descriptor.id,
                        descriptor.version,
                        codes.join(", ")
                    ),
                ));
            }
        }
        None => findings.push(Finding::new(
            FindingCode::UnresolvedTaxonomy,
            "/taxonomy_ref",
            format!(
                "taxonomy {}@{} is not known to this registry",
                card.taxonomy_ref.id, card.taxonomy_ref.version
            ),
        )),
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{minimal_card_json, sample_card};
    use serde_json::json;

    fn codes(err: FormatError) -> Vec<FindingCode> {
        err.findings().iter().map(|f| f.code).collect()
    }

    #[test]
    fn minimal_card_parses() {
        let card = parse_model_card(minimal_card_json().to_string().as_bytes()).unwrap();
        assert_eq!(card.intent_and_use.len(), 1);
        assert!(card.scope.exclusions.is_empty());
        assert!(card.scope.exclusions_declared);
    }

    #[test]
    fn missing_scope() {
        let mut doc = minimal_card_json();
        doc.as_object_mut().unwrap().remove("scope");
        let err = parse_model_card(doc.to_string().as_bytes()).unwrap_err();
        assert_eq!(codes(err.clone()), [FindingCode::MissingRequiredField]);
        assert_eq!(err.findings()[0].path, "/scope");
    }

    #[test]
    fn use_statement_without_how() {
        let mut doc = minimal_card_json();
        doc["intent_and_use"][0]
            .as_object_mut()
            .unwrap()
            .remove("how");
        let err = parse_model_card(doc.to_string().as_bytes()).unwrap_err();
        assert_eq!(codes(err), [FindingCode::IncompleteUseStatement]);
    }

    #[test]
    fn syntax_error() {
        assert!(matches!(
            parse_model_card(b"{not json"),
            Err(FormatError::Syntax(_))
        ));
    }

    #[test]
    fn collects_every_violation() {
        let mut doc = minimal_card_json();
        doc["scope"]["exclusions_declared"] = json!(false);
        doc["governance"] = json!({});
        doc["lineage"] = json!(["abc"]);
        doc["intent_and_use"][0]["who"] = json!("  ");
        let err = parse_model_card(doc.to_string().as_bytes()).unwrap_err();
        let mut got = codes(err);
        got.sort();
        let mut want = vec![
            FindingCode::ExclusionsNotDeclared,
            FindingCode::NoReportChannel,
            FindingCode::VersionNotInLineage,
            FindingCode::IncompleteUseStatement,
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn unknown_fields_ignored() {
        let mut doc = minimal_card_json();
        doc["x_vendor_extension"] = json!({"anything": [1, 2]});
        assert!(parse_model_card(doc.to_string().as_bytes()).is_ok());
    }

    #[test]
    fn eval_without_outputs() {
        let mut card = sample_card();
        card.evaluation_data[0].framework_id = Some("safety-bench".into());
        card.evaluation_data[0].outputs.clear();
        let found: Vec<_> = lint_model_card(&card, &LintContext::default())
            .iter()
            .map(|f| f.code)
            .collect();
        assert_eq!(found, [FindingCode::EvalWithoutOutputs]);
    }

    #[test]
    fn fully_populated_card_is_clean() {
        assert!(lint_model_card(&sample_card(), &LintContext::default()).is_empty());
    }

    #[test]
    fn no_references_is_a_warning() {
        let mut card = sample_card();
        card.references = None;
        let found = lint_model_card(&card, &LintContext::default());
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].code, FindingCode::NoReferences);
        assert!(!found[0].is_error());
    }

    #[test]
    fn nonconformant_taxonomy_delegates() {
        let mut ctx = LintContext::default();
        let mut descriptor = ctx.taxonomies.values().next().unwrap().clone();
        descriptor.publishes_raw_responses = true;
        ctx.add_taxonomy(descriptor);
        let found = lint_model_card(&sample_card(), &ctx);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].code, FindingCode::NonconformantTaxonomy);
        assert!(found[0].message.contains("RAW_RESPONSES_PUBLISHED"));
    }

    #[test]
    fn emit_rejects_non_finite_outputs() {
        let mut card = sample_card();
        card.evaluation_data[0]
            .outputs
            .insert("score".into(), f64::NAN);
        assert!(matches!(
            emit_model_card(&card),
            Err(FormatError::UnsupportedValue(_))
        ));
    }

    #[test]
    fn emit_then_parse_is_identity() {
        let card = sample_card();
        let bytes = emit_model_card(&card).unwrap();
        assert_eq!(parse_model_card(&bytes).unwrap(), card);
    }
}
