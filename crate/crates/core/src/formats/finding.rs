//! The finding catalogue: every diagnostic the parsers, validators and the
//! linter can report. Codes are stable machine identifiers; adding a code
//! bumps [`CATALOGUE_VERSION`].

use std::fmt;

use serde::{Deserialize, Serialize};

pub const CATALOGUE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingSeverity {
    Error,
    Warning,
}

macro_rules! finding_codes {
    ($($variant:ident => ($text:literal, $severity:ident, $doc:literal),)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "SCREAMING_SNAKE_CASE")]
        pub enum FindingCode {
            $(#[doc = $doc] $variant,)*
        }

        impl FindingCode {
            pub const ALL: &'static [FindingCode] = &[$(FindingCode::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(FindingCode::$variant => $text,)*
                }
            }

            pub fn default_severity(self) -> FindingSeverity {
                match self {
                    $(FindingCode::$variant => FindingSeverity::$severity,)*
                }
            }

            pub fn description(self) -> &'static str {
                match self {
                    $(FindingCode::$variant => $doc,)*
                }
            }
        }
    };
}

finding_codes! {
    MissingRequiredField => ("MISSING_REQUIRED_FIELD", Error, "A required field is absent."),
    WrongType => ("WRONG_TYPE", Error, "A field holds a value of the wrong JSON type."),
    EmptyField => ("EMPTY_FIELD", Error, "A required text field is empty or whitespace."),
    UnsupportedSchemaVersion => ("UNSUPPORTED_SCHEMA_VERSION", Error, "The document declares a schema version this registry cannot read."),
    UnknownEnumValue => ("UNKNOWN_ENUM_VALUE", Error, "A field holds a token outside its closed vocabulary."),
    InvalidTimestamp => ("INVALID_TIMESTAMP", Error, "A timestamp is not RFC 3339."),
    InvalidDigest => ("INVALID_DIGEST", Error, "A digest is not `sha256:` followed by 64 lowercase hex digits."),
    InvalidCfeId => ("INVALID_CFE_ID", Error, "A CFE identifier does not match CFE-YYYY-NNNN."),
    EmptyIntentAndUse => ("EMPTY_INTENT_AND_USE", Error, "The card declares no intent-and-use statement."),
    IncompleteUseStatement => ("INCOMPLETE_USE_STATEMENT", Error, "A use statement lacks its who, what or how clause."),
    ExclusionsNotDeclared => ("EXCLUSIONS_NOT_DECLARED", Error, "The scope section does not affirm that exclusions were declared."),
    NoReportChannel => ("NO_REPORT_CHANNEL", Error, "Governance names neither a security nor a safety report channel."),
    VersionNotInLineage => ("VERSION_NOT_IN_LINEAGE", Error, "The model version is not the last element of the lineage."),
    EvalWithoutOutputs => ("EVAL_WITHOUT_OUTPUTS", Error, "An evaluation names a framework but records no outputs."),
    NoSafetyChannel => ("NO_SAFETY_CHANNEL", Warning, "Governance names no safety report channel."),
    NoReferences => ("NO_REFERENCES", Warning, "The card lists no references (AIBOM, safety audit, security audit)."),
    NonconformantTaxonomy => ("NONCONFORMANT_TAXONOMY", Error, "The referenced hazard taxonomy fails the taxonomy selection parameters."),
    UnresolvedTaxonomy => ("UNRESOLVED_TAXONOMY", Warning, "The referenced hazard taxonomy is not known to this registry."),
    NonPermissiveLicense => ("NON_PERMISSIVE_LICENSE", Error, "The taxonomy license is not on the permissive-license allowlist."),
    NotExtensible => ("NOT_EXTENSIBLE", Error, "The taxonomy is not extensible."),
    RawResponsesPublished => ("RAW_RESPONSES_PUBLISHED", Error, "The taxonomy publishes raw model responses."),
    UnknownStatus => ("UNKNOWN_STATUS", Error, "A HEX status outside affected, unaffected, fixed, under_investigation."),
    UnknownJustification => ("UNKNOWN_JUSTIFICATION", Error, "A HEX justification outside the closed token set."),
    UnknownLifecycleStage => ("UNKNOWN_LIFECYCLE_STAGE", Error, "A lifecycle stage outside development, training, fine_tuning, inference."),
    JustificationRequired => ("JUSTIFICATION_REQUIRED", Error, "Status `unaffected` requires a justification."),
    JustificationNotAllowed => ("JUSTIFICATION_NOT_ALLOWED", Error, "Only status `unaffected` carries a justification."),
    ImpactStatementRequired => ("IMPACT_STATEMENT_REQUIRED", Error, "Status `affected` requires an impact statement."),
    ImpactStatementNotAllowed => ("IMPACT_STATEMENT_NOT_ALLOWED", Error, "Only status `affected` carries an impact statement."),
    MissingIdentifier => ("MISSING_IDENTIFIER", Error, "An advisory references neither a CFE nor a CVE identifier."),
    NoImpactClaimed => ("NO_IMPACT_CLAIMED", Error, "An impact claim sets no CIA flag and no harm category."),
    ViolationsExceedTrials => ("VIOLATIONS_EXCEED_TRIALS", Error, "Evidence reports more violations than trials."),
    InvalidInterval => ("INVALID_INTERVAL", Error, "An interval ends before it starts."),
    SeverityMismatch => ("SEVERITY_MISMATCH", Error, "A severity bracket disagrees with the harm/breadth mapping table."),
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One diagnostic, located by a JSON pointer into the checked document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub severity: FindingSeverity,
    pub path: String,
    pub message: String,
}

impl Finding {
    pub fn new(code: FindingCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            severity: code.default_severity(),
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == FindingSeverity::Error
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            FindingSeverity::Error => "error",
            FindingSeverity::Warning => "warning",
        };
        let path = if self.path.is_empty() {
            "/"
        } else {
            &self.path
        };
        write!(f, "{level}[{}] {path}: {}", self.code, self.message)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogueEntry {
    pub code: FindingCode,
    pub severity: FindingSeverity,
    pub description: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct FindingCatalogue {
    pub version: u32,
    pub findings: Vec<CatalogueEntry>,
}

/// Machine-readable export of every finding code.
pub fn finding_catalogue() -> FindingCatalogue {
    FindingCatalogue {
        version: CATALOGUE_VERSION,
        findings: FindingCode::ALL
            .iter()
            .map(|&code| CatalogueEntry {
                code,
                severity: code.default_severity(),
                description: code.description(),
            })
            .collect(),
    }
}
