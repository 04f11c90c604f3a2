//! Registry documents: parsing with collect-all validation, linting,
//! canonical serialization and identifier grammars.
//!
//! Every document kind is UTF-8 JSON. Parsers ignore unknown fields;
//! emitters produce canonical bytes only.

mod canonical;
mod cfe_id;
mod digest;
mod documents;
mod finding;
mod hex_doc;
mod model_card;
pub(crate) mod reader;

pub use canonical::{
    serialize_canonical, to_canonical_bytes, to_canonical_string, CanonicalDocument, DocumentKind,
};
pub use cfe_id::{format_cfe_id, parse_cfe_id, CfeId, IdSyntaxError};
pub use digest::{Digest, DigestAlgorithm, DigestParseError};
pub use documents::{
    emit_advisory, emit_cfe_record, emit_taxonomy, parse_advisory, parse_cfe_record,
    parse_evidence_submission, parse_report_submission, parse_taxonomy, EvidenceSubmission,
    ReportSubmission,
};
pub use finding::{
    finding_catalogue, CatalogueEntry, Finding, FindingCatalogue, FindingCode, FindingSeverity,
    CATALOGUE_VERSION,
};
pub use hex_doc::{emit_hex, parse_hex};
pub use model_card::{
    check_model_card, emit_model_card, lint_model_card, parse_model_card, LintContext,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("malformed document: {0}")]
    Syntax(String),
    #[error("document failed validation with {} finding(s)", .0.len())]
    Schema(Vec<Finding>),
    #[error(transparent)]
    IdSyntax(#[from] IdSyntaxError),
    #[error("unsupported value: {0}")]
    UnsupportedValue(String),
}

impl FormatError {
    pub fn findings(&self) -> &[Finding] {
        match self {
            FormatError::Schema(findings) => findings,
            _ => &[],
        }
    }
}
