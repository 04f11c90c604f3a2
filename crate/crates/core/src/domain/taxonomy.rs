use std::collections::BTreeSet;

use super::TaxonomyDescriptor;
use crate::formats::{Finding, FindingCode};

/// Seed allowlist of permissive open-content licenses (SPDX ids).
pub fn default_license_allowlist() -> BTreeSet<String> {
    [
        "CC-BY-4.0",
        "CC-BY-SA-4.0",
        "CC0-1.0",
        "CDLA-Permissive-2.0",
        "ODC-By-1.0",
        "Apache-2.0",
        "MIT",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

/// One finding per violated selection parameter; empty iff conformant.
pub fn validate_taxonomy(
    descriptor: &TaxonomyDescriptor,
    allowlist: &BTreeSet<String>,
) -> Vec<Finding> {
    let mut findings = Vec::new();
    if !allowlist.contains(&descriptor.license_id) {
        findings.push(Finding::new(
            FindingCode::NonPermissiveLicense,
            "/license_id",
            format!(
                "license_id `{}` is not on the permissive-license allowlist",
                descriptor.license_id
            ),
        ));
    }
    if !descriptor.extensible {
        findings.push(Finding::new(
            FindingCode::NotExtensible,
            "/extensible",
            "extensible must be true",
        ));
    }
    if descriptor.publishes_raw_responses {
        findings.push(Finding::new(
            FindingCode::RawResponsesPublished,
            "/publishes_raw_responses",
            "publishes_raw_responses must be false",
        ));
    }
    findings
}
