//! The adjudication panel's numerical kernel.
//!
//! Everything is exact: the lower bound is found by bisection on the
//! binomial tail and the bias test enumerates every table with the observed
//! margins. No special-function library is involved.

use serde::{Deserialize, Serialize};

use crate::domain::EvidenceSet;
use crate::engine::{CaseFile, CaseState};

mod binomial;
mod fisher;

pub use binomial::{binomial_upper_tail, violation_rate_lower_bound};
pub use fisher::fisher_exact_two_sided;

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("illegal state: {0}")]
    IllegalState(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub lower_bound: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub supported: bool,
}

/// Is the claimed violation rate credibly above `threshold`?
pub fn validity_check(
    evidence: &EvidenceSet,
    threshold: f64,
    alpha: f64,
) -> Result<ValidityVerdict, StatError> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(StatError::Domain(format!(
            "threshold {threshold} must lie in [0, 1)"
        )));
    }
    let lower_bound = violation_rate_lower_bound(evidence.k, evidence.n, alpha)?;
    Ok(ValidityVerdict {
        lower_bound,
        threshold,
        alpha,
        supported: lower_bound > threshold,
    })
}

token_enum! {
    pub enum BiasDirection {
        SubmitterHigher => "submitter_higher",
        VendorHigher => "vendor_higher",
        None => "none",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVerdict {
    pub p_value: f64,
    pub alpha: f64,
    pub biased: bool,
    pub direction: BiasDirection,
}

/// Two-sided Fisher test of whether both parties sampled the same rate.
pub fn bias_test(
    submitter: &EvidenceSet,
    vendor: &EvidenceSet,
    alpha: f64,
) -> Result<BiasVerdict, StatError> {
    for set in [submitter, vendor] {
        if !set.is_valid() {
            return Err(StatError::Domain(format!(
                "evidence from `{}` needs n >= 1 and k <= n",
                set.party
            )));
        }
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatError::Domain(format!(
            "alpha = {alpha} must lie strictly between 0 and 1"
        )));
    }
    // Order the rows canonically so the result is exactly symmetric.
    let mut rows = [(submitter.k, submitter.n), (vendor.k, vendor.n)];
    rows.sort_unstable();
    let [(a, n1), (c, n2)] = rows;
    let p_value = fisher_exact_two_sided(a, n1 - a, c, n2 - c)?;
    let lhs = submitter.k as u128 * vendor.n as u128;
    let rhs = vendor.k as u128 * submitter.n as u128;
    let direction = match lhs.cmp(&rhs) {
        std::cmp::Ordering::Greater => BiasDirection::SubmitterHigher,
        std::cmp::Ordering::Less => BiasDirection::VendorHigher,
        std::cmp::Ordering::Equal => BiasDirection::None,
    };
    Ok(BiasVerdict {
        p_value,
        alpha,
        biased: p_value < alpha,
        direction,
    })
}

token_enum! {
    pub enum Recommendation {
        Accept => "accept",
        Reject => "reject",
        RequestVendorData => "request_vendor_data",
        FlagBiased => "flag_biased",
    }
}

token_enum! {
    /// Which evidence the validity verdict was computed on.
    pub enum EvidenceBasis {
        Vendor => "vendor",
        Pooled => "pooled",
    }
}

/// The panel kernel's full reasoning, recorded verbatim in the audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationReport {
    pub recommendation: Recommendation,
    pub threshold: f64,
    pub alpha: f64,
    pub submitter: EvidenceSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vendor: Option<EvidenceSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<BiasVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vendor_validity: Option<ValidityVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<EvidenceBasis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity: Option<ValidityVerdict>,
}

/// Sum every set from one party into a single summary.
pub fn pool<'a>(
    party: &str,
    sets: impl IntoIterator<Item = &'a EvidenceSet>,
) -> Option<EvidenceSet> {
    let mut pooled: Option<EvidenceSet> = None;
    for set in sets {
        let acc = pooled.get_or_insert_with(|| EvidenceSet::new(party, 0, 0));
        acc.n += set.n;
        acc.k += set.k;
        if acc.sampling_protocol.is_empty() {
            acc.sampling_protocol = set.sampling_protocol.clone();
        } else if !set.sampling_protocol.is_empty()
            && acc.sampling_protocol != set.sampling_protocol
        {
            acc.sampling_protocol = format!("{}; {}", acc.sampling_protocol, set.sampling_protocol);
        }
    }
    pooled
}

/// Recommendation from already-pooled evidence. Pure in its inputs.
pub fn recommend(
    submitter: &EvidenceSet,
    vendor: Option<&EvidenceSet>,
    threshold: f64,
    alpha: f64,
) -> Result<AdjudicationReport, StatError> {
    let mut report = AdjudicationReport {
        recommendation: Recommendation::RequestVendorData,
        threshold,
        alpha,
        submitter: submitter.clone(),
        vendor: vendor.cloned(),
        bias: None,
        vendor_validity: None,
        basis: None,
        validity: None,
    };
    // Validate inputs even when no vendor data exists yet.
    validity_check(submitter, threshold, alpha)?;
    let Some(vendor) = vendor else {
        return Ok(report);
    };
    let bias = bias_test(submitter, vendor, alpha)?;
    let vendor_validity = validity_check(vendor, threshold, alpha)?;
    if bias.biased && bias.direction == BiasDirection::SubmitterHigher && !vendor_validity.supported
    {
        report.recommendation = Recommendation::FlagBiased;
    } else {
        let (basis, validity) = if bias.biased {
            let pooled = EvidenceSet {
                n: submitter.n + vendor.n,
                k: submitter.k + vendor.k,
                ..EvidenceSet::new("pooled", 0, 0)
            };
            (
                EvidenceBasis::Pooled,
                validity_check(&pooled, threshold, alpha)?,
            )
        } else {
            (EvidenceBasis::Vendor, vendor_validity.clone())
        };
        report.recommendation = if validity.supported {
            Recommendation::Accept
        } else {
            Recommendation::Reject
        };
        report.basis = Some(basis);
        report.validity = Some(validity);
    }
    report.bias = Some(bias);
    report.vendor_validity = Some(vendor_validity);
    Ok(report)
}

/// Advise the panel on a case under adjudication. The recommendation never
/// moves the case; an adjudicator applies the transition.
pub fn adjudicate(
    case: &CaseFile,
    threshold: f64,
    alpha: f64,
) -> Result<AdjudicationReport, StatError> {
    if case.state != CaseState::Adjudication {
        return Err(StatError::IllegalState(format!(
            "case {} is in `{}`, not adjudication",
            case.case_id, case.state
        )));
    }
    let submitter = pool(&case.reporter_id, case.evidence_of(&case.reporter_id))
        .ok_or_else(|| StatError::IllegalState("no submitter evidence on file".into()))?;
    let vendor = pool(&case.vendor_id, case.evidence_of(&case.vendor_id));
    recommend(&submitter, vendor.as_ref(), threshold, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(party: &str, k: u64, n: u64) -> EvidenceSet {
        EvidenceSet::new(party, k, n)
    }

    #[test]
    fn validity_examples() {
        assert!(
            validity_check(&ev("s", 20, 20), 0.01, 0.05)
                .unwrap()
                .supported
        );
        assert!(
            !validity_check(&ev("s", 0, 1000), 0.01, 0.05)
                .unwrap()
                .supported
        );
        // The boundary is strict: a bound equal to the threshold is not enough.
        let edge = validity_check(&ev("s", 1, 1), 0.05, 0.05).unwrap();
        assert!(!edge.supported, "{edge:?}");
    }

    #[test]
    fn bias_examples() {
        let v = bias_test(&ev("s", 5, 5), &ev("v", 0, 100), 0.05).unwrap();
        assert!(v.biased);
        assert_eq!(v.direction, BiasDirection::SubmitterHigher);
        assert!((v.p_value - 1.0356e-8).abs() < 1e-11, "{}", v.p_value);
        let same = bias_test(&ev("s", 3, 10), &ev("v", 3, 10), 0.05).unwrap();
        assert_eq!((same.p_value, same.biased), (1.0, false));
        let none = bias_test(&ev("s", 0, 10), &ev("v", 0, 10), 0.05).unwrap();
        assert_eq!((none.p_value, none.direction), (1.0, BiasDirection::None));
    }

    #[test]
    fn recommendation_examples() {
        let only = recommend(&ev("s", 5, 5), None, 0.01, 0.05).unwrap();
        assert_eq!(only.recommendation, Recommendation::RequestVendorData);
        let flagged = recommend(&ev("s", 5, 5), Some(&ev("v", 0, 100)), 0.01, 0.05).unwrap();
        assert_eq!(flagged.recommendation, Recommendation::FlagBiased);
        let accepted = recommend(&ev("s", 40, 100), Some(&ev("v", 35, 100)), 0.01, 0.05).unwrap();
        assert_eq!(accepted.recommendation, Recommendation::Accept);
        assert_eq!(accepted.basis, Some(EvidenceBasis::Vendor));
        let p = accepted.bias.unwrap().p_value;
        assert!((p - 0.56).abs() < 0.02, "{p}");
    }

    #[test]
    fn pooling_sums_counts() {
        let sets = [ev("v", 1, 10), ev("v", 2, 30)];
        let pooled = pool("v", sets.iter()).unwrap();
        assert_eq!((pooled.k, pooled.n), (3, 40));
        assert!(pool("v", std::iter::empty()).is_none());
    }
}
