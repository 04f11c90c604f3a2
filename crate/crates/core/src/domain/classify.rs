use super::{DomainError, ModelCard, Report, Track};

/// Route a report to the security or the safety track.
///
/// CIA loss alone is a security issue, harm alone is a safety issue; a
/// report claiming both (or, for an invalid claim, neither) is ambiguous and
/// goes to vendor triage for manual assignment.
pub fn classify_report(report: &Report, card: &ModelCard) -> Result<Track, DomainError> {
    if report.model_ref != card.model_ref() {
        return Err(DomainError::UnknownModel {
            name: report.model_ref.name.clone(),
            version: report.model_ref.version.clone(),
        });
    }
    let impact = &report.impact;
    Ok(match (impact.any_cia(), impact.any_harm()) {
        (true, false) => Track::Security,
        (false, true) => Track::Safety,
        _ => Track::Ambiguous,
    })
}
