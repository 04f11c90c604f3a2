use std::collections::BTreeSet;

use super::{Bracket, Breadth, DomainError, HarmCategory, Severity};

/// Bracket floor contributed by a single harm category.
pub fn harm_floor(harm: HarmCategory) -> Bracket {
    match harm {
        HarmCategory::LossOfLife => Bracket::Critical,
        HarmCategory::PhysicalOrMentalInjury => Bracket::High,
        HarmCategory::SocialDisruption | HarmCategory::EnvironmentalHarm => Bracket::Medium,
        HarmCategory::EconomicDisruption
        | HarmCategory::BiasInDecisionMaking
        | HarmCategory::HarmfulContent => Bracket::Low,
    }
}

/// Bracket floor contributed by the breadth of impact.
pub fn breadth_floor(breadth: Breadth) -> Bracket {
    match breadth {
        Breadth::Individual => Bracket::Low,
        Breadth::Group => Bracket::Medium,
        Breadth::Societal => Bracket::High,
    }
}

/// `bracket = max(max harm floor, breadth floor)`; monotone in both inputs.
pub fn severity_bracket(
    harms: &BTreeSet<HarmCategory>,
    breadth: Breadth,
) -> Result<Severity, DomainError> {
    let worst_harm = harms
        .iter()
        .map(|&h| harm_floor(h))
        .max()
        .ok_or(DomainError::EmptyHarmSet)?;
    Ok(Severity {
        harm_categories: harms.clone(),
        breadth,
        bracket: worst_harm.max(breadth_floor(breadth)),
    })
}
