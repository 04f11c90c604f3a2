mod oracles;

use hazreg_core::domain::{Actor, Role};
use hazreg_core::engine::{self, embargo_view, embargoed_field_paths, CaseView};
use hazreg_core::formats::to_canonical_bytes;
use hazreg_core::testing;
use rand::rngs::StdRng;
use rand::SeedableRng;

const HISTORIES: usize = 600;

#[test]
fn replay_reproduces_identical_cases() {
    let mut rng = StdRng::seed_from_u64(11);
    let card = testing::sample_card();
    for i in 0..HISTORIES {
        let (case, _) = oracles::random_history(&mut rng, &format!("C-{i}"));
        let stored = serde_json::to_vec(&case.audit).unwrap();
        let events: Vec<engine::AuditEvent> = serde_json::from_slice(&stored).unwrap();
        let rebuilt = engine::replay(&events, &card).unwrap();
        assert_eq!(
            to_canonical_bytes(&rebuilt).unwrap(),
            to_canonical_bytes(&case).unwrap()
        );
    }
}

#[test]
fn tampered_trails_do_not_replay() {
    let mut rng = StdRng::seed_from_u64(12);
    let card = testing::sample_card();
    let mut checked = 0;
    for i in 0..200 {
        let (case, _) = oracles::random_history(&mut rng, &format!("C-{i}"));
        if case.audit.len() < 2 {
            continue;
        }
        let mut events = case.audit.clone();
        let last = events.last_mut().unwrap();
        last.to_state = if last.to_state == engine::CaseState::Fixed {
            engine::CaseState::Published
        } else {
            engine::CaseState::Fixed
        };
        assert!(engine::replay(&events, &card).is_err());
        checked += 1;
    }
    assert!(checked > 50);
}

fn outsiders() -> Vec<Option<Actor>> {
    vec![
        None,
        Some(Actor::new("stranger", [Role::Reporter])),
        Some(Actor::new("other-vendor", [Role::Vendor])),
        Some(Actor::new("press", [])),
    ]
}

#[test]
fn non_participants_never_see_embargoed_material() {
    let mut rng = StdRng::seed_from_u64(13);
    let mut public_views = 0;
    for i in 0..HISTORIES {
        let (case, raw) = oracles::random_history(&mut rng, &format!("C-{i}"));
        for actor in outsiders() {
            let view = embargo_view(&case, actor.as_ref());
            assert!(!matches!(view, CaseView::Full(_)));
            if !case.state.is_disclosed() {
                assert!(
                    view.is_hidden(),
                    "undisclosed case leaked in {:?}",
                    case.state
                );
            }
            let Some(value) = view.to_value() else {
                continue;
            };
            public_views += 1;
            assert_eq!(embargoed_field_paths(&value), Vec::<String>::new());
            let text = value.to_string();
            assert!(!text.contains(oracles::RAW_MARKER));
            for payload in &raw {
                assert!(!text.contains(payload.as_str()));
            }
        }
    }
    assert!(public_views > 0);
}

#[test]
fn participants_see_the_whole_case() {
    let mut rng = StdRng::seed_from_u64(14);
    for i in 0..100 {
        let (case, _) = oracles::random_history(&mut rng, &format!("C-{i}"));
        for role in [
            Role::Reporter,
            Role::Vendor,
            Role::Committee,
            Role::Adjudicator,
        ] {
            let view = embargo_view(&case, Some(&oracles::actor_for(role)));
            assert!(matches!(view, CaseView::Full(_)));
        }
    }
}
