//! The CLI behaves exactly like the API for every reachable position,
//! action and actor: same refusals, same acceptances, same resulting state.

#[path = "common.rs"]
mod common;

use common::*;
use hazreg_core::domain::Track;
use hazreg_core::engine::{find_rule, Action};
use serde_json::json;

#[test]
fn cli_transitions_match_the_api() {
    let h = Harness::new();
    h.register_card();
    let scratch = tempfile::tempdir().unwrap();
    let actors = [
        REPORTER,
        VENDOR,
        "committee-1",
        "adjudicator-1",
        "consumer-1",
    ];
    let mut counter = 0;
    let mut compared = 0;
    for (node, (origin, path)) in paths() {
        let case = drive(&h, origin, &path, &mut counter);
        let other_track = [Track::Safety, Track::Security]
            .into_iter()
            .find(|t| *t != node.0);
        for actor in actors {
            for action in Action::TRANSITIONS {
                let advertised = h.get(&format!("/cases/{case}/actions"), Some(actor));
                let legal = advertised.ok()
                    && advertised.body["actions"]
                        .as_array()
                        .unwrap()
                        .contains(&json!(action));
                let target = if legal {
                    drive(&h, origin, &path, &mut counter)
                } else {
                    case.clone()
                };
                let payload = payload_for(&h, &target, *action, other_track, &mut counter);
                let file = write_json(scratch.path(), "payload.json", &payload);
                let before = h.version(&target);
                let cli = run_as(
                    &h,
                    actor,
                    &[
                        "--json",
                        "case",
                        "transition",
                        &target,
                        action.as_str(),
                        "--payload",
                        &file,
                    ],
                );
                if legal {
                    assert_eq!(cli.code, 0, "{actor} {action} at {node:?}: {}", cli.err);
                    let rule = find_rule(node.0, node.1, *action).unwrap();
                    assert_eq!(cli.json()["state"], json!(rule.to));
                    assert_eq!(cli.json()["version"], json!(before + 1));
                } else {
                    let api = h.post(
                        &format!("/cases/{target}/transitions"),
                        Some(actor),
                        &json!({"action": action, "payload": payload, "expected_version": before}),
                    );
                    let expected_code = match api.status {
                        401 | 403 | 409 => 3,
                        400 | 422 => 1,
                        _ => 2,
                    };
                    assert!(
                        !api.ok(),
                        "{actor} {action} at {node:?} was accepted by the API"
                    );
                    assert_eq!(
                        cli.code, expected_code,
                        "{actor} {action} at {node:?}: {}",
                        cli.err
                    );
                    if api.status != 404 || cli.code != 2 {
                        assert_eq!(cli.error_json()["error"]["code"], api.body["error"]["code"]);
                    }
                    assert_eq!(h.version(&target), before);
                }
                compared += 1;
            }
        }
    }
    assert!(compared > 1000, "{compared}");
}
