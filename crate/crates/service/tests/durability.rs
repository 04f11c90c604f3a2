//! Restart, replay and tamper behaviour, plus identifier allocation under
//! concurrent load.

mod common;

use std::collections::BTreeSet;

use chrono::{Datelike, Utc};
use common::*;
use hazreg_core::formats::CfeId;
use hazreg_service::storage::EVENT_LOG;
use serde_json::json;

fn requested_cases(h: &Harness, count: usize) -> Vec<String> {
    (0..count)
        .map(|_| {
            let case = h.submit(&safety_report());
            h.must(&case, VENDOR, "acknowledge", json!({}));
            h.must(&case, VENDOR, "request_cfe", json!({}));
            case
        })
        .collect()
}

fn assign(h: &Harness, case: &str) -> CfeId {
    let body = h.must(case, "committee-1", "assign_cfe", cfe_details());
    body["cfe_id"].as_str().unwrap().parse().unwrap()
}

#[test]
fn concurrent_assignments_are_gap_free_and_survive_restart() {
    let mut h = Harness::new();
    h.register_card();
    let cases = requested_cases(&h, 101);
    let (last, burst) = cases.split_last().unwrap();
    let ids: Vec<CfeId> = std::thread::scope(|s| {
        let handles: Vec<_> = burst
            .iter()
            .map(|case| s.spawn(|| assign(&h, case)))
            .collect();
        handles.into_iter().map(|t| t.join().unwrap()).collect()
    });
    let year = u16::try_from(Utc::now().year()).unwrap();
    let sequences: BTreeSet<u64> = ids.iter().map(|id| id.sequence).collect();
    assert!(ids.iter().all(|id| id.year == year));
    assert_eq!(
        sequences,
        (1..=100).collect::<BTreeSet<u64>>(),
        "duplicates or gaps"
    );

    h.restart().unwrap();
    assert_eq!(assign(&h, last).sequence, 101);
}

#[test]
fn restart_rebuilds_identical_state() {
    let mut h = Harness::new();
    h.register_card();
    let case = h.submit(&safety_report());
    let evidence = json!({"n": 50, "k": 3, "sampling_protocol": "seeded", "sealed_payload": "cmF3IHByb21wdHM="});
    assert!(h
        .post(
            &format!("/cases/{case}/evidence"),
            Some(REPORTER),
            &evidence
        )
        .ok());
    h.must(
        &case,
        VENDOR,
        "reject",
        json!({"reason": "within tolerance"}),
    );
    h.must(&case, REPORTER, "escalate", json!({}));
    assert!(h
        .post(
            &format!("/cases/{case}/adjudicate"),
            Some("adjudicator-1"),
            &json!({})
        )
        .ok());
    let security = h.submit(&security_report());
    h.must(&security, VENDOR, "confirm", json!({}));

    let before = h.registry().snapshot_bytes();
    let view_before = h.get(&format!("/cases/{case}"), Some(VENDOR)).raw;
    h.restart().unwrap();
    assert_eq!(h.registry().snapshot_bytes(), before);
    assert_eq!(
        h.get(&format!("/cases/{case}"), Some(VENDOR)).raw,
        view_before
    );
}

#[test]
fn snapshots_are_checked_on_restart() {
    let mut h = Harness::new();
    h.register_card();
    h.submit(&safety_report());
    let path = h.registry().write_snapshot().unwrap();
    h.restart().unwrap();

    h.stop();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("submitted", "withdrawn", 1)).unwrap();
    assert!(
        h.restart().is_err(),
        "a snapshot disagreeing with the log must stop startup"
    );
}

#[test]
fn tampering_with_the_log_prevents_startup() {
    let mut h = Harness::new();
    h.register_card();
    let case = h.submit(&safety_report());
    h.must(&case, VENDOR, "acknowledge", json!({}));
    h.stop();
    let log = h.data_dir().join(EVENT_LOG);
    let pristine = std::fs::read(&log).unwrap();
    for offset in (0..pristine.len()).step_by(pristine.len() / 40 + 1) {
        let mut bytes = pristine.clone();
        bytes[offset] ^= 0x01;
        std::fs::write(&log, &bytes).unwrap();
        assert!(h.restart().is_err(), "flip at byte {offset} went unnoticed");
    }
    std::fs::write(&log, &pristine[..pristine.len() - 5]).unwrap();
    assert!(h.restart().is_err(), "a torn final line is corruption");
    std::fs::write(&log, &pristine).unwrap();
    h.restart().unwrap();
}
