mod oracles;

use hazreg_core::formats::{
    emit_advisory, emit_cfe_record, emit_hex, emit_model_card, emit_taxonomy, parse_advisory,
    parse_cfe_record, parse_hex, parse_model_card, parse_taxonomy, serialize_canonical, Digest,
    FindingCode,
};
use hazreg_core::testing;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

const PER_KIND: usize = 1000;

fn fixpoint(bytes: &[u8]) {
    let value: Value = serde_json::from_slice(bytes).unwrap();
    assert_eq!(
        serialize_canonical(&value),
        bytes,
        "emitted bytes are not canonical"
    );
}

#[test]
fn model_cards_round_trip() {
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..PER_KIND {
        let card = oracles::model_card(&mut rng);
        let bytes = emit_model_card(&card).unwrap();
        fixpoint(&bytes);
        let back = parse_model_card(&bytes)
            .unwrap_or_else(|e| panic!("{e:?}\n{}", String::from_utf8_lossy(&bytes)));
        assert_eq!(back, card);
        assert_eq!(
            Digest::of(&emit_model_card(&back).unwrap()),
            Digest::of(&bytes)
        );
    }
}

#[test]
fn cfe_records_round_trip() {
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..PER_KIND {
        let record = oracles::cfe_record(&mut rng);
        let bytes = emit_cfe_record(&record);
        fixpoint(&bytes);
        let back = parse_cfe_record(&bytes)
            .unwrap_or_else(|e| panic!("{e:?}\n{}", String::from_utf8_lossy(&bytes)));
        assert_eq!(back, record);
    }
}

#[test]
fn hex_statements_round_trip() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..PER_KIND {
        let stmt = oracles::hex_statement(&mut rng);
        let bytes = emit_hex(&stmt);
        fixpoint(&bytes);
        let back = parse_hex(&bytes)
            .unwrap_or_else(|e| panic!("{e:?}\n{}", String::from_utf8_lossy(&bytes)));
        assert_eq!(back, stmt);
    }
}

#[test]
fn taxonomies_round_trip() {
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..PER_KIND {
        let desc = oracles::taxonomy(&mut rng);
        let bytes = emit_taxonomy(&desc);
        fixpoint(&bytes);
        assert_eq!(parse_taxonomy(&bytes).unwrap(), desc);
    }
}

#[test]
fn advisories_round_trip() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..PER_KIND {
        let adv = oracles::advisory(&mut rng);
        let bytes = emit_advisory(&adv);
        fixpoint(&bytes);
        assert_eq!(parse_advisory(&bytes).unwrap(), adv);
    }
}

#[test]
fn canonical_form_ignores_key_order_and_whitespace() {
    let mut rng = StdRng::seed_from_u64(6);
    for _ in 0..PER_KIND {
        let tree = oracles::json_tree(&mut rng, 4);
        let reference = serialize_canonical(&tree);
        for _ in 0..3 {
            let text = oracles::shuffled_text(&mut rng, &tree);
            let reparsed: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(serialize_canonical(&reparsed), reference, "{text}");
        }
        let again: Value = serde_json::from_slice(&reference).unwrap();
        assert_eq!(
            Digest::of(&serialize_canonical(&again)),
            Digest::of(&reference)
        );
    }
}

type Defect = (&'static str, FindingCode, fn(&mut Value));

/// Independent defects: applying any subset yields one finding per defect.
fn defects() -> Vec<Defect> {
    vec![
        ("drop scope", FindingCode::MissingRequiredField, |d| {
            d.as_object_mut().unwrap().remove("scope");
        }),
        ("no channel", FindingCode::NoReportChannel, |d| {
            d["governance"] = json!({"maintainer": "x"})
        }),
        ("lineage tail", FindingCode::VersionNotInLineage, |d| {
            d["lineage"] = json!(["other"])
        }),
        ("blank how", FindingCode::IncompleteUseStatement, |d| {
            d["intent_and_use"][0]["how"] = json!(" ")
        }),
        ("schema major", FindingCode::UnsupportedSchemaVersion, |d| {
            d["schema_version"] = json!("2.0")
        }),
        ("taxonomy id", FindingCode::MissingRequiredField, |d| {
            d["taxonomy_ref"].as_object_mut().unwrap().remove("id");
        }),
        ("reproducible type", FindingCode::WrongType, |d| {
            d["evaluation_data"][0]["reproducible"] = json!("yes")
        }),
        ("digest", FindingCode::InvalidDigest, |d| {
            d["references"][0]["digest"] = json!("md5:00")
        }),
        ("reference kind", FindingCode::UnknownEnumValue, |d| {
            d["references"][0]["kind"] = json!("blog")
        }),
        ("blank name", FindingCode::EmptyField, |d| {
            d["model_name"] = json!("")
        }),
        ("dataset", FindingCode::MissingRequiredField, |d| {
            d["evaluation_data"][0]
                .as_object_mut()
                .unwrap()
                .remove("dataset_ref");
        }),
        ("missing what", FindingCode::IncompleteUseStatement, |d| {
            d["intent_and_use"][0]
                .as_object_mut()
                .unwrap()
                .remove("what");
        }),
        ("output type", FindingCode::WrongType, |d| {
            d["evaluation_data"][0]["outputs"]["refusal_rate"] = json!("high")
        }),
    ]
}

#[test]
fn every_injected_defect_is_reported() {
    let all = defects();
    let mut rng = StdRng::seed_from_u64(7);
    for round in 0..400 {
        let k = if round < all.len() {
            round + 1
        } else {
            rng.gen_range(1..=all.len())
        };
        let chosen: Vec<&Defect> = all.choose_multiple(&mut rng, k).collect();
        let mut doc = testing::sample_card_json();
        for (_, _, inject) in &chosen {
            inject(&mut doc);
        }
        let err = parse_model_card(doc.to_string().as_bytes()).unwrap_err();
        let mut got: Vec<FindingCode> = err.findings().iter().map(|f| f.code).collect();
        let mut want: Vec<FindingCode> = chosen.iter().map(|(_, code, _)| *code).collect();
        got.sort();
        want.sort();
        let names: Vec<&str> = chosen.iter().map(|(name, _, _)| *name).collect();
        assert_eq!(got, want, "defects {names:?}");
    }
}
