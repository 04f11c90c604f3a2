//! Independent reference implementations and generators shared by the
//! integration tests. Nothing here calls into the code under test except
//! to build inputs.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::{DateTime, Duration, TimeZone, Utc};
use hazreg_core::domain::{
    severity_bracket, Actor, Advisory, Bracket, Breadth, CfeRecord, CfeStatus, ClaimedTrack,
    EvaluationRecord, Exclusion, GovernanceInfo, HarmCategory, ImpactClaim, ModelCard, ModelRef,
    ReferenceEntry, ReferenceKind, Report, Role, Scope, TaxonomyDescriptor, TaxonomyRef, Track,
    UseStatement,
};
use hazreg_core::engine::{self, Action, CaseFile, CaseState, PayloadKind, TRANSITIONS};
use hazreg_core::formats::{CfeId, Digest};
use hazreg_core::hex::{HexStatement, HexStatus, HexSubcomponent, Justification, LifecycleStage};
use hazreg_core::testing;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

// ---------------------------------------------------------------- statistics

/// P(X >= k) by plain summation of f64 products.
pub fn tail_direct(k: u64, n: u64, p: f64) -> f64 {
    let mut total = 0.0;
    for j in k..=n {
        total += choose_u128(n, j) as f64 * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
    }
    total
}

pub fn choose_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Lower bound by bisection on the directly summed tail.
pub fn lower_bound_oracle(k: u64, n: u64, alpha: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if tail_direct(k, n, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided Fisher p-values for every table with row totals `n1`, `n2`,
/// indexed `[a][c]` (violations in row 1 and row 2). Exact integer weights
/// and exact tie comparison.
pub fn fisher_oracle_rows(n1: u64, n2: u64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n2 as usize + 1]; n1 as usize + 1];
    for c1 in 0..=(n1 + n2) {
        let lo = c1.saturating_sub(n2);
        let hi = c1.min(n1);
        let weights: Vec<(u64, u128)> = (lo..=hi)
            .map(|x| (x, choose_u128(n1, x) * choose_u128(n2, c1 - x)))
            .collect();
        let total: u128 = weights.iter().map(|(_, w)| w).sum();
        // Ascending weights with running sums: "at most as likely" is a prefix.
        let mut sorted: Vec<u128> = weights.iter().map(|(_, w)| *w).collect();
        sorted.sort_unstable();
        let prefix: Vec<u128> = sorted
            .iter()
            .scan(0u128, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        for &(x, w_obs) in &weights {
            let extreme = prefix[sorted.partition_point(|w| *w <= w_obs) - 1];
            out[x as usize][(c1 - x) as usize] = extreme as f64 / total as f64;
        }
    }
    out
}

/// Same table for margins too large for exact integers: binomials come from
/// Pascal's recurrence in f64, ties use a relative tolerance.
pub fn fisher_oracle_pascal(n1: u64, n2: u64) -> Vec<Vec<f64>> {
    let n = n1.max(n2) as usize;
    let mut pascal = vec![vec![1.0f64]];
    for row in 1..=n {
        let prev = &pascal[row - 1];
        let mut next = vec![1.0; row + 1];
        for j in 1..row {
            next[j] = prev[j - 1] + prev[j];
        }
        pascal.push(next);
    }
    let choose = |a: u64, b: u64| pascal[a as usize][b as usize];
    let mut out = vec![vec![0.0; n2 as usize + 1]; n1 as usize + 1];
    for c1 in 0..=(n1 + n2) {
        let lo = c1.saturating_sub(n2);
        let hi = c1.min(n1);
        let weights: Vec<(u64, f64)> = (lo..=hi)
            .map(|x| (x, choose(n1, x) * choose(n2, c1 - x)))
            .collect();
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        for &(x, w_obs) in &weights {
            let extreme: f64 = weights
                .iter()
                .filter(|(_, w)| *w <= w_obs * (1.0 + 1e-12))
                .map(|(_, w)| w)
                .sum();
            out[x as usize][(c1 - x) as usize] = extreme / total;
        }
    }
    out
}

// ------------------------------------------------------------------- lineage

/// Brute force: `commit` inherits the hazard iff some affected ancestor
/// (itself included) reaches it along a path with no remediating commit
/// strictly below that ancestor.
pub fn closure_oracle(
    parents: &BTreeMap<String, String>,
    affected: &BTreeSet<String>,
    remediating: &BTreeSet<String>,
    commit: &str,
) -> bool {
    let mut path = vec![commit.to_string()];
    while let Some(parent) = parents.get(path.last().unwrap()) {
        path.push(parent.clone());
    }
    (0..path.len())
        .any(|i| affected.contains(&path[i]) && path[..i].iter().all(|c| !remediating.contains(c)))
}

/// A random forest over `size` commits: each commit points at an earlier one.
pub fn random_forest(rng: &mut StdRng, size: usize) -> BTreeMap<String, String> {
    let mut parents = BTreeMap::new();
    for i in 1..size {
        if rng.gen_bool(0.85) {
            let parent = rng.gen_range(0..i);
            parents.insert(format!("c{i}"), format!("c{parent}"));
        }
    }
    parents
}

// ---------------------------------------------------------------- generators

const PIECES: &[&str] = &[
    "a", "b", "k", "z", "Q", "_", "-", "0", "7", " ", "é", "ß", "\"", "\\", "/", "\n", "\t", "☃",
    "😀", "\u{1}", "~",
];

pub fn text(rng: &mut StdRng) -> String {
    let len = rng.gen_range(0..8);
    (0..len).map(|_| *PIECES.choose(rng).unwrap()).collect()
}

/// Non-blank text: always starts with a letter.
pub fn word(rng: &mut StdRng) -> String {
    format!("{}{}", ["m", "x", "é", "q"].choose(rng).unwrap(), text(rng))
}

pub fn tag(rng: &mut StdRng) -> String {
    [
        "chat_assistant",
        "code_generation",
        "prompt_injection",
        "nsfw_generation",
        "multilingual_output",
        "summarization",
    ]
    .choose(rng)
    .unwrap()
    .to_string()
}

fn set_of(rng: &mut StdRng, max: usize, f: fn(&mut StdRng) -> String) -> BTreeSet<String> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| f(rng)).collect()
}

pub fn number(rng: &mut StdRng) -> f64 {
    match rng.gen_range(0..6) {
        0 => rng.gen_range(-1000..1000) as f64,
        1 => rng.gen::<f64>(),
        2 => rng.gen_range(-1e300..1e300),
        3 => rng.gen_range(-1e-300..1e-300),
        4 => 2f64.powi(rng.gen_range(40..70)),
        _ => rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-20..20)),
    }
}

pub fn timestamp(rng: &mut StdRng) -> DateTime<Utc> {
    let base = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
    let ts = base + Duration::seconds(rng.gen_range(0..400_000_000));
    if rng.gen_bool(0.3) {
        ts + Duration::milliseconds(rng.gen_range(1..1000))
    } else {
        ts
    }
}

pub fn cfe_id(rng: &mut StdRng) -> CfeId {
    CfeId {
        year: rng.gen_range(2000..2100),
        sequence: if rng.gen_bool(0.8) {
            rng.gen_range(1..10_000)
        } else {
            rng.gen_range(1..u64::MAX / 2)
        },
    }
}

pub fn model_ref(rng: &mut StdRng) -> ModelRef {
    ModelRef {
        name: word(rng),
        version: word(rng),
    }
}

pub fn harms(rng: &mut StdRng) -> BTreeSet<HarmCategory> {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| *HarmCategory::ALL.choose(rng).unwrap())
        .collect()
}

pub fn model_card(rng: &mut StdRng) -> ModelCard {
    let version = word(rng);
    let mut lineage: Vec<String> = (0..rng.gen_range(0..3)).map(|_| word(rng)).collect();
    lineage.push(version.clone());
    let channel = |rng: &mut StdRng| rng.gen_bool(0.6).then(|| word(rng));
    let mut governance = GovernanceInfo {
        security_report_channel: channel(rng),
        safety_report_channel: channel(rng),
        maintainer: channel(rng),
        methodology: channel(rng),
        cve_numbering_authority: rng.gen_bool(0.3),
    };
    if !governance.has_report_channel() {
        governance.safety_report_channel = Some(word(rng));
    }
    ModelCard {
        schema_version: format!("1.{}", rng.gen_range(0..5)),
        model_name: word(rng),
        model_version: version,
        lineage,
        intent_and_use: (0..rng.gen_range(1..4))
            .map(|_| UseStatement {
                who: word(rng),
                what: word(rng),
                how: word(rng),
                use_tags: set_of(rng, 2, tag),
            })
            .collect(),
        scope: Scope {
            exclusions_declared: true,
            exclusions: (0..rng.gen_range(0..3))
                .map(|_| Exclusion {
                    category: tag(rng),
                    description: text(rng),
                })
                .collect(),
        },
        evaluation_data: (0..rng.gen_range(0..3))
            .map(|_| EvaluationRecord {
                framework_id: rng.gen_bool(0.5).then(|| word(rng)),
                framework_version: rng.gen_bool(0.5).then(|| word(rng)),
                dataset_ref: word(rng),
                outputs: (0..rng.gen_range(0..4))
                    .map(|_| (word(rng), number(rng)))
                    .collect(),
                reproducible: rng.gen_bool(0.5),
            })
            .collect(),
        governance,
        references: rng.gen_bool(0.7).then(|| {
            (0..rng.gen_range(0..3))
                .map(|_| ReferenceEntry {
                    kind: *ReferenceKind::ALL.choose(rng).unwrap(),
                    uri: word(rng),
                    digest: Digest::of(word(rng).as_bytes()),
                })
                .collect()
        }),
        taxonomy_ref: TaxonomyRef {
            id: word(rng),
            version: word(rng),
        },
    }
}

pub fn cfe_record(rng: &mut StdRng) -> CfeRecord {
    let severity = rng.gen_bool(0.6).then(|| {
        let breadth = *Breadth::ALL.choose(rng).unwrap();
        severity_bracket(&harms(rng), breadth).unwrap()
    });
    CfeRecord {
        cfe_id: cfe_id(rng),
        status: *CfeStatus::ALL.choose(rng).unwrap(),
        title: word(rng),
        description: text(rng),
        model_ref: model_ref(rng),
        affected_uses: set_of(rng, 3, tag),
        affected_lineage: set_of(rng, 3, word),
        remediating_commits: set_of(rng, 2, word),
        effective_guardrails: set_of(rng, 2, word),
        severity,
        advisory_id: rng.gen_bool(0.5).then(|| word(rng)),
        assigned_at: timestamp(rng),
        published_at: rng.gen_bool(0.5).then(|| timestamp(rng)),
        re_review_at: timestamp(rng),
        cultural_scope_notes: rng.gen_bool(0.3).then(|| text(rng)),
    }
}

pub fn hex_statement(rng: &mut StdRng) -> HexStatement {
    let status = *HexStatus::ALL.choose(rng).unwrap();
    HexStatement {
        statement_id: word(rng),
        cfe_id: cfe_id(rng),
        deployment_ref: word(rng),
        subcomponent: HexSubcomponent {
            commit: word(rng),
            lifecycle_stage: *LifecycleStage::ALL.choose(rng).unwrap(),
            source: text(rng),
        },
        status,
        justification: (status == HexStatus::Unaffected)
            .then(|| *Justification::ALL.choose(rng).unwrap()),
        impact_statement: (status == HexStatus::Affected).then(|| word(rng)),
        action_statement: rng.gen_bool(0.4).then(|| word(rng)),
        issued_at: timestamp(rng),
        supersedes: rng.gen_bool(0.4).then(|| word(rng)),
    }
}

pub fn taxonomy(rng: &mut StdRng) -> TaxonomyDescriptor {
    TaxonomyDescriptor {
        id: word(rng),
        version: word(rng),
        license_id: word(rng),
        open_development: rng.gen_bool(0.5),
        extensible: rng.gen_bool(0.5),
        publishes_raw_responses: rng.gen_bool(0.5),
        benchmark_integration_uri: rng.gen_bool(0.5).then(|| word(rng)),
        cultural_scope_notes: text(rng),
    }
}

pub fn advisory(rng: &mut StdRng) -> Advisory {
    let (cfe, cve) = match rng.gen_range(0..3) {
        0 => (Some(cfe_id(rng)), None),
        1 => (None, Some(word(rng))),
        _ => (Some(cfe_id(rng)), Some(word(rng))),
    };
    Advisory {
        advisory_id: word(rng),
        cfe_id: cfe,
        cve_ref: cve,
        title: word(rng),
        summary: word(rng),
        recommendations: rng.gen_bool(0.5).then(|| text(rng)),
        model_ref: model_ref(rng),
        severity_bracket: rng
            .gen_bool(0.5)
            .then(|| *Bracket::ALL.choose(rng).unwrap()),
        published_at: timestamp(rng),
        record_uri: word(rng),
    }
}

/// A random JSON tree of bounded depth.
pub fn json_tree(rng: &mut StdRng, depth: u32) -> Value {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    match (leaf, rng.gen_range(0..6)) {
        (true, 0) => Value::Null,
        (true, 1) => json!(rng.gen_bool(0.5)),
        (true, 2) => json!(rng.gen_range(-1_000_000i64..1_000_000)),
        (true, 3) => json!(number(rng)),
        (true, _) => json!(text(rng)),
        (false, 0..=2) => Value::Array(
            (0..rng.gen_range(0..4))
                .map(|_| json_tree(rng, depth - 1))
                .collect(),
        ),
        (false, _) => Value::Object(
            (0..rng.gen_range(0..5))
                .map(|_| (text(rng), json_tree(rng, depth - 1)))
                .collect(),
        ),
    }
}

/// Render `value` as JSON text with object keys in a random order and
/// random insignificant whitespace.
pub fn shuffled_text(rng: &mut StdRng, value: &Value) -> String {
    let ws = |rng: &mut StdRng| [" ", "", "\n", "\t"].choose(rng).unwrap().to_string();
    match value {
        Value::Array(items) => {
            let parts: Vec<String> = items
                .iter()
                .map(|v| format!("{}{}", ws(rng), shuffled_text(rng, v)))
                .collect();
            format!("[{}]", parts.join(","))
        }
        Value::Object(map) => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.shuffle(rng);
            let parts: Vec<String> = entries
                .into_iter()
                .map(|(k, v)| {
                    format!(
                        "{}{}:{}{}",
                        ws(rng),
                        Value::String(k.clone()),
                        ws(rng),
                        shuffled_text(rng, v)
                    )
                })
                .collect();
            format!("{{{}}}", parts.join(","))
        }
        other => other.to_string(),
    }
}

// ------------------------------------------------------------- state machine

pub const REPORTER: &str = "reporter-1";
pub const VENDOR: &str = "vendor-1";

pub fn actor_for(role: Role) -> Actor {
    let id = match role {
        Role::Reporter => REPORTER.to_string(),
        Role::Vendor => VENDOR.to_string(),
        other => format!("{other}-1"),
    };
    Actor::new(id, [role])
}

pub fn t(minutes: i64) -> DateTime<Utc> {
    testing::t0() + Duration::minutes(minutes)
}

pub fn report_for(track: Track) -> Report {
    let mut report = testing::sample_report();
    report.reporter_id = REPORTER.into();
    let impact: &mut ImpactClaim = &mut report.impact;
    match track {
        Track::Safety => {}
        Track::Security => {
            impact.harm_categories.clear();
            impact.confidentiality_loss = true;
            report.claimed_track = ClaimedTrack::Security;
        }
        Track::Ambiguous => {
            impact.integrity_loss = true;
            report.claimed_track = ClaimedTrack::Unknown;
        }
    }
    report
}

pub fn fresh_case(track: Track, id: &str) -> CaseFile {
    engine::submit_report(
        id,
        report_for(track),
        &testing::sample_card(),
        VENDOR,
        90,
        t(0),
    )
    .unwrap()
}

pub fn payload_kind(action: Action) -> PayloadKind {
    TRANSITIONS
        .iter()
        .find(|r| r.action == action)
        .map(|r| r.payload)
        .unwrap_or(PayloadKind::None)
}

/// A payload the engine should accept for `action` on `case`.
pub fn valid_payload(case: &CaseFile, action: Action) -> Value {
    match payload_kind(action) {
        PayloadKind::None => Value::Null,
        PayloadKind::Reason => json!({"reason": "not reproducible"}),
        PayloadKind::Track => {
            json!({"track": if case.track == Track::Safety { "security" } else { "safety" }})
        }
        PayloadKind::AssignCfe => json!({
            "cfe_id": "CFE-2025-0001",
            "title": "Demeaning replies",
            "affected_uses": [testing::SAMPLE_USE],
            "affected_lineage": [testing::SAMPLE_COMMIT],
        }),
        PayloadKind::Publish => {
            let mut p = json!({
                "advisory_id": "ADV-2025-0001",
                "title": "Advisory",
                "summary": "Upgrade or add a guardrail.",
                "record_uri": "/cfe/CFE-2025-0001",
                "vex_ref": "hex-1",
            });
            if let Some(id) = case.cfe_id {
                p["cfe_id"] = json!(id);
            }
            if let Some(cve) = &case.cve_ref {
                p["cve_ref"] = json!(cve);
            }
            p
        }
        PayloadKind::Fix => json!({"hex_statement_id": "hex-2", "vex_ref": "hex-2"}),
        PayloadKind::AssignCve => json!({"cve_ref": "CVE-STUB-1"}),
        PayloadKind::GrantAppeal => {
            json!({"cve_ref": "CVE-STUB-1", "resolution": "program sided with reporter"})
        }
        PayloadKind::EnterEmbargo => Value::Null,
    }
}

/// One concrete case for every (track, state) pair reachable from intake,
/// found by breadth-first search through the real engine.
pub fn reachable_cases() -> BTreeMap<(Track, CaseState), CaseFile> {
    let mut out = BTreeMap::new();
    let mut queue = VecDeque::new();
    for track in Track::ALL {
        queue.push_back(fresh_case(*track, "C-1"));
    }
    let mut out_of_scope = report_for(Track::Safety);
    out_of_scope.impact.categories = ["prompt_injection".to_string()].into();
    queue.push_back(
        engine::submit_report(
            "C-1",
            out_of_scope,
            &testing::sample_card(),
            VENDOR,
            90,
            t(0),
        )
        .unwrap(),
    );
    while let Some(case) = queue.pop_front() {
        let key = (case.track, case.state);
        if out.contains_key(&key) {
            continue;
        }
        for action in Action::TRANSITIONS {
            for role in Role::ALL {
                let payload = valid_payload(&case, *action);
                let at = t(case.version as i64);
                if let Ok(next) = engine::apply_transition(
                    &case,
                    *action,
                    &actor_for(*role),
                    &payload,
                    case.version,
                    at,
                ) {
                    queue.push_back(next);
                }
            }
        }
        out.insert(key, case);
    }
    out
}

/// Marker embedded in every raw evidence payload so leaks are easy to spot.
pub const RAW_MARKER: &str = "RAW-PROMPT-OUTPUT::";

/// A random but legal workflow for one case: table-driven transitions with
/// evidence uploads and panel advice mixed in. Returns the final case and
/// the raw evidence payloads that were sealed along the way.
pub fn random_history(rng: &mut StdRng, case_id: &str) -> (CaseFile, Vec<String>) {
    let track = *Track::ALL.choose(rng).unwrap();
    let mut case = fresh_case(track, case_id);
    let mut raw = Vec::new();
    let steps = rng.gen_range(0..14);
    for step in 0..steps {
        let at = t(10 * (step as i64 + 1));
        let roll = rng.gen_range(0..10);
        if roll == 0 && !case.state.is_terminal() {
            let party = if rng.gen_bool(0.5) {
                Role::Reporter
            } else {
                Role::Vendor
            };
            let payload = format!("{RAW_MARKER}{case_id}/{step}/{}", text(rng));
            let n = rng.gen_range(1..200);
            let mut set = hazreg_core::domain::EvidenceSet::new("", rng.gen_range(0..=n), n);
            set.sampling_protocol = format!("uniform sample {step}");
            set.sealed_payload_digest = Some(Digest::of(payload.as_bytes()));
            raw.push(payload);
            case = engine::attach_evidence(&case, &actor_for(party), set, Some(case.version), at)
                .unwrap();
            continue;
        }
        if roll == 1 && case.state == CaseState::Adjudication {
            if let Ok(report) = hazreg_core::stats::adjudicate(&case, 0.01, 0.05) {
                case = engine::record_recommendation(
                    &case,
                    &actor_for(Role::Adjudicator),
                    &report,
                    Some(case.version),
                    at,
                )
                .unwrap();
                continue;
            }
        }
        let options: Vec<&hazreg_core::engine::TransitionRule> = TRANSITIONS
            .iter()
            .filter(|r| r.track == case.track && r.from == case.state)
            .collect();
        let Some(rule) = options.choose(rng) else {
            break;
        };
        let role = *rule.roles.choose(rng).unwrap();
        let payload = valid_payload(&case, rule.action);
        case = engine::apply_transition(
            &case,
            rule.action,
            &actor_for(role),
            &payload,
            case.version,
            at,
        )
        .unwrap_or_else(|e| panic!("{:?} {} by {role}: {e}", case.state, rule.action));
    }
    (case, raw)
}
