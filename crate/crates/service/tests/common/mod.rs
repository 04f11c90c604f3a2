//! A registry on a random port plus a small blocking HTTP client.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;

use chrono::{Duration, Utc};
use hazreg_core::domain::{Role, Track};
use hazreg_core::engine::{Action, CaseState, PayloadKind, TRANSITIONS};
use hazreg_core::testing;
use hazreg_service::{start, system_clock, Config, RunningServer};
use serde_json::{json, Value};

pub const REPORTER: &str = "reporter-1";
pub const VENDOR: &str = "vendor-1";

pub struct Harness {
    pub dir: tempfile::TempDir,
    pub runtime: tokio::runtime::Runtime,
    pub server: Option<RunningServer>,
    pub url: String,
    pub tokens: BTreeMap<String, String>,
    agent: ureq::Agent,
}

pub struct Reply {
    pub status: u16,
    pub body: Value,
    pub raw: Vec<u8>,
}

impl Reply {
    pub fn ok(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn error_code(&self) -> Option<&str> {
        self.body["error"]["code"].as_str()
    }
}

pub fn config_for(dir: &std::path::Path) -> Config {
    Config {
        bind: "127.0.0.1:0".parse().unwrap(),
        data_dir: dir.to_path_buf(),
        ..Config::default()
    }
}

impl Default for Harness {
    fn default() -> Self {
        Self::new()
    }
}

impl Harness {
    pub fn new() -> Self {
        Self::with_config(|_| {})
    }

    pub fn with_config(tweak: impl FnOnce(&mut Config)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = config_for(dir.path());
        tweak(&mut config);
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(4)
            .enable_all()
            .build()
            .unwrap();
        let server = runtime.block_on(start(config, system_clock())).unwrap();
        let url = server.url();
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        let mut harness = Self {
            dir,
            runtime,
            server: Some(server),
            url,
            tokens: BTreeMap::new(),
            agent,
        };
        for (actor, role) in [
            (REPORTER, Role::Reporter),
            (VENDOR, Role::Vendor),
            ("committee-1", Role::Committee),
            ("adjudicator-1", Role::Adjudicator),
            ("consumer-1", Role::Consumer),
            ("outsider-1", Role::Reporter),
            ("vendor-2", Role::Vendor),
        ] {
            harness.issue(actor, role);
        }
        harness
    }

    pub fn data_dir(&self) -> PathBuf {
        self.dir.path().to_path_buf()
    }

    pub fn registry(&self) -> &hazreg_service::Registry {
        &self.server.as_ref().unwrap().registry
    }

    pub fn issue(&mut self, actor: &str, role: Role) -> String {
        let (_, secret) = self
            .registry()
            .tokens()
            .issue(actor, [role].into(), Duration::days(1), Utc::now())
            .unwrap();
        self.tokens.insert(actor.to_string(), secret.clone());
        secret
    }

    pub fn stop(&mut self) {
        if let Some(server) = self.server.take() {
            self.runtime.block_on(server.stop()).unwrap();
        }
    }

    /// Stop and start again on the same data directory.
    pub fn restart(&mut self) -> Result<(), hazreg_service::ServeError> {
        self.stop();
        let server = self
            .runtime
            .block_on(start(config_for(self.dir.path()), system_clock()))?;
        self.url = server.url();
        self.server = Some(server);
        Ok(())
    }

    pub fn request(
        &self,
        method: &str,
        path: &str,
        actor: Option<&str>,
        body: Option<&[u8]>,
    ) -> Reply {
        let url = format!("{}{}", self.url, path);
        let auth = actor.map(|a| {
            format!(
                "Bearer {}",
                self.tokens.get(a).map(String::as_str).unwrap_or(a)
            )
        });
        let result = match method {
            "GET" => {
                let mut req = self.agent.get(&url);
                if let Some(auth) = &auth {
                    req = req.header("Authorization", auth);
                }
                req.call()
            }
            _ => {
                let mut req = self
                    .agent
                    .post(&url)
                    .header("Content-Type", "application/json");
                if let Some(auth) = &auth {
                    req = req.header("Authorization", auth);
                }
                req.send(body.unwrap_or(b"{}"))
            }
        };
        let mut response = result.unwrap_or_else(|e| panic!("{method} {path}: transport: {e:?}"));
        let status = response.status().as_u16();
        let raw = response.body_mut().read_to_vec().unwrap();
        let body = serde_json::from_slice(&raw).unwrap_or(Value::Null);
        Reply { status, body, raw }
    }

    pub fn get(&self, path: &str, actor: Option<&str>) -> Reply {
        self.request("GET", path, actor, None)
    }

    pub fn post(&self, path: &str, actor: Option<&str>, body: &Value) -> Reply {
        self.request("POST", path, actor, Some(body.to_string().as_bytes()))
    }

    pub fn register_card(&self) {
        let reply = self.post("/model-cards", Some(VENDOR), &testing::sample_card_json());
        assert!(reply.ok(), "{}", reply.body);
    }

    pub fn submit(&self, body: &Value) -> String {
        let reply = self.post("/reports", Some(REPORTER), body);
        assert!(reply.ok(), "{}", reply.body);
        reply.body["case_id"].as_str().unwrap().to_string()
    }

    pub fn version(&self, case: &str) -> u64 {
        let reply = self.get(&format!("/cases/{case}/actions"), Some(VENDOR));
        reply.body["version"]
            .as_u64()
            .unwrap_or_else(|| panic!("{}", reply.body))
    }

    pub fn transition(&self, case: &str, actor: &str, action: &str, payload: Value) -> Reply {
        let version = self.version(case);
        self.post(
            &format!("/cases/{case}/transitions"),
            Some(actor),
            &json!({"action": action, "payload": payload, "expected_version": version}),
        )
    }

    pub fn must(&self, case: &str, actor: &str, action: &str, payload: Value) -> Value {
        let reply = self.transition(case, actor, action, payload);
        assert!(
            reply.ok(),
            "{action} by {actor}: {} {}",
            reply.status,
            reply.body
        );
        reply.body
    }
}

impl Drop for Harness {
    fn drop(&mut self) {
        self.stop();
    }
}

pub fn safety_report() -> Value {
    json!({
        "model_ref": {"name": testing::SAMPLE_MODEL, "version": testing::SAMPLE_COMMIT},
        "claimed_track": "safety",
        "impact": {
            "confidentiality_loss": false,
            "integrity_loss": false,
            "availability_loss": false,
            "harm_categories": ["harmful_content"],
            "within_declared_use": true,
            "categories": [testing::SAMPLE_USE],
        },
        "narrative": "Demeaning replies to users who mention their accent.",
        "evidence": {"n": 100, "k": 30, "sampling_protocol": "uniform over 100 seeded prompts"},
    })
}

pub fn security_report() -> Value {
    json!({
        "model_ref": {"name": testing::SAMPLE_MODEL, "version": testing::SAMPLE_COMMIT},
        "claimed_track": "security",
        "impact": {
            "confidentiality_loss": true,
            "integrity_loss": false,
            "availability_loss": false,
            "harm_categories": [],
            "within_declared_use": true,
        },
        "narrative": "System prompt disclosed through a crafted prefix.",
    })
}

pub fn ambiguous_report() -> Value {
    let mut report = safety_report();
    report["claimed_track"] = json!("unknown");
    report["impact"]["integrity_loss"] = json!(true);
    report
}

pub fn cfe_details() -> Value {
    json!({
        "title": "Demeaning replies",
        "affected_uses": [testing::SAMPLE_USE],
        "affected_lineage": [testing::SAMPLE_COMMIT],
        "remediating_commits": ["safety-tune-1"],
    })
}

pub fn advisory_details() -> Value {
    json!({"title": "Demeaning replies in acme-chat", "summary": "Upgrade to safety-tune-1.", "vex_ref": "hex-external-1"})
}

/// A `fixed` statement for the case's CFE, recorded by the vendor.
pub fn fixed_statement(cfe_id: &str, statement_id: &str) -> Value {
    json!({
        "statement_id": statement_id,
        "cfe_id": cfe_id,
        "deployment_ref": "acme-chat-prod",
        "subcomponent": {"commit": "safety-tune-1", "lifecycle_stage": "fine_tuning", "source": "acme-chat-prod"},
        "status": "fixed",
        "action_statement": "Deploy safety-tune-1.",
        "issued_at": Utc::now().to_rfc3339(),
    })
}

pub type Node = (Track, CaseState);
pub type Step = (Action, Role, Option<Track>);

pub fn actor_of(role: Role) -> &'static str {
    match role {
        Role::Reporter => REPORTER,
        Role::Vendor => VENDOR,
        Role::Committee => "committee-1",
        Role::Adjudicator => "adjudicator-1",
        _ => "consumer-1",
    }
}

/// Shortest action path from intake to every reachable node.
pub fn paths() -> BTreeMap<Node, (Track, Vec<Step>)> {
    let mut out = BTreeMap::new();
    let mut queue = VecDeque::new();
    for track in Track::ALL {
        queue.push_back(((*track, CaseState::Submitted), *track, Vec::<Step>::new()));
    }
    while let Some((node, origin, path)) = queue.pop_front() {
        if out.contains_key(&node) {
            continue;
        }
        out.insert(node, (origin, path.clone()));
        for rule in TRANSITIONS.iter().filter(|r| (r.track, r.from) == node) {
            let targets: Vec<Option<Track>> = if rule.payload == PayloadKind::Track {
                [Track::Safety, Track::Security]
                    .into_iter()
                    .filter(|t| *t != node.0)
                    .map(Some)
                    .collect()
            } else {
                vec![None]
            };
            for target in targets {
                let mut next = path.clone();
                next.push((rule.action, rule.roles[0], target));
                queue.push_back(((target.unwrap_or(node.0), rule.to), origin, next));
            }
        }
    }
    out
}

pub fn report_for(track: Track) -> Value {
    match track {
        Track::Safety => safety_report(),
        Track::Security => security_report(),
        Track::Ambiguous => ambiguous_report(),
    }
}

/// A payload the action accepts on this case, creating any prerequisite.
pub fn payload_for(
    h: &Harness,
    case: &str,
    action: Action,
    target: Option<Track>,
    counter: &mut u32,
) -> Value {
    let view = h.get(&format!("/cases/{case}"), Some("committee-1")).body;
    let track = view["track"].as_str().unwrap_or_default().to_string();
    match action {
        Action::Reject | Action::CloseInvalid | Action::Dispute | Action::DenyAppeal => {
            json!({"reason": "not reproducible"})
        }
        Action::ReassignTrack => {
            let other = if track == "safety" {
                Track::Security
            } else {
                Track::Safety
            };
            json!({"track": target.unwrap_or(other)})
        }
        Action::AssignCfe => cfe_details(),
        Action::Publish => advisory_details(),
        Action::GrantAppeal => json!({"resolution": "appeal upheld"}),
        Action::Fix if track == "safety" => match view["cfe_id"]
            .as_str()
            .filter(|_| view["state"] == "published")
        {
            Some(cfe) => {
                *counter += 1;
                let id = format!("hex-{case}-{counter}");
                let current = h.get(&format!("/hex/statements?cfe_id={cfe}"), None).body;
                let mut statement = fixed_statement(cfe, &id);
                if let Some(head) = current["statements"].as_array().and_then(|s| s.last()) {
                    statement["supersedes"] = head["statement_id"].clone();
                }
                let reply = h.post("/hex/statements", Some(VENDOR), &statement);
                assert!(reply.ok(), "{}", reply.body);
                json!({"hex_statement_id": id})
            }
            None => json!({"hex_statement_id": "none"}),
        },
        Action::Fix => json!({"vex_ref": "hex-external-2"}),
        _ => json!({}),
    }
}

pub fn drive(h: &Harness, origin: Track, path: &[Step], counter: &mut u32) -> String {
    let case = h.submit(&report_for(origin));
    for (action, role, target) in path {
        let payload = payload_for(h, &case, *action, *target, counter);
        h.must(&case, actor_of(*role), action.as_str(), payload);
    }
    case
}
