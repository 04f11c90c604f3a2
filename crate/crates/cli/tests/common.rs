//! In-process CLI invocation against a served registry.
#![allow(dead_code)]

use std::collections::BTreeMap;

use hazreg_cli::run_cli;

#[path = "../../service/tests/common/mod.rs"]
mod harness;
pub use harness::*;

pub struct Run {
    pub code: i32,
    pub out: String,
    pub err: String,
}

impl Run {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.out).unwrap_or_else(|e| panic!("not JSON ({e}): {}", self.out))
    }

    pub fn error_json(&self) -> serde_json::Value {
        serde_json::from_str(&self.err).unwrap_or_else(|e| panic!("not JSON ({e}): {}", self.err))
    }
}

pub fn run(args: &[&str], env: &BTreeMap<String, String>) -> Run {
    let mut argv = vec!["hazreg"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli(argv, env, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

/// Run as `actor` against the harness's server.
pub fn run_as(h: &Harness, actor: &str, args: &[&str]) -> Run {
    let token = h
        .tokens
        .get(actor)
        .cloned()
        .unwrap_or_else(|| actor.to_string());
    let mut full = vec!["--server", h.url.as_str(), "--token", token.as_str()];
    full.extend_from_slice(args);
    run(&full, &BTreeMap::new())
}

pub fn write_json(dir: &std::path::Path, name: &str, value: &serde_json::Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}
