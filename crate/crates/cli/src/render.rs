//! Human-readable renderings. `--json` bypasses all of this.

use std::fmt::Write as _;

use hazreg_core::formats::Finding;
use serde_json::Value;

use crate::Failure;

fn text(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

pub fn pretty(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(value).unwrap_or_default();
    out.push('\n');
    out
}

pub fn model_ref(value: &Value) -> String {
    format!("{}@{}", text(&value["name"]), text(&value["version"]))
}

pub fn findings(findings: &[Finding]) -> String {
    if findings.is_empty() {
        return "no findings\n".into();
    }
    findings
        .iter()
        .map(|f| {
            format!(
                "{} {} {}: {}\n",
                if f.is_error() { "error" } else { "warning" },
                f.code,
                if f.path.is_empty() { "/" } else { &f.path },
                f.message
            )
        })
        .collect()
}

pub fn case_line(case: &Value) -> String {
    format!(
        "{} {} {} (version {})\n",
        text(&case["case_id"]),
        text(&case["track"]),
        text(&case["state"]),
        text(&case["version"])
    )
}

pub fn case_table(cases: &Value) -> String {
    let rows = cases.as_array().cloned().unwrap_or_default();
    if rows.is_empty() {
        return "no visible cases\n".into();
    }
    let mut out = String::new();
    for case in rows {
        let actions: Vec<String> = case["actions"]
            .as_array()
            .map(|a| a.iter().map(text).collect())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{:<8} {:<9} {:<20} {:<16} {}",
            text(&case["case_id"]),
            text(&case["track"]),
            text(&case["state"]),
            text(&case["cfe_id"]),
            actions.join(",")
        );
    }
    out
}

pub fn actions(value: &Value) -> String {
    let list: Vec<String> = value["actions"]
        .as_array()
        .map(|a| a.iter().map(text).collect())
        .unwrap_or_default();
    format!(
        "{} is {} at version {}; you may: {}\n",
        text(&value["case_id"]),
        text(&value["state"]),
        text(&value["version"]),
        if list.is_empty() {
            "nothing".into()
        } else {
            list.join(", ")
        }
    )
}

pub fn adjudication(value: &Value) -> String {
    let report = &value["report"];
    let mut out = format!("recommendation: {}\n", text(&report["recommendation"]));
    for key in ["lower_bound", "p_value", "threshold", "verdict"] {
        if !report[key].is_null() {
            let _ = writeln!(out, "  {key}: {}", text(&report[key]));
        }
    }
    out
}

pub fn advisories(value: &Value) -> String {
    let mut out = String::new();
    for advisory in value["advisories"].as_array().into_iter().flatten() {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            text(&advisory["advisory_id"]),
            text(&advisory["published_at"]),
            text(&advisory["record_uri"]),
            text(&advisory["title"])
        );
    }
    if out.is_empty() {
        out.push_str("no advisories\n");
    }
    if let Some(next) = value["next_page"].as_str() {
        let _ = writeln!(out, "more: --page {next}");
    }
    out
}

pub fn statements(value: &Value) -> String {
    let mut out = String::new();
    for s in value.as_array().into_iter().flatten() {
        let _ = write!(
            out,
            "{} {} {} {}",
            text(&s["statement_id"]),
            text(&s["deployment_ref"]),
            text(&s["subcomponent"]["commit"]),
            text(&s["status"])
        );
        if !s["justification"].is_null() {
            let _ = write!(out, " ({})", text(&s["justification"]));
        }
        out.push('\n');
    }
    if out.is_empty() {
        out.push_str("no statements\n");
    }
    out
}

pub fn failure(failure: &Failure) -> String {
    match failure {
        Failure::Api { status, body } => {
            let error = &body["error"];
            let mut out = format!(
                "error: {} ({status}): {}\n",
                text(&error["code"]),
                text(&error["message"])
            );
            if let Ok(list) = serde_json::from_value::<Vec<Finding>>(error["findings"].clone()) {
                if !list.is_empty() {
                    out.push_str(&findings(&list));
                }
            }
            out
        }
        Failure::Transport(message) => format!("error: transport: {message}\n"),
        Failure::Usage(message) => format!("error: {message}\n"),
    }
}
