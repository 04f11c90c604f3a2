//! Collect-all reader over a parsed JSON tree. Every accessor records a
//! finding instead of bailing out, so a single pass reports every violation
//! in a document.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde_json::{Map, Value};

use super::finding::{Finding, FindingCode};
use super::FormatError;

pub(crate) fn pointer(base: &str, key: &str) -> String {
    format!("{base}/{}", key.replace('~', "~0").replace('/', "~1"))
}

pub(crate) fn json_type(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

pub(crate) fn parse_json(bytes: &[u8]) -> Result<Value, FormatError> {
    serde_json::from_slice(bytes).map_err(|err| FormatError::Syntax(err.to_string()))
}

#[derive(Clone)]
pub(crate) struct Obj<'a> {
    pub map: &'a Map<String, Value>,
    pub path: String,
}

#[derive(Default)]
pub(crate) struct Reader {
    findings: Vec<Finding>,
}

impl Reader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, code: FindingCode, path: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding::new(code, path, message));
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(Finding::is_error)
    }

    /// Returns the value when no error-severity finding was recorded.
    pub fn finish<T>(self, value: Option<T>) -> Result<T, FormatError> {
        match value {
            Some(value) if !self.has_errors() => Ok(value),
            _ => {
                debug_assert!(
                    !self.findings.is_empty(),
                    "a missing value must leave a finding"
                );
                Err(FormatError::Schema(self.findings))
            }
        }
    }

    pub fn as_object<'a>(&mut self, value: &'a Value, path: &str) -> Option<Obj<'a>> {
        match value {
            Value::Object(map) => Some(Obj {
                map,
                path: path.to_string(),
            }),
            other => {
                self.wrong_type(path, "object", other);
                None
            }
        }
    }

    pub fn wrong_type(&mut self, path: &str, expected: &str, found: &Value) {
        self.push(
            FindingCode::WrongType,
            path,
            format!("expected {expected}, found {}", json_type(found)),
        );
    }

    /// Present and non-null, else MISSING_REQUIRED_FIELD.
    pub fn field<'a>(&mut self, obj: &Obj<'a>, key: &str) -> Option<&'a Value> {
        match obj.map.get(key) {
            Some(Value::Null) | None => {
                self.push(
                    FindingCode::MissingRequiredField,
                    pointer(&obj.path, key),
                    format!("missing required field `{key}`"),
                );
                None
            }
            Some(value) => Some(value),
        }
    }

    pub fn opt_field<'a>(&self, obj: &Obj<'a>, key: &str) -> Option<&'a Value> {
        match obj.map.get(key) {
            Some(Value::Null) | None => None,
            Some(value) => Some(value),
        }
    }

    pub fn value_string(&mut self, value: &Value, path: &str) -> Option<String> {
        match value {
            Value::String(text) => Some(text.clone()),
            other => {
                self.wrong_type(path, "string", other);
                None
            }
        }
    }

    /// Required, non-blank string.
    pub fn string(&mut self, obj: &Obj<'_>, key: &str) -> Option<String> {
        let value = self.field(obj, key)?;
        let path = pointer(&obj.path, key);
        let text = self.value_string(value, &path)?;
        if text.trim().is_empty() {
            self.push(
                FindingCode::EmptyField,
                path,
                format!("`{key}` must not be empty"),
            );
            return None;
        }
        Some(text)
    }

    /// Required string that may be empty.
    pub fn text(&mut self, obj: &Obj<'_>, key: &str) -> Option<String> {
        let value = self.field(obj, key)?;
        self.value_string(value, &pointer(&obj.path, key))
    }

    /// Optional string. `Err(())` means a finding was recorded.
    pub fn opt_string(&mut self, obj: &Obj<'_>, key: &str) -> Result<Option<String>, ()> {
        match self.opt_field(obj, key) {
            None => Ok(None),
            Some(value) => self
                .value_string(value, &pointer(&obj.path, key))
                .map(Some)
                .ok_or(()),
        }
    }

    pub fn boolean(&mut self, obj: &Obj<'_>, key: &str) -> Option<bool> {
        match self.field(obj, key)? {
            Value::Bool(flag) => Some(*flag),
            other => {
                self.wrong_type(&pointer(&obj.path, key), "boolean", other);
                None
            }
        }
    }

    pub fn opt_boolean(&mut self, obj: &Obj<'_>, key: &str, default: bool) -> Option<bool> {
        match self.opt_field(obj, key) {
            None => Some(default),
            Some(Value::Bool(flag)) => Some(*flag),
            Some(other) => {
                self.wrong_type(&pointer(&obj.path, key), "boolean", other);
                None
            }
        }
    }

    pub fn uint(&mut self, obj: &Obj<'_>, key: &str) -> Option<u64> {
        let value = self.field(obj, key)?;
        match value.as_u64() {
            Some(number) => Some(number),
            None => {
                self.wrong_type(&pointer(&obj.path, key), "non-negative integer", value);
                None
            }
        }
    }

    pub fn object<'a>(&mut self, obj: &Obj<'a>, key: &str) -> Option<Obj<'a>> {
        let value = self.field(obj, key)?;
        self.as_object(value, &pointer(&obj.path, key))
    }

    pub fn array<'a>(&mut self, obj: &Obj<'a>, key: &str) -> Option<&'a Vec<Value>> {
        let value = self.field(obj, key)?;
        match value {
            Value::Array(items) => Some(items),
            other => {
                self.wrong_type(&pointer(&obj.path, key), "array", other);
                None
            }
        }
    }

    fn string_items<C: FromIterator<String>>(&mut self, items: &[Value], path: &str) -> Option<C> {
        let mut ok = true;
        let mut out = Vec::with_capacity(items.len());
        for (idx, item) in items.iter().enumerate() {
            let item_path = pointer(path, &idx.to_string());
            match self.value_string(item, &item_path) {
                Some(text) if text.trim().is_empty() => {
                    self.push(
                        FindingCode::EmptyField,
                        item_path,
                        "list entries must not be empty",
                    );
                    ok = false;
                }
                Some(text) => out.push(text),
                None => ok = false,
            }
        }
        ok.then(|| out.into_iter().collect())
    }

    pub fn string_list(&mut self, obj: &Obj<'_>, key: &str) -> Option<Vec<String>> {
        let items = self.array(obj, key)?;
        self.string_items(items, &pointer(&obj.path, key))
    }

    /// Optional list of strings, defaulting to empty.
    pub fn opt_string_set(&mut self, obj: &Obj<'_>, key: &str) -> Option<BTreeSet<String>> {
        match self.opt_field(obj, key) {
            None => Some(BTreeSet::new()),
            Some(Value::Array(items)) => self.string_items(items, &pointer(&obj.path, key)),
            Some(other) => {
                self.wrong_type(&pointer(&obj.path, key), "array", other);
                None
            }
        }
    }

    pub fn number_map(&mut self, obj: &Obj<'_>, key: &str) -> Option<BTreeMap<String, f64>> {
        let value = self.field(obj, key)?;
        let path = pointer(&obj.path, key);
        let map = match value {
            Value::Object(map) => map,
            other => {
                self.wrong_type(&path, "object", other);
                return None;
            }
        };
        let mut ok = true;
        let mut out = BTreeMap::new();
        for (name, entry) in map {
            match entry.as_f64() {
                Some(number) => {
                    out.insert(name.clone(), number);
                }
                None => {
                    self.wrong_type(&pointer(&path, name), "number", entry);
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    pub fn timestamp(&mut self, obj: &Obj<'_>, key: &str) -> Option<DateTime<Utc>> {
        let value = self.field(obj, key)?;
        let path = pointer(&obj.path, key);
        let text = self.value_string(value, &path)?;
        self.parse_timestamp(&text, &path)
    }

    pub fn opt_timestamp(&mut self, obj: &Obj<'_>, key: &str) -> Result<Option<DateTime<Utc>>, ()> {
        match self.opt_string(obj, key)? {
            None => Ok(None),
            Some(text) => self
                .parse_timestamp(&text, &pointer(&obj.path, key))
                .map(Some)
                .ok_or(()),
        }
    }

    fn parse_timestamp(&mut self, text: &str, path: &str) -> Option<DateTime<Utc>> {
        match DateTime::parse_from_rfc3339(text) {
            Ok(at) => Some(at.with_timezone(&Utc)),
            Err(err) => {
                self.push(
                    FindingCode::InvalidTimestamp,
                    path,
                    format!("`{text}`: {err}"),
                );
                None
            }
        }
    }

    /// Required token parsed via `FromStr`; a parse failure records `code`.
    pub fn token<T: FromStr>(&mut self, obj: &Obj<'_>, key: &str, code: FindingCode) -> Option<T> {
        let value = self.field(obj, key)?;
        let path = pointer(&obj.path, key);
        let text = self.value_string(value, &path)?;
        self.parse_token(&text, &path, code)
    }

    pub fn opt_token<T: FromStr>(
        &mut self,
        obj: &Obj<'_>,
        key: &str,
        code: FindingCode,
    ) -> Result<Option<T>, ()> {
        match self.opt_string(obj, key)? {
            None => Ok(None),
            Some(text) => self
                .parse_token(&text, &pointer(&obj.path, key), code)
                .map(Some)
                .ok_or(()),
        }
    }

    pub fn parse_token<T: FromStr>(
        &mut self,
        text: &str,
        path: &str,
        code: FindingCode,
    ) -> Option<T> {
        match text.parse() {
            Ok(value) => Some(value),
            Err(_) => {
                self.push(code, path, format!("unrecognised value `{text}`"));
                None
            }
        }
    }
}
