//! Canonical JSON encoding.
//!
//! Rules:
//! - object keys sorted by their UTF-8 bytes
//! - no whitespace outside strings
//! - integral numbers inside the exactly representable range are written as
//!   integers, every other number uses the shortest round-trip form
//! - strings use the minimal JSON escape set

use serde::Serialize;
use serde_json::Value;

use super::digest::Digest;
use super::FormatError;

/// Largest magnitude at which every integer is exactly representable in f64.
const MAX_SAFE_INTEGER: f64 = 9_007_199_254_740_992.0;

/// The document kinds the registry exchanges.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    ModelCard,
    CfeRecord,
    HexStatement,
    TaxonomyDescriptor,
    Advisory,
}

impl DocumentKind {
    pub const ALL: [DocumentKind; 5] = [
        DocumentKind::ModelCard,
        DocumentKind::CfeRecord,
        DocumentKind::HexStatement,
        DocumentKind::TaxonomyDescriptor,
        DocumentKind::Advisory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DocumentKind::ModelCard => "model_card",
            DocumentKind::CfeRecord => "cfe_record",
            DocumentKind::HexStatement => "hex_statement",
            DocumentKind::TaxonomyDescriptor => "taxonomy_descriptor",
            DocumentKind::Advisory => "advisory",
        }
    }

    /// Conventional file suffix for documents of this kind.
    pub fn file_suffix(self) -> &'static str {
        match self {
            DocumentKind::ModelCard => ".modelcard.json",
            DocumentKind::CfeRecord => ".cfe.json",
            DocumentKind::HexStatement => ".hex.json",
            DocumentKind::TaxonomyDescriptor => ".taxonomy.json",
            DocumentKind::Advisory => ".advisory.json",
        }
    }
}

/// A document body tagged with its kind.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDocument {
    pub kind: DocumentKind,
    pub body: Value,
}

impl CanonicalDocument {
    pub fn new(kind: DocumentKind, body: Value) -> Self {
        Self { kind, body }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serialize_canonical(&self.body)
    }

    pub fn digest(&self) -> Digest {
        Digest::of(&self.to_bytes())
    }
}

/// Serialize a JSON tree canonically.
pub fn serialize_canonical(value: &Value) -> Vec<u8> {
    let mut out = Vec::with_capacity(128);
    write_value(value, &mut out);
    out
}

/// Serialize any serde value canonically.
pub fn to_canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, FormatError> {
    let tree = serde_json::to_value(value)
        .map_err(|err| FormatError::UnsupportedValue(err.to_string()))?;
    Ok(serialize_canonical(&tree))
}

pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> Result<String, FormatError> {
    let bytes = to_canonical_bytes(value)?;
    // the writer only emits valid UTF-8
    Ok(String::from_utf8(bytes).expect("canonical writer emits UTF-8"))
}

fn write_value(value: &Value, out: &mut Vec<u8>) {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Number(number) => write_number(number, out),
        Value::String(text) => write_string(text, out),
        Value::Array(items) => {
            out.push(b'[');
            for (idx, item) in items.iter().enumerate() {
                if idx > 0 {
                    out.push(b',');
                }
                write_value(item, out);
            }
            out.push(b']');
        }
        Value::Object(map) => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
            out.push(b'{');
            for (idx, (key, item)) in entries.into_iter().enumerate() {
                if idx > 0 {
                    out.push(b',');
                }
                write_string(key, out);
                out.push(b':');
                write_value(item, out);
            }
            out.push(b'}');
        }
    }
}

fn write_number(number: &serde_json::Number, out: &mut Vec<u8>) {
    if let Some(value) = number.as_u64() {
        out.extend_from_slice(value.to_string().as_bytes());
    } else if let Some(value) = number.as_i64() {
        out.extend_from_slice(value.to_string().as_bytes());
    } else if let Some(value) = number.as_f64() {
        if value.fract() == 0.0 && value.abs() < MAX_SAFE_INTEGER {
            // also folds -0.0 into 0
            let integral = value as i64;
            out.extend_from_slice(integral.to_string().as_bytes());
        } else {
            let text = serde_json::to_string(&value).expect("finite f64 always serializes");
            out.extend_from_slice(text.as_bytes());
        }
    }
}

fn write_string(text: &str, out: &mut Vec<u8>) {
    let escaped = serde_json::to_string(text).expect("strings always serialize");
    out.extend_from_slice(escaped.as_bytes());
}
