//! Identifier sources: the registry-wide CFE counter and the CVE client.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::domain::ModelRef;
use crate::formats::CfeId;

/// Strictly monotone, gap-free CFE sequences, one per year.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfeAllocator {
    last: BTreeMap<u16, u64>,
}

impl CfeAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    /// The id the next allocation for `year` will produce.
    pub fn peek(&self, year: u16) -> CfeId {
        CfeId {
            year,
            sequence: self.last.get(&year).copied().unwrap_or(0) + 1,
        }
    }

    pub fn allocate(&mut self, year: u16) -> CfeId {
        let id = self.peek(year);
        self.last.insert(year, id.sequence);
        id
    }

    /// Accept an id seen during replay; it must be exactly the next one.
    pub fn observe(&mut self, id: CfeId) -> Result<(), EngineError> {
        let expected = self.peek(id.year);
        if id != expected {
            return Err(EngineError::ReplayMismatch(format!(
                "allocated {id} but the sequence expects {expected}"
            )));
        }
        self.last.insert(id.year, id.sequence);
        Ok(())
    }

    pub fn last(&self, year: u16) -> Option<u64> {
        self.last.get(&year).copied()
    }
}

/// External CVE assignment for vendors that are not numbering authorities.
pub trait CveClient: Send + Sync {
    fn request_cve(&mut self, case_id: &str, model: &ModelRef) -> String;
}

/// Deterministic stand-in that hands out `CVE-STUB-<n>`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubCveClient {
    issued: u64,
}

impl StubCveClient {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn issued(&self) -> u64 {
        self.issued
    }

    /// Advance past an id issued earlier (replay).
    pub fn observe(&mut self, cve_ref: &str) {
        if let Some(n) = cve_ref
            .strip_prefix("CVE-STUB-")
            .and_then(|n| n.parse::<u64>().ok())
        {
            self.issued = self.issued.max(n);
        }
    }
}

impl CveClient for StubCveClient {
    fn request_cve(&mut self, _case_id: &str, _model: &ModelRef) -> String {
        self.issued += 1;
        format!("CVE-STUB-{}", self.issued)
    }
}
