//! Registry state and every state-changing operation.
//!
//! Writers are serialized by the event-log mutex: each operation validates
//! against the current state, appends its event durably, then folds the
//! event into the in-memory state through the same code path that replays
//! the log at startup. Readers take a short read lock on the state.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use base64::engine::general_purpose::{STANDARD, URL_SAFE_NO_PAD};
use base64::Engine as _;
use chrono::{DateTime, Datelike, Utc};
use hazreg_core::domain::{
    Actor, Advisory, CfeRecord, EvidenceSet, ModelCard, ModelRef, Report, Role, Track,
};
use hazreg_core::engine::{
    self, actions_for, effective_roles, embargo_view, Action, CaseFile, CaseView, CfeAllocator,
    CveClient, EngineError, StubCveClient,
};
use hazreg_core::formats::{
    check_model_card, parse_hex, parse_report_submission, to_canonical_bytes, CfeId, Digest,
    Finding, FormatError, LintContext,
};
use hazreg_core::hex::{
    evaluate_exposure, hex_for_variants, DeploymentProfile, HexError, HexLedger, HexStatement,
    HexStatus, LineageGraph,
};
use hazreg_core::stats::{self, AdjudicationReport};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::storage::{
    BlobStore, EventLog, EventRecord, RegistryEvent, SnapshotStore, StorageError,
};
use crate::tokens::{AuthError, TokenStore, TokenStoreError};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(Utc::now)
}

/// Errors surfaced to API callers. Each maps to one HTTP status.
#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    Unauthorized(#[from] AuthError),
    #[error("{0}")]
    Forbidden(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{message}")]
    Conflict { code: &'static str, message: String },
    #[error("{message}")]
    Validation {
        code: &'static str,
        message: String,
        findings: Vec<Finding>,
    },
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::Unauthorized(AuthError::Expired(_)) => "token_expired",
            ApiError::Unauthorized(_) => "unauthorized",
            ApiError::Forbidden(_) => "role_not_permitted",
            ApiError::NotFound(_) => "not_found",
            ApiError::Conflict { code, .. } | ApiError::Validation { code, .. } => code,
            ApiError::BadRequest(_) => "bad_request",
            ApiError::Internal(_) => "internal",
        }
    }

    fn invalid(code: &'static str, message: impl Into<String>) -> Self {
        ApiError::Validation {
            code,
            message: message.into(),
            findings: Vec::new(),
        }
    }

    fn conflict(code: &'static str, message: impl Into<String>) -> Self {
        ApiError::Conflict {
            code,
            message: message.into(),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(err: EngineError) -> Self {
        let message = err.to_string();
        match err {
            EngineError::UnknownModel(_) => ApiError::invalid("unknown_model", message),
            EngineError::IllegalTransition { .. } => {
                ApiError::conflict("illegal_transition", message)
            }
            EngineError::RoleNotPermitted { .. } => ApiError::Forbidden(message),
            EngineError::StaleVersion { .. } => ApiError::conflict("stale_version", message),
            EngineError::PayloadInvalid(_) => ApiError::invalid("payload_invalid", message),
            EngineError::MissingIdentifier(_) => ApiError::invalid("missing_identifier", message),
            EngineError::IllegalState(_) => ApiError::conflict("illegal_state", message),
            EngineError::ReplayMismatch(_) => ApiError::Internal(message),
        }
    }
}

impl From<FormatError> for ApiError {
    fn from(err: FormatError) -> Self {
        let message = err.to_string();
        ApiError::Validation {
            code: "invalid_document",
            findings: err.findings().to_vec(),
            message,
        }
    }
}

impl From<HexError> for ApiError {
    fn from(err: HexError) -> Self {
        let message = err.to_string();
        match err {
            HexError::Invalid(findings) => ApiError::Validation {
                code: "invalid_document",
                message,
                findings,
            },
            HexError::SupersedeOrderViolation { .. } | HexError::ChainMismatch { .. } => {
                ApiError::conflict("chain_mismatch", message)
            }
            HexError::CfeNotActionable(_) => ApiError::conflict("illegal_state", message),
            HexError::CyclicLineage(_) | HexError::InvalidProfile(_) => {
                ApiError::invalid("payload_invalid", message)
            }
        }
    }
}

impl From<StorageError> for ApiError {
    fn from(err: StorageError) -> Self {
        ApiError::Internal(err.to_string())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OpenError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Tokens(#[from] TokenStoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegisteredCard {
    pub vendor_id: String,
    pub card: ModelCard,
}

/// In-memory projection of the event log.
#[derive(Debug, Default)]
struct State {
    cards: BTreeMap<ModelRef, RegisteredCard>,
    cases: BTreeMap<String, CaseFile>,
    case_order: Vec<String>,
    cfe_cases: BTreeMap<CfeId, String>,
    cfe_ids: CfeAllocator,
    cve: StubCveClient,
    advisory_seq: BTreeMap<i32, u64>,
    hex: HexLedger,
    hex_recorded_by: BTreeMap<String, String>,
    last_seq: u64,
}

fn advisory_parts(id: &str) -> Option<(i32, u64)> {
    let rest = id.strip_prefix("ADV-")?;
    let (year, seq) = rest.split_once('-')?;
    Some((year.parse().ok()?, seq.parse().ok()?))
}

impl State {
    /// Fold one verified record into the state.
    fn apply(&mut self, record: &EventRecord) -> Result<(), String> {
        if record.global_seq != self.last_seq + 1 {
            return Err(format!(
                "expected global_seq {}, got {}",
                self.last_seq + 1,
                record.global_seq
            ));
        }
        match &record.event {
            RegistryEvent::ModelCardRegistered { vendor_id, card } => {
                self.cards.insert(
                    card.model_ref(),
                    RegisteredCard {
                        vendor_id: vendor_id.clone(),
                        card: card.clone(),
                    },
                );
            }
            RegistryEvent::Case { audit_event } => {
                let case_id = record
                    .case_id
                    .as_deref()
                    .ok_or("case event without case_id")?;
                let previous = self.cases.get(case_id).cloned();
                let previous = previous.as_ref();
                let model_ref = match previous {
                    Some(case) => case.model_ref.clone(),
                    None => {
                        let intake: engine::SubmitPayload = serde_json::from_value(
                            audit_event.payload.clone().unwrap_or(Value::Null),
                        )
                        .map_err(|e| format!("unreadable intake payload: {e}"))?;
                        if intake.case_id != case_id {
                            return Err(format!(
                                "intake for {} logged under {case_id}",
                                intake.case_id
                            ));
                        }
                        intake.report.model_ref
                    }
                };
                let card = &self
                    .cards
                    .get(&model_ref)
                    .ok_or_else(|| {
                        format!("case {case_id} refers to unregistered model {model_ref}")
                    })?
                    .card;
                let next =
                    engine::replay_event(previous, audit_event, card).map_err(|e| e.to_string())?;
                self.observe_identifiers(previous, &next)?;
                if previous.is_none() {
                    self.case_order.push(case_id.to_string());
                }
                self.cases.insert(case_id.to_string(), next);
            }
            RegistryEvent::HexStatementRecorded {
                recorded_by,
                statement,
            } => {
                self.hex
                    .record(statement.clone())
                    .map_err(|e| e.to_string())?;
                self.hex_recorded_by
                    .insert(statement.statement_id.clone(), recorded_by.clone());
            }
        }
        self.last_seq = record.global_seq;
        Ok(())
    }

    fn observe_identifiers(
        &mut self,
        previous: Option<&CaseFile>,
        next: &CaseFile,
    ) -> Result<(), String> {
        let before = |f: fn(&CaseFile) -> Option<String>| previous.and_then(f);
        if let Some(id) = next.cfe_id {
            if previous.and_then(|c| c.cfe_id) != Some(id) {
                self.cfe_ids.observe(id).map_err(|e| e.to_string())?;
                self.cfe_cases.insert(id, next.case_id.clone());
            }
        }
        if let Some(cve) = &next.cve_ref {
            if before(|c| c.cve_ref.clone()).as_ref() != Some(cve) {
                self.cve.observe(cve);
            }
        }
        if let Some(adv) = &next.advisory_id {
            if before(|c| c.advisory_id.clone()).as_ref() != Some(adv) {
                if let Some((year, seq)) = advisory_parts(adv) {
                    let last = self.advisory_seq.entry(year).or_default();
                    *last = (*last).max(seq);
                }
            }
        }
        Ok(())
    }

    fn next_case_id(&self) -> String {
        format!("C-{}", self.case_order.len() + 1)
    }

    fn next_advisory_id(&self, year: i32) -> String {
        let seq = self.advisory_seq.get(&year).copied().unwrap_or(0) + 1;
        format!("ADV-{year}-{seq:04}")
    }

    fn public_cfe(&self, id: CfeId) -> Option<&CaseFile> {
        let case = self.cases.get(self.cfe_cases.get(&id)?)?;
        let record = case.cfe_record.as_ref()?;
        record.status.is_public().then_some(case)
    }

    /// Canonical dump of everything the log determines.
    fn snapshot(&self) -> Value {
        let cases: Vec<&CaseFile> = self
            .case_order
            .iter()
            .filter_map(|id| self.cases.get(id))
            .collect();
        let years: BTreeMap<String, u64> = self
            .cfe_cases
            .keys()
            .map(|id| (id.year, self.cfe_ids.last(id.year).unwrap_or(0)))
            .map(|(year, last)| (year.to_string(), last))
            .collect();
        json!({
            "global_seq": self.last_seq,
            "cards": self.cards.values().collect::<Vec<_>>(),
            "cases": cases,
            "hex_statements": self.hex.iter().collect::<Vec<_>>(),
            "counters": {
                "cfe": years,
                "cve_issued": self.cve.issued(),
                "advisory": self.advisory_seq.iter().map(|(y, s)| (y.to_string(), *s)).collect::<BTreeMap<_, _>>(),
            },
        })
    }
}

/// Result of `POST /model-cards`.
#[derive(Debug, Clone, Serialize)]
pub struct CardOutcome {
    pub model_ref: Option<ModelRef>,
    pub digest: Digest,
    pub registered: bool,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRequest {
    pub action: String,
    #[serde(default)]
    pub payload: Value,
    pub expected_version: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceRequest {
    pub n: u64,
    pub k: u64,
    #[serde(default)]
    pub sampling_protocol: String,
    /// Raw prompt/output pairs, base64. Stored sealed, never returned.
    #[serde(default)]
    pub sealed_payload: Option<String>,
    #[serde(default)]
    pub expected_version: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HexEvaluateRequest {
    pub cfe_id: CfeId,
    pub profiles: Vec<DeploymentProfile>,
    #[serde(default)]
    pub lineage: Option<LineageGraph>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseSummary {
    pub case_id: String,
    pub track: Track,
    pub state: engine::CaseState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfe_id: Option<CfeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub severity_bracket: Option<hazreg_core::domain::Bracket>,
    pub actions: BTreeSet<Action>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdvisoryPage {
    pub advisories: Vec<Advisory>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_page: Option<String>,
}

pub struct Registry {
    config: Config,
    clock: Clock,
    lint: LintContext,
    tokens: TokenStore,
    blobs: BlobStore,
    snapshots: SnapshotStore,
    log: Mutex<EventLog>,
    state: RwLock<State>,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("data_dir", &self.config.data_dir)
            .finish()
    }
}

impl Registry {
    /// Open the data directory and rebuild state from the event log.
    pub fn open(config: Config, clock: Clock) -> Result<Self, OpenError> {
        let (log, records) = EventLog::open(&config.data_dir)?;
        let snapshots = SnapshotStore::open(&config.data_dir)?;
        let checkpoints: BTreeSet<u64> = snapshots.list()?.into_iter().collect();
        let mut state = State::default();
        for record in &records {
            state
                .apply(record)
                .map_err(|reason| StorageError::Corruption {
                    line: record.global_seq as usize,
                    reason,
                })?;
            if checkpoints.contains(&record.global_seq) {
                let stored = snapshots.read(record.global_seq)?.unwrap_or_default();
                if stored != hazreg_core::formats::serialize_canonical(&state.snapshot()) {
                    return Err(StorageError::SnapshotMismatch {
                        seq: record.global_seq,
                    }
                    .into());
                }
            }
        }
        let lint = LintContext::default().with_allowlist(config.license_allowlist.clone());
        Ok(Self {
            tokens: TokenStore::open(&config.data_dir)?,
            blobs: BlobStore::open(&config.data_dir)?,
            snapshots,
            log: Mutex::new(log),
            state: RwLock::new(state),
            lint,
            clock,
            config,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn tokens(&self) -> &TokenStore {
        &self.tokens
    }

    pub fn lint_context(&self) -> &LintContext {
        &self.lint
    }

    pub fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    pub fn authenticate(&self, header: Option<&str>) -> Result<Actor, ApiError> {
        Ok(self.tokens.authenticate(header, self.now())?)
    }

    pub fn last_seq(&self) -> u64 {
        self.state.read().last_seq
    }

    /// Canonical bytes of the full state; equal across restarts.
    pub fn snapshot_bytes(&self) -> Vec<u8> {
        hazreg_core::formats::serialize_canonical(&self.state.read().snapshot())
    }

    pub fn write_snapshot(&self) -> Result<std::path::PathBuf, ApiError> {
        let _writer = self.log.lock();
        let state = self.state.read();
        let bytes = hazreg_core::formats::serialize_canonical(&state.snapshot());
        Ok(self.snapshots.write(state.last_seq, &bytes)?)
    }

    /// Append under the writer lock, then fold into state.
    fn commit(
        &self,
        log: &mut EventLog,
        case_id: Option<String>,
        event: RegistryEvent,
    ) -> Result<u64, ApiError> {
        let record = log.append(case_id, event, self.now())?;
        let mut state = self.state.write();
        state.apply(&record).map_err(|reason| {
            ApiError::Internal(format!("committed event failed to apply: {reason}"))
        })?;
        let seq = record.global_seq;
        if self.config.snapshot_every > 0 && seq % self.config.snapshot_every == 0 {
            let bytes = hazreg_core::formats::serialize_canonical(&state.snapshot());
            self.snapshots.write(seq, &bytes)?;
        }
        Ok(seq)
    }

    fn commit_case(&self, log: &mut EventLog, case: &CaseFile) -> Result<CaseFile, ApiError> {
        let audit_event = case
            .audit
            .last()
            .cloned()
            .expect("cases always carry their intake event");
        self.commit(
            log,
            Some(case.case_id.clone()),
            RegistryEvent::Case { audit_event },
        )?;
        Ok(self.state.read().cases[&case.case_id].clone())
    }

    // ------------------------------------------------------------ model cards

    /// Lint a card; register it unless `dry_run` or it has errors.
    pub fn register_card(
        &self,
        actor: &Actor,
        bytes: &[u8],
        dry_run: bool,
    ) -> Result<CardOutcome, ApiError> {
        let (card, findings) = check_model_card(bytes, &self.lint);
        let mut outcome = CardOutcome {
            model_ref: card.as_ref().map(ModelCard::model_ref),
            digest: Digest::of(bytes),
            registered: false,
            findings,
        };
        if dry_run {
            return Ok(outcome);
        }
        if !actor.has_role(Role::Vendor) {
            return Err(ApiError::Forbidden(format!(
                "{} may not register model cards",
                actor.actor_id
            )));
        }
        let errors = outcome.findings.iter().any(Finding::is_error);
        let Some(card) = card.filter(|_| !errors) else {
            return Err(ApiError::Validation {
                code: "invalid_document",
                message: "model card has error findings".into(),
                findings: outcome.findings,
            });
        };
        let mut log = self.log.lock();
        if let Some(existing) = self.state.read().cards.get(&card.model_ref()) {
            if existing.card == card && existing.vendor_id == actor.actor_id {
                return Ok(outcome);
            }
            return Err(ApiError::conflict(
                "already_registered",
                format!("{} is already registered", card.model_ref()),
            ));
        }
        self.commit(
            &mut log,
            None,
            RegistryEvent::ModelCardRegistered {
                vendor_id: actor.actor_id.clone(),
                card,
            },
        )?;
        outcome.registered = true;
        Ok(outcome)
    }

    pub fn card(&self, model_ref: &ModelRef) -> Option<ModelCard> {
        self.state
            .read()
            .cards
            .get(model_ref)
            .map(|c| c.card.clone())
    }

    // ------------------------------------------------------------------ cases

    pub fn submit_report(&self, actor: &Actor, bytes: &[u8]) -> Result<CaseFile, ApiError> {
        if !actor.has_role(Role::Reporter) {
            return Err(ApiError::Forbidden(format!(
                "{} may not submit reports",
                actor.actor_id
            )));
        }
        let submission = parse_report_submission(bytes)?;
        let now = self.now();
        let mut log = self.log.lock();
        let (case_id, card, vendor_id) = {
            let state = self.state.read();
            let registered = state
                .cards
                .get(&submission.model_ref)
                .ok_or_else(|| EngineError::UnknownModel(submission.model_ref.clone()))?;
            (
                state.next_case_id(),
                registered.card.clone(),
                registered.vendor_id.clone(),
            )
        };
        let report = Report {
            reporter_id: actor.actor_id.clone(),
            model_ref: submission.model_ref,
            claimed_track: submission.claimed_track,
            impact: submission.impact,
            narrative: submission.narrative,
            evidence: submission.evidence.map(|ev| EvidenceSet {
                party: actor.actor_id.clone(),
                n: ev.n,
                k: ev.k,
                sampling_protocol: ev.sampling_protocol,
                sealed_payload_digest: None,
            }),
            reported_at: now,
        };
        let case = engine::submit_report(
            case_id,
            report,
            &card,
            vendor_id,
            self.config.embargo_days,
            now,
        )?;
        self.commit_case(&mut log, &case)
    }

    fn visible(&self, id: &str, actor: Option<&Actor>) -> Result<(CaseFile, CaseView), ApiError> {
        let case = self
            .state
            .read()
            .cases
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no case {id}")))?;
        let view = embargo_view(&case, actor);
        if view.is_hidden() {
            return Err(ApiError::NotFound(format!("no case {id}")));
        }
        Ok((case, view))
    }

    /// Only callers who see the whole case may change it.
    fn writable(&self, id: &str, actor: &Actor) -> Result<CaseFile, ApiError> {
        match self.visible(id, Some(actor))? {
            (case, CaseView::Full(_)) => Ok(case),
            _ => Err(ApiError::Forbidden(format!(
                "{} is not a party to {id}",
                actor.actor_id
            ))),
        }
    }

    pub fn case_view(&self, id: &str, actor: Option<&Actor>) -> Result<Value, ApiError> {
        let (_, view) = self.visible(id, actor)?;
        view.to_value()
            .ok_or_else(|| ApiError::Internal("view did not serialize".into()))
    }

    pub fn list_cases(&self, actor: Option<&Actor>) -> Vec<CaseSummary> {
        let state = self.state.read();
        state
            .case_order
            .iter()
            .filter_map(|id| state.cases.get(id))
            .filter_map(|case| {
                let full = match embargo_view(case, actor) {
                    CaseView::Hidden => return None,
                    CaseView::Public(_) => false,
                    CaseView::Full(_) => true,
                };
                Some(CaseSummary {
                    case_id: case.case_id.clone(),
                    track: case.track,
                    state: case.state,
                    version: full.then_some(case.version),
                    cfe_id: case.cfe_id.filter(|_| full || case.state.is_disclosed()),
                    severity_bracket: case.severity.as_ref().map(|s| s.bracket),
                    actions: match (full, actor) {
                        (true, Some(actor)) => actions_for(case, actor),
                        _ => BTreeSet::new(),
                    },
                })
            })
            .collect()
    }

    pub fn actions(&self, id: &str, actor: &Actor) -> Result<Value, ApiError> {
        let (case, _) = self.visible(id, Some(actor))?;
        let roles = effective_roles(&case, actor);
        Ok(json!({
            "case_id": case.case_id,
            "track": case.track,
            "state": case.state,
            "version": case.version,
            "roles": roles,
            "actions": actions_for(&case, actor),
        }))
    }

    pub fn transition(
        &self,
        id: &str,
        actor: &Actor,
        request: TransitionRequest,
    ) -> Result<CaseFile, ApiError> {
        let action: Action = request
            .action
            .parse()
            .map_err(|_| ApiError::BadRequest(format!("unknown action `{}`", request.action)))?;
        let now = self.now();
        let mut log = self.log.lock();
        let case = self.writable(id, actor)?;
        if !actions_for(&case, actor).contains(&action) {
            // Let the engine name the refusal before any payload is touched.
            let refusal = engine::apply_transition(
                &case,
                action,
                actor,
                &request.payload,
                request.expected_version,
                now,
            )
            .err()
            .unwrap_or(EngineError::IllegalTransition {
                state: case.state,
                action,
            });
            return Err(refusal.into());
        }
        let payload = self.complete_payload(&case, action, request.payload, now)?;
        let next = engine::apply_transition(
            &case,
            action,
            actor,
            &payload,
            request.expected_version,
            now,
        )?;
        self.commit_case(&mut log, &next)
    }

    /// Fill in what the registry itself assigns: identifiers, record
    /// locations, and the CVE when the vendor is not its own CNA.
    fn complete_payload(
        &self,
        case: &CaseFile,
        action: Action,
        payload: Value,
        now: DateTime<Utc>,
    ) -> Result<Value, ApiError> {
        let mut fields = match payload {
            Value::Null => Map::new(),
            Value::Object(map) => map,
            _ => {
                return Err(
                    EngineError::PayloadInvalid("payload must be a JSON object".into()).into(),
                )
            }
        };
        let state = self.state.read();
        match action {
            Action::AssignCfe => {
                if fields.contains_key("cfe_id") {
                    return Err(EngineError::PayloadInvalid(
                        "CFE ids are assigned by the registry".into(),
                    )
                    .into());
                }
                let year = u16::try_from(now.year())
                    .map_err(|_| ApiError::Internal("year out of range".into()))?;
                fields.insert("cfe_id".into(), json!(state.cfe_ids.peek(year)));
            }
            Action::AssignCve => {
                let cna = state
                    .cards
                    .get(&case.model_ref)
                    .is_some_and(|c| c.card.governance.cve_numbering_authority);
                match (fields.contains_key("cve_ref"), cna) {
                    (true, false) => {
                        return Err(EngineError::PayloadInvalid(
                            "only a CNA vendor supplies its own CVE; leave cve_ref empty".into(),
                        )
                        .into())
                    }
                    (false, _) => {
                        // The stub client stands in for the external CVE partner.
                        let mut client = state.cve.clone();
                        let cve = client.request_cve(&case.case_id, &case.model_ref);
                        fields.insert("cve_ref".into(), json!(cve));
                    }
                    (true, true) => {}
                }
            }
            Action::GrantAppeal => {
                if fields.contains_key("cve_ref") {
                    return Err(EngineError::PayloadInvalid(
                        "the CVE of a granted appeal is assigned by the registry".into(),
                    )
                    .into());
                }
                let mut client = state.cve.clone();
                fields.insert(
                    "cve_ref".into(),
                    json!(client.request_cve(&case.case_id, &case.model_ref)),
                );
            }
            Action::Publish => {
                if !fields.contains_key("advisory_id") {
                    fields.insert(
                        "advisory_id".into(),
                        json!(state.next_advisory_id(now.year())),
                    );
                }
                if let (Some(id), false) = (case.cfe_id, fields.contains_key("cfe_id")) {
                    fields.insert("cfe_id".into(), json!(id));
                }
                if let (Some(cve), false) = (&case.cve_ref, fields.contains_key("cve_ref")) {
                    fields.insert("cve_ref".into(), json!(cve));
                }
                if !fields.contains_key("record_uri") {
                    let uri = match (case.cfe_id, &case.cve_ref) {
                        (Some(id), _) => format!("/cfe/{id}"),
                        (None, Some(cve)) => format!("https://www.cve.org/CVERecord?id={cve}"),
                        (None, None) => format!("/cases/{}", case.case_id),
                    };
                    fields.insert("record_uri".into(), json!(uri));
                }
            }
            Action::Fix if case.track == Track::Safety => {
                let Some(Value::String(statement_id)) = fields.get("hex_statement_id") else {
                    return Err(EngineError::PayloadInvalid(
                        "`hex_statement_id` of a `fixed` statement is required".into(),
                    )
                    .into());
                };
                let statement = state.hex.get(statement_id).ok_or_else(|| {
                    EngineError::PayloadInvalid(format!("no HEX statement `{statement_id}`"))
                })?;
                if Some(statement.cfe_id) != case.cfe_id || statement.status != HexStatus::Fixed {
                    return Err(EngineError::PayloadInvalid(format!(
                        "`{statement_id}` is not a `fixed` statement for this case's CFE"
                    ))
                    .into());
                }
            }
            _ => {}
        }
        Ok(Value::Object(fields))
    }

    pub fn attach_evidence(
        &self,
        id: &str,
        actor: &Actor,
        request: EvidenceRequest,
    ) -> Result<CaseFile, ApiError> {
        let now = self.now();
        let raw =
            match &request.sealed_payload {
                Some(text) => Some(STANDARD.decode(text).map_err(|e| {
                    ApiError::BadRequest(format!("sealed_payload is not base64: {e}"))
                })?),
                None => None,
            };
        let mut log = self.log.lock();
        let case = self.writable(id, actor)?;
        let mut evidence = EvidenceSet::new(actor.actor_id.clone(), request.k, request.n);
        evidence.sampling_protocol = request.sampling_protocol;
        if !evidence.is_valid() {
            return Err(
                EngineError::PayloadInvalid("evidence needs n >= 1 and k <= n".into()).into(),
            );
        }
        // Dry run first so nothing is stored for a refused upload.
        engine::attach_evidence(
            &case,
            actor,
            evidence.clone(),
            request.expected_version,
            now,
        )?;
        if let Some(raw) = raw {
            evidence.sealed_payload_digest = Some(self.blobs.put(&raw)?);
        }
        let next = engine::attach_evidence(&case, actor, evidence, request.expected_version, now)?;
        self.commit_case(&mut log, &next)
    }

    /// Run the panel statistics and log the recommendation on the case.
    pub fn adjudicate(
        &self,
        id: &str,
        actor: &Actor,
    ) -> Result<(AdjudicationReport, CaseFile), ApiError> {
        let now = self.now();
        let mut log = self.log.lock();
        let case = self.writable(id, actor)?;
        if !effective_roles(&case, actor).contains(&Role::Adjudicator) {
            return Err(ApiError::Forbidden(format!(
                "{} is not a neutral adjudicator for {id}",
                actor.actor_id
            )));
        }
        let threshold = self
            .state
            .read()
            .cards
            .get(&case.model_ref)
            .and_then(|c| c.card.tolerated_violation_rate())
            .unwrap_or(self.config.threshold);
        let report =
            stats::adjudicate(&case, threshold, self.config.alpha).map_err(|e| match e {
                stats::StatError::IllegalState(msg) => ApiError::conflict("illegal_state", msg),
                stats::StatError::Domain(msg) => ApiError::invalid("payload_invalid", msg),
            })?;
        let next = engine::record_recommendation(&case, actor, &report, None, now)?;
        let next = self.commit_case(&mut log, &next)?;
        Ok((report, next))
    }

    // -------------------------------------------------------------- records

    pub fn cfe(&self, id: CfeId) -> Result<Value, ApiError> {
        let state = self.state.read();
        let case = state
            .public_cfe(id)
            .ok_or_else(|| ApiError::NotFound(format!("no public record {id}")))?;
        Ok(json!({
            "record": case.cfe_record,
            "advisory": case.advisory,
            "hex_statements": state.hex.for_cfe(id),
        }))
    }

    pub fn evaluate_hex(&self, request: HexEvaluateRequest) -> Result<Vec<HexStatement>, ApiError> {
        let record = self.public_record(request.cfe_id)?;
        let now = self.now();
        match &request.lineage {
            Some(graph) => Ok(hex_for_variants(&record, graph, &request.profiles, now)?),
            None => request
                .profiles
                .iter()
                .map(|profile| evaluate_exposure(&record, profile, now).map_err(ApiError::from))
                .collect(),
        }
    }

    fn public_record(&self, id: CfeId) -> Result<CfeRecord, ApiError> {
        let state = self.state.read();
        state
            .public_cfe(id)
            .and_then(|case| case.cfe_record.clone())
            .ok_or_else(|| ApiError::NotFound(format!("no public record {id}")))
    }

    /// Record a HEX statement issued by the CFE's vendor or the committee.
    pub fn record_hex(&self, actor: &Actor, bytes: &[u8]) -> Result<HexStatement, ApiError> {
        let statement = parse_hex(bytes)?;
        let findings = statement.check();
        if !findings.is_empty() {
            return Err(HexError::Invalid(findings).into());
        }
        let mut log = self.log.lock();
        {
            let state = self.state.read();
            let case = state.public_cfe(statement.cfe_id).ok_or_else(|| {
                ApiError::NotFound(format!("no public record {}", statement.cfe_id))
            })?;
            let roles = effective_roles(case, actor);
            if !roles.contains(&Role::Vendor) && !roles.contains(&Role::Committee) {
                return Err(ApiError::Forbidden(format!(
                    "{} may not issue statements for {}",
                    actor.actor_id, statement.cfe_id
                )));
            }
            state.hex.validate(&statement)?;
        }
        self.commit(
            &mut log,
            None,
            RegistryEvent::HexStatementRecorded {
                recorded_by: actor.actor_id.clone(),
                statement: statement.clone(),
            },
        )?;
        Ok(statement)
    }

    pub fn hex_statements(&self, id: CfeId) -> Result<Vec<HexStatement>, ApiError> {
        self.public_record(id)?;
        Ok(self
            .state
            .read()
            .hex
            .for_cfe(id)
            .into_iter()
            .cloned()
            .collect())
    }

    /// Every public CFE with its advisory and statement index. Depends only
    /// on public content, so it is stable across unrelated writes.
    pub fn export_public_db(&self) -> Value {
        let state = self.state.read();
        let entries: Vec<Value> = state
            .cfe_cases
            .keys()
            .filter_map(|id| state.public_cfe(*id))
            .map(|case| {
                let record = case
                    .cfe_record
                    .as_ref()
                    .expect("public CFEs carry a record");
                let index: Vec<Value> = state
                    .hex
                    .for_cfe(record.cfe_id)
                    .into_iter()
                    .map(|s| {
                        json!({
                            "statement_id": s.statement_id,
                            "deployment_ref": s.deployment_ref,
                            "status": s.status,
                            "justification": s.justification,
                            "issued_at": s.issued_at,
                            "supersedes": s.supersedes,
                        })
                    })
                    .collect();
                json!({
                    "cfe_id": record.cfe_id,
                    "record": record,
                    "advisory": case.advisory,
                    "severity_bracket": record.severity.as_ref().map(|s| s.bracket),
                    "affected_uses": record.affected_uses,
                    "affected_lineage": record.affected_lineage,
                    "hex_statements": index,
                })
            })
            .collect();
        strip_nulls(json!({
            "format": "hazreg-public-db",
            "format_version": "1.0",
            "cfe_count": entries.len(),
            "cfes": entries,
        }))
    }

    /// Newest advisories first. The page token names the last advisory
    /// served, so later publications never shift a continuation.
    pub fn advisories(
        &self,
        page: Option<&str>,
        page_size: Option<usize>,
    ) -> Result<AdvisoryPage, ApiError> {
        let size = page_size.unwrap_or(self.config.page_size).clamp(1, 500);
        let cursor = page.map(decode_page_token).transpose()?;
        let state = self.state.read();
        let mut all: Vec<&Advisory> = state
            .cases
            .values()
            .filter(|case| case.state.is_disclosed())
            .filter_map(|case| case.advisory.as_ref())
            .collect();
        all.sort_by(|a, b| (b.published_at, &b.advisory_id).cmp(&(a.published_at, &a.advisory_id)));
        let start = match &cursor {
            None => 0,
            Some((at, id)) => all
                .iter()
                .position(|a| (a.published_at, &a.advisory_id) < (*at, id))
                .unwrap_or(all.len()),
        };
        let advisories: Vec<Advisory> = all[start..]
            .iter()
            .take(size)
            .map(|a| (*a).clone())
            .collect();
        let next_page = (start + size < all.len())
            .then(|| {
                advisories
                    .last()
                    .map(|a| encode_page_token(a.published_at, &a.advisory_id))
            })
            .flatten();
        Ok(AdvisoryPage {
            advisories,
            next_page,
        })
    }

    /// Raw evidence payload, for storage-level tests and operators only.
    pub fn sealed_blob(&self, digest: &Digest) -> Result<Option<Vec<u8>>, ApiError> {
        Ok(self.blobs.get(digest)?)
    }
}

fn strip_nulls(value: Value) -> Value {
    match value {
        Value::Object(map) => Value::Object(
            map.into_iter()
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| (k, strip_nulls(v)))
                .collect(),
        ),
        Value::Array(items) => Value::Array(items.into_iter().map(strip_nulls).collect()),
        other => other,
    }
}

fn encode_page_token(at: DateTime<Utc>, id: &str) -> String {
    URL_SAFE_NO_PAD.encode(format!(
        "{}|{id}",
        at.to_rfc3339_opts(chrono::SecondsFormat::Nanos, true)
    ))
}

fn decode_page_token(token: &str) -> Result<(DateTime<Utc>, String), ApiError> {
    let bad = || ApiError::BadRequest(format!("bad page token `{token}`"));
    let raw = URL_SAFE_NO_PAD.decode(token).map_err(|_| bad())?;
    let text = String::from_utf8(raw).map_err(|_| bad())?;
    let (at, id) = text.split_once('|').ok_or_else(bad)?;
    let at = DateTime::parse_from_rfc3339(at)
        .map_err(|_| bad())?
        .with_timezone(&Utc);
    Ok((at, id.to_string()))
}

/// Canonical JSON bytes for any response body.
pub fn canonical<T: Serialize>(value: &T) -> Vec<u8> {
    to_canonical_bytes(value).unwrap_or_else(|_| b"{}".to_vec())
}
