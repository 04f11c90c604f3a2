//! HTTP surface. Handlers authenticate, hand the work to a blocking task
//! on the registry, and answer with canonical JSON.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use hazreg_core::domain::ModelRef;
use hazreg_core::engine::transition_table_document;
use hazreg_core::formats::{finding_catalogue, CfeId};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::registry::{canonical, ApiError, Registry};

type Shared = Arc<Registry>;

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Unauthorized(_) => StatusCode::UNAUTHORIZED,
            ApiError::Forbidden(_) => StatusCode::FORBIDDEN,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict { .. } => StatusCode::CONFLICT,
            ApiError::Validation { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

fn respond<T: Serialize>(status: StatusCode, body: &T) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        canonical(body),
    )
        .into_response()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({"code": self.code(), "message": self.to_string()});
        if let ApiError::Validation { findings, .. } = &self {
            error["findings"] = json!(findings);
        }
        if self.status() == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %self, "request failed");
        }
        respond(self.status(), &json!({ "error": error }))
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok<T: Serialize>(body: &T) -> ApiResult {
    Ok(respond(StatusCode::OK, body))
}

fn created<T: Serialize>(body: &T) -> ApiResult {
    Ok(respond(StatusCode::CREATED, body))
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
}

/// Authenticated actor, or `None` when no credentials were presented.
/// Bad credentials are always an error, even on public endpoints.
fn optional_actor(
    reg: &Registry,
    headers: &HeaderMap,
) -> Result<Option<hazreg_core::domain::Actor>, ApiError> {
    match bearer(headers) {
        None => Ok(None),
        Some(h) => reg.authenticate(Some(h)).map(Some),
    }
}

fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::BadRequest(format!("malformed request body: {e}")))
}

/// Run registry work off the async executor; it may fsync.
async fn blocking<F>(reg: Shared, work: F) -> ApiResult
where
    F: FnOnce(&Registry) -> ApiResult + Send + 'static,
{
    tokio::task::spawn_blocking(move || work(&reg))
        .await
        .unwrap_or_else(|e| Err(ApiError::Internal(format!("worker failed: {e}"))))
}

pub fn router(registry: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/meta/transition-table", get(meta_transitions))
        .route("/meta/finding-catalogue", get(meta_findings))
        .route("/model-cards", post(post_card))
        .route("/model-cards/{name}/{version}", get(get_card))
        .route("/reports", post(post_report))
        .route("/cases", get(list_cases))
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/actions", get(get_actions))
        .route("/cases/{id}/transitions", post(post_transition))
        .route("/cases/{id}/evidence", post(post_evidence))
        .route("/cases/{id}/adjudicate", post(post_adjudicate))
        .route("/cfe/{id}", get(get_cfe))
        .route("/hex/evaluate", post(post_hex_evaluate))
        .route(
            "/hex/statements",
            post(post_hex_statement).get(get_hex_statements),
        )
        .route("/export/public-db", get(export_public_db))
        .route("/advisories", get(get_advisories))
        .with_state(registry)
}

async fn health(State(reg): State<Shared>) -> ApiResult {
    ok(&json!({"status": "ok", "global_seq": reg.last_seq()}))
}

async fn meta_transitions() -> ApiResult {
    ok(&transition_table_document())
}

async fn meta_findings() -> ApiResult {
    ok(&finding_catalogue())
}

async fn post_card(
    State(reg): State<Shared>,
    headers: HeaderMap,
    Query(query): Query<BTreeMap<String, String>>,
    body: Bytes,
) -> ApiResult {
    let actor = reg.authenticate(bearer(&headers))?;
    let dry_run = query
        .get("dry_run")
        .is_some_and(|v| v == "true" || v == "1");
    blocking(reg, move |reg| {
        let outcome = reg.register_card(&actor, &body, dry_run)?;
        if outcome.registered {
            created(&outcome)
        } else {
            ok(&outcome)
        }
    })
    .await
}

async fn get_card(
    State(reg): State<Shared>,
    Path((name, version)): Path<(String, String)>,
) -> ApiResult {
    let model_ref = ModelRef { name, version };
    match reg.card(&model_ref) {
        Some(card) => ok(&card),
        None => Err(ApiError::NotFound(format!("no model card {model_ref}"))),
    }
}

async fn post_report(State(reg): State<Shared>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let actor = reg.authenticate(bearer(&headers))?;
    blocking(reg, move |reg| {
        let case = reg.submit_report(&actor, &body)?;
        created(&json!({
            "case_id": case.case_id,
            "track": case.track,
            "state": case.state,
            "version": case.version,
        }))
    })
    .await
}

async fn list_cases(State(reg): State<Shared>, headers: HeaderMap) -> ApiResult {
    let actor = optional_actor(&reg, &headers)?;
    ok(&json!({"cases": reg.list_cases(actor.as_ref())}))
}

async fn get_case(
    State(reg): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult {
    let actor = optional_actor(&reg, &headers)?;
    ok(&reg.case_view(&id, actor.as_ref())?)
}

async fn get_actions(
    State(reg): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult {
    let actor = reg.authenticate(bearer(&headers))?;
    ok(&reg.actions(&id, &actor)?)
}

async fn post_transition(
    State(reg): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult {
    let actor = reg.authenticate(bearer(&headers))?;
    let request = decode(&body)?;
    blocking(reg, move |reg| {
        let case = reg.transition(&id, &actor, request)?;
        ok(&case)
    })
    .await
}

async fn post_evidence(
    State(reg): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult {
    let actor = reg.authenticate(bearer(&headers))?;
    let request = decode(&body)?;
    blocking(reg, move |reg| {
        let case = reg.attach_evidence(&id, &actor, request)?;
        created(&json!({
            "case_id": case.case_id,
            "version": case.version,
            "evidence_count": case.evidence.len(),
        }))
    })
    .await
}

/// The body is ignored but still read, so the connection stays reusable.
async fn post_adjudicate(
    State(reg): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    _body: Bytes,
) -> ApiResult {
    let actor = reg.authenticate(bearer(&headers))?;
    blocking(reg, move |reg| {
        let (report, case) = reg.adjudicate(&id, &actor)?;
        ok(&json!({"case_id": case.case_id, "version": case.version, "report": report}))
    })
    .await
}

fn parse_cfe(id: &str) -> Result<CfeId, ApiError> {
    id.parse()
        .map_err(|e: hazreg_core::formats::IdSyntaxError| ApiError::BadRequest(e.to_string()))
}

async fn get_cfe(State(reg): State<Shared>, Path(id): Path<String>) -> ApiResult {
    ok(&reg.cfe(parse_cfe(&id)?)?)
}

async fn post_hex_evaluate(
    State(reg): State<Shared>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    optional_actor(&reg, &headers)?;
    let request = decode(&body)?;
    ok(&json!({"statements": reg.evaluate_hex(request)?}))
}

async fn post_hex_statement(
    State(reg): State<Shared>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let actor = reg.authenticate(bearer(&headers))?;
    blocking(reg, move |reg| created(&reg.record_hex(&actor, &body)?)).await
}

async fn get_hex_statements(
    State(reg): State<Shared>,
    Query(query): Query<BTreeMap<String, String>>,
) -> ApiResult {
    let id = query
        .get("cfe_id")
        .ok_or_else(|| ApiError::BadRequest("query parameter `cfe_id` is required".into()))?;
    ok(&json!({"statements": reg.hex_statements(parse_cfe(id)?)?}))
}

async fn export_public_db(State(reg): State<Shared>) -> ApiResult {
    ok(&reg.export_public_db())
}

async fn get_advisories(
    State(reg): State<Shared>,
    Query(query): Query<BTreeMap<String, String>>,
) -> ApiResult {
    let page_size = match query.get("page_size") {
        None => None,
        Some(raw) => Some(
            raw.parse()
                .map_err(|_| ApiError::BadRequest(format!("page_size `{raw}` is not a number")))?,
        ),
    };
    let page = query
        .get("page")
        .map(String::as_str)
        .filter(|p| !p.is_empty());
    ok(&reg.advisories(page, page_size)?)
}
