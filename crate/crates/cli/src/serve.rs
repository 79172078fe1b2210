//! JSON API for the review UI.
//!
//! | method | path                              | body / result                  |
//! |--------|-----------------------------------|--------------------------------|
//! | GET    | `/api/documents`                  | `[DocumentSummary]`            |
//! | GET    | `/api/documents/{id}/statements`  | `[AnnotationRecord]`           |
//! | PUT    | `/api/statements/{id}/labels`     | `Correction` → record          |
//! | POST   | `/api/metrics/recompute`          | `MetricsReport`                |
//! | GET    | `/api/metrics/scatter`            | `[ScatterPoint]`               |
//! | GET    | `/api/search?q=&legal_act=...`    | `[SearchHit]`                  |
//!
//! Errors are `{"error": message}`; label validation failures answer 422
//! with `labels: [{index, label}]` listing every offending token.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use igkit_core::classifier::StatementType;
use igkit_core::graph::{build_hypergraph, EntityLexicon, HyperedgeUnit};
use igkit_core::metrics::{metrics_report, MetricsConfig, MetricsReport, ScatterPoint};
use igkit_core::store::{
    AnnotationRecord, CorpusStore, Correction, DocumentSummary, SearchFilters, SearchHit,
    StoreError,
};
use igkit_core::tagger::IgLabel;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::RwLock;
use tower_http::services::ServeDir;

pub struct AppState {
    pub store: CorpusStore,
    pub lexicon: EntityLexicon,
    pub metrics: MetricsConfig,
    pub unit: HyperedgeUnit,
    report: RwLock<Option<MetricsReport>>,
}

impl AppState {
    pub fn new(
        store: CorpusStore,
        lexicon: EntityLexicon,
        metrics: MetricsConfig,
        unit: HyperedgeUnit,
    ) -> Self {
        AppState {
            store,
            lexicon,
            metrics,
            unit,
            report: RwLock::new(None),
        }
    }

    /// Metrics over the reviewed view of every stored statement.
    pub fn compute_report(&self) -> Result<MetricsReport, ApiError> {
        let atomics: Vec<_> = self
            .store
            .all_annotations()?
            .into_iter()
            .flat_map(|r| r.atomics)
            .collect();
        let h = build_hypergraph(&atomics, &self.lexicon, self.unit);
        metrics_report(&h, &atomics, &self.lexicon, &self.metrics)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, msg: impl std::fmt::Display) -> Self {
        ApiError {
            status,
            body: json!({ "error": msg.to_string() }),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::NotFound { .. } => ApiError::new(StatusCode::NOT_FOUND, e),
            StoreError::InvalidId(_) => ApiError::new(StatusCode::BAD_REQUEST, e),
            StoreError::Invalid { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e),
            StoreError::InvalidLabels { labels, .. } => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: json!({
                    "error": e.to_string(),
                    "labels": labels
                        .iter()
                        .map(|(i, l)| json!({"index": i, "label": l}))
                        .collect::<Vec<_>>(),
                }),
            },
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Correction body as sent by the UI. Labels arrive as strings so unknown
/// ones can be reported together with disallowed ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectionRequest {
    pub labels: Vec<String>,
    #[serde(default)]
    pub stype: Option<StatementType>,
    #[serde(default)]
    pub note: Option<String>,
}

impl CorrectionRequest {
    /// Every unknown label, and every label outside the vocabulary of the
    /// effective statement type, is reported at once.
    fn parse(self, statement: &str, current: StatementType) -> Result<Correction, ApiError> {
        let stype = self.stype.unwrap_or(current);
        let mut labels = Vec::with_capacity(self.labels.len());
        let mut bad = Vec::new();
        for (i, s) in self.labels.iter().enumerate() {
            match s.parse::<IgLabel>() {
                Ok(l) if l.allowed_in(stype) => labels.push(l),
                _ => bad.push((i + 1, s.clone())),
            }
        }
        if !bad.is_empty() {
            return Err(StoreError::InvalidLabels {
                statement: statement.to_string(),
                labels: bad,
            }
            .into());
        }
        Ok(Correction {
            labels,
            stype: self.stype,
            note: self.note,
        })
    }
}

/// Query string of `/api/search`; the filters mirror `SearchFilters`.
#[derive(Debug, Default, Deserialize)]
pub struct SearchParams {
    #[serde(default)]
    pub q: String,
    pub legal_act: Option<bool>,
    pub keywords: Option<bool>,
    pub date_from: Option<String>,
    pub date_to: Option<String>,
    pub country: Option<String>,
}

impl SearchParams {
    fn filters(&self) -> SearchFilters {
        SearchFilters {
            legal_act: self.legal_act,
            keywords: self.keywords,
            date_from: self.date_from.clone(),
            date_to: self.date_to.clone(),
            country: self.country.clone(),
        }
    }
}

type Shared = Arc<AppState>;

async fn list_documents(State(s): State<Shared>) -> Result<Json<Vec<DocumentSummary>>, ApiError> {
    Ok(Json(s.store.document_summaries()?))
}

async fn statements(
    State(s): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<Vec<AnnotationRecord>>, ApiError> {
    Ok(Json(s.store.annotations(&id)?))
}

async fn put_labels(
    State(s): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<AnnotationRecord>, ApiError> {
    let req: CorrectionRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e))?;
    let state = s.clone();
    let view = tokio::task::spawn_blocking(move || {
        let auto = state.store.get_auto_annotation(&id)?;
        let correction = req.parse(&id, auto.stype)?;
        state
            .store
            .correct(&id, &correction)
            .map_err(ApiError::from)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))??;
    Ok(Json(view))
}

async fn recompute(State(s): State<Shared>) -> Result<Json<MetricsReport>, ApiError> {
    let report = s.compute_report()?;
    *s.report.write().await = Some(report.clone());
    Ok(Json(report))
}

async fn scatter(State(s): State<Shared>) -> Result<Json<Vec<ScatterPoint>>, ApiError> {
    if let Some(r) = s.report.read().await.as_ref() {
        return Ok(Json(r.scatter()));
    }
    let report = s.compute_report()?;
    let points = report.scatter();
    *s.report.write().await = Some(report);
    Ok(Json(points))
}

async fn search(State(s): State<Shared>, Query(p): Query<SearchParams>) -> Json<Vec<SearchHit>> {
    Json(s.store.search(&p.q, &p.filters()))
}

pub fn router(state: Shared, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/documents", get(list_documents))
        .route("/api/documents/{id}/statements", get(statements))
        .route("/api/statements/{id}/labels", put(put_labels))
        .route("/api/metrics/recompute", post(recompute))
        .route("/api/metrics/scatter", get(scatter))
        .route("/api/search", get(search))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Bind `port` on localhost and serve until interrupted.
pub async fn serve(state: Shared, ui_dir: Option<PathBuf>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
