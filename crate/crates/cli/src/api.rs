//! JSON API over one shared knowledge base.
//!
//! Reads take a shared lock; every mutation goes through the single write
//! lock, and with autosave the KB file is rewritten before the lock is
//! released.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;
use tower_http::services::ServeDir;

use lplm_core::kb::{Answer, KnowledgeBase};
use lplm_core::semantics::{analyze, Analysis};
use lplm_core::Grammar;

use crate::session::tidy_prob;

#[derive(Debug, Deserialize)]
pub struct SentenceBody {
    pub sentence: String,
}

#[derive(Debug, Deserialize)]
pub struct QuestionBody {
    pub question: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct StatementResponse {
    pub term: String,
    pub tree: String,
    pub prob: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RemoveResponse {
    pub removed: bool,
    pub term: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Fact {
    pub term: String,
    pub source: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QueryResponse {
    Wh { answers: Vec<Fact> },
    Yesno { answer: String },
}

impl From<Answer> for QueryResponse {
    fn from(a: Answer) -> Self {
        match a {
            Answer::Wh(bindings) => QueryResponse::Wh {
                answers: bindings
                    .into_iter()
                    .map(|b| Fact {
                        term: b.term.to_string(),
                        source: b.source,
                    })
                    .collect(),
            },
            Answer::YesNo(yes) => QueryResponse::Yesno {
                answer: if yes { "yes" } else { "no" }.into(),
            },
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ParseResponse {
    pub tree: String,
    pub prob: f64,
    pub term: String,
    /// `statement` or `question`, from the root of the parse.
    pub kind: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Health {
    pub status: String,
    pub facts: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub error: String,
}

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn unprocessable(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            message: message.into(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::unprocessable(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(ErrorBody {
                error: self.message,
            }),
        )
            .into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

struct Inner {
    grammar: Grammar,
    kb: RwLock<KnowledgeBase>,
    kb_path: Option<PathBuf>,
    autosave: bool,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(
        grammar: Grammar,
        kb: KnowledgeBase,
        kb_path: Option<PathBuf>,
        autosave: bool,
    ) -> Self {
        AppState(Arc::new(Inner {
            grammar,
            kb: RwLock::new(kb),
            kb_path,
            autosave,
        }))
    }

    pub async fn snapshot(&self) -> KnowledgeBase {
        self.0.kb.read().await.clone()
    }

    fn persist(&self, kb: &KnowledgeBase) -> Result<(), ApiError> {
        match (&self.0.kb_path, self.0.autosave) {
            (Some(path), true) => kb.save_to(path).map_err(|e| ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                message: format!("saving {}: {e}", path.display()),
            }),
            _ => Ok(()),
        }
    }

    fn statement(&self, sentence: &str) -> Result<lplm_core::Statement, ApiError> {
        match analyze(&self.0.grammar, sentence)
            .map_err(|e| ApiError::unprocessable(e.to_string()))?
        {
            Analysis::Statement(st) => Ok(st),
            Analysis::Question(_) => Err(ApiError::unprocessable(format!(
                "\"{}\" is a question; use /api/query",
                sentence.trim()
            ))),
        }
    }
}

async fn add_statement(
    State(state): State<AppState>,
    body: Result<Json<SentenceBody>, JsonRejection>,
) -> ApiResult<StatementResponse> {
    let Json(body) = body?;
    let st = state.statement(&body.sentence)?;
    let mut kb = state.0.kb.write().await;
    if kb.insert(st.term.clone(), st.source.clone()) {
        state.persist(&kb)?;
    }
    Ok(Json(StatementResponse {
        term: st.term.to_string(),
        tree: st.tree.to_string(),
        prob: tidy_prob(st.prob),
    }))
}

async fn remove_statement(
    State(state): State<AppState>,
    body: Result<Json<SentenceBody>, JsonRejection>,
) -> ApiResult<RemoveResponse> {
    let Json(body) = body?;
    let st = state.statement(&body.sentence)?;
    let mut kb = state.0.kb.write().await;
    let removed = kb.retract(&st.term);
    if removed {
        state.persist(&kb)?;
    }
    Ok(Json(RemoveResponse {
        removed,
        term: st.term.to_string(),
    }))
}

async fn query(
    State(state): State<AppState>,
    body: Result<Json<QuestionBody>, JsonRejection>,
) -> ApiResult<QueryResponse> {
    let Json(body) = body?;
    let q = match analyze(&state.0.grammar, &body.question)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?
    {
        Analysis::Question(q) => q,
        Analysis::Statement(_) => {
            return Err(ApiError::unprocessable(format!(
                "\"{}\" is a statement; use /api/statements",
                body.question.trim()
            )))
        }
    };
    let kb = state.0.kb.read().await;
    Ok(Json(kb.answer(&q.goal).into()))
}

async fn list_kb(State(state): State<AppState>) -> Json<Vec<Fact>> {
    let kb = state.0.kb.read().await;
    Json(
        kb.facts()
            .iter()
            .map(|f| Fact {
                term: f.term.to_string(),
                source: f.source.clone(),
            })
            .collect(),
    )
}

async fn parse(
    State(state): State<AppState>,
    body: Result<Json<SentenceBody>, JsonRejection>,
) -> ApiResult<ParseResponse> {
    let Json(body) = body?;
    let analysis = analyze(&state.0.grammar, &body.sentence)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let kind = match &analysis {
        Analysis::Statement(_) => "statement",
        Analysis::Question(_) => "question",
    };
    Ok(Json(ParseResponse {
        tree: analysis.tree().to_string(),
        prob: tidy_prob(*analysis.prob()),
        term: analysis.term().to_string(),
        kind: kind.into(),
    }))
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    let facts = state.0.kb.read().await.len();
    Json(Health {
        status: "ok".into(),
        facts,
    })
}

/// Routes under `/api`; other paths are served from `assets` when given.
pub fn router(state: AppState, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route(
            "/api/statements",
            post(add_statement).delete(remove_statement),
        )
        .route("/api/query", post(query))
        .route("/api/kb", get(list_kb))
        .route("/api/parse", post(parse))
        .route("/api/health", get(health))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(
    state: AppState,
    addr: SocketAddr,
    assets: Option<PathBuf>,
) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, assets)).await?;
    Ok(())
}
