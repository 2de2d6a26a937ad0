#![allow(dead_code)]

use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use jsonschema::JSONSchema;
use serde::Deserialize;
use serde_json::Value;
use tower::ServiceExt;

use lplm::api::{router, AppState};
use lplm::session::load_grammar_spec;
use lplm_core::KnowledgeBase;

pub fn schema_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schema")
}

#[derive(Debug, Deserialize)]
pub struct GoldenQuestion {
    pub question: String,
    pub kind: String,
    #[serde(default)]
    pub answers: Vec<String>,
    #[serde(default)]
    pub sources: Vec<String>,
    pub answer: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct GoldenCase {
    pub name: String,
    pub grammar: String,
    pub facts: Vec<String>,
    pub terms: Vec<String>,
    pub questions: Vec<GoldenQuestion>,
}

pub fn golden_cases() -> Vec<GoldenCase> {
    let text = std::fs::read_to_string(schema_dir().join("golden_qa.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Validator for one named definition of the shared API schema.
pub fn validator(definition: &str) -> JSONSchema {
    let text = std::fs::read_to_string(schema_dir().join("api.schema.json")).unwrap();
    let mut schema: Value = serde_json::from_str(&text).unwrap();
    assert!(
        schema["definitions"].get(definition).is_some(),
        "no definition {definition}"
    );
    schema["$ref"] = Value::String(format!("#/definitions/{definition}"));
    JSONSchema::compile(&schema).unwrap()
}

pub fn assert_schema(definition: &str, value: &Value) {
    let v = validator(definition);
    let why: Vec<String> = match v.validate(value) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| e.to_string()).collect(),
    };
    panic!("{value} is not a valid {definition}: {}", why.join("; "));
}

pub fn app(grammar: &str) -> (AppState, Router) {
    app_with(grammar, KnowledgeBase::new(), None, false)
}

pub fn app_with(
    grammar: &str,
    kb: KnowledgeBase,
    kb_path: Option<PathBuf>,
    autosave: bool,
) -> (AppState, Router) {
    let state = AppState::new(load_grammar_spec(grammar).unwrap(), kb, kb_path, autosave);
    let r = router(state.clone(), None);
    (state, r)
}

pub async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}
