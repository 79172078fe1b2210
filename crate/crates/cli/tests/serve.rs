mod common;

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use common::{data, review_config};
use igkit::run_pipeline;
use igkit::serve::{router, AppState};
use igkit_core::graph::{EntityLexicon, HyperedgeUnit};
use igkit_core::metrics::{MetricsConfig, VisibilityWeights};
use igkit_core::store::CorpusStore;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Server {
    app: Router,
    _dir: tempfile::TempDir,
}

/// Pipeline over the three-statement review corpus, then the API on its store.
fn server(ui: Option<std::path::PathBuf>) -> Server {
    let dir = tempfile::tempdir().unwrap();
    let cfg = review_config(dir.path());
    run_pipeline(&cfg, None).unwrap();
    let state = AppState::new(
        CorpusStore::open(cfg.store_root()).unwrap(),
        EntityLexicon::load(data("lexicon_2003_convention.json")).unwrap(),
        MetricsConfig {
            weights: VisibilityWeights::load(data("weights.json")).unwrap(),
            ..MetricsConfig::default()
        },
        HyperedgeUnit::Atomic,
    );
    Server {
        app: router(Arc::new(state), ui),
        _dir: dir,
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

fn point<'a>(scatter: &'a Value, entity: &str) -> &'a Value {
    scatter
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["entity"] == entity)
        .unwrap()
}

#[tokio::test]
async fn documents_and_statements() {
    let s = server(None);
    let (st, docs) = call(&s.app, Method::GET, "/api/documents", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(docs[0]["id"], "convention");
    assert_eq!(docs[0]["sentences"], 3);

    let (st, stmts) = call(
        &s.app,
        Method::GET,
        "/api/documents/convention/statements",
        None,
    )
    .await;
    assert_eq!(st, StatusCode::OK);
    let stmts = stmts.as_array().unwrap();
    assert_eq!(stmts.len(), 3);
    assert_eq!(stmts[0]["statement_id"], "convention.s1");
    assert_eq!(stmts[0]["review_status"], "auto");
    assert_eq!(stmts[2]["stype"], "constitutive");
    assert_eq!(stmts[0]["statement"]["labels"][7], "I");

    let (st, err) = call(
        &s.app,
        Method::GET,
        "/api/documents/missing/statements",
        None,
    )
    .await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert!(err["error"].as_str().unwrap().contains("missing"));
}

#[tokio::test]
async fn correction_flips_status_and_moves_scatter_point() {
    let s = server(None);
    let (_, before) = call(&s.app, Method::GET, "/api/metrics/scatter", None).await;
    // N = 3 atomic statements. Committee is B-ind (weight 4) in the request
    // sentence and A (weight 6) in the passive one: 10/3.
    let committee = "Intergovernmental Committee";
    assert_eq!(before.as_array().unwrap().len(), 16);
    assert_eq!(point(&before, committee)["visibility"], 10.0 / 3.0);
    assert_eq!(point(&before, "State Party")["visibility"], 2.0);

    let (_, stmts) = call(
        &s.app,
        Method::GET,
        "/api/documents/convention/statements",
        None,
    )
    .await;
    let mut labels: Vec<String> =
        serde_json::from_value(stmts[0]["statement"]["labels"].clone()).unwrap();
    // "to the Committee": indirect to direct object.
    for l in &mut labels[13..16] {
        assert_eq!(l, "B-ind");
        *l = "B-dir".into();
    }
    let (st, view) = call(
        &s.app,
        Method::PUT,
        "/api/statements/convention.s1/labels",
        Some(json!({ "labels": labels, "note": "direct recipient" })),
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{view}");
    assert_eq!(view["review_status"], "expert-corrected");
    assert_eq!(view["reviewer_note"], "direct recipient");

    let (st, report) = call(&s.app, Method::POST, "/api/metrics/recompute", None).await;
    assert_eq!(st, StatusCode::OK);
    let row = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["entity"] == committee)
        .unwrap();
    assert_eq!(row["visibility_exact"], "11/3");

    let (_, after) = call(&s.app, Method::GET, "/api/metrics/scatter", None).await;
    let delta = point(&after, committee)["visibility"].as_f64().unwrap()
        - point(&before, committee)["visibility"].as_f64().unwrap();
    assert!((delta - 1.0 / 3.0).abs() < 1e-12, "{delta}");
    assert_eq!(point(&after, "State Party"), point(&before, "State Party"));

    let (_, stmts) = call(
        &s.app,
        Method::GET,
        "/api/documents/convention/statements",
        None,
    )
    .await;
    assert_eq!(stmts[0]["review_status"], "expert-corrected");
    assert_eq!(stmts[1]["review_status"], "auto");
}

#[tokio::test]
async fn invalid_labels_answer_422_with_offenders() {
    let s = server(None);
    let (_, stmts) = call(
        &s.app,
        Method::GET,
        "/api/documents/convention/statements",
        None,
    )
    .await;
    let mut labels: Vec<String> =
        serde_json::from_value(stmts[0]["statement"]["labels"].clone()).unwrap();
    labels[0] = "E".into();
    labels[4] = "Bogus".into();
    let (st, err) = call(
        &s.app,
        Method::PUT,
        "/api/statements/convention.s1/labels",
        Some(json!({ "labels": labels })),
    )
    .await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(
        err["labels"],
        json!([{"index": 1, "label": "E"}, {"index": 5, "label": "Bogus"}])
    );

    // Nothing was stored.
    let (_, stmts) = call(
        &s.app,
        Method::GET,
        "/api/documents/convention/statements",
        None,
    )
    .await;
    assert_eq!(stmts[0]["review_status"], "auto");

    let (st, _) = call(
        &s.app,
        Method::PUT,
        "/api/statements/convention.s1/labels",
        Some(json!({ "labels": ["A"] })),
    )
    .await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    let (st, _) = call(
        &s.app,
        Method::PUT,
        "/api/statements/convention.s1/labels",
        Some(json!({ "labels": labels, "review_status": "auto" })),
    )
    .await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = call(
        &s.app,
        Method::PUT,
        "/api/statements/nope/labels",
        Some(json!({ "labels": [] })),
    )
    .await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn search_with_filters() {
    let s = server(None);
    let (st, hits) = call(&s.app, Method::GET, "/api/search?q=committee", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(hits[0]["id"], "convention");
    let (_, hits) = call(
        &s.app,
        Method::GET,
        "/api/search?q=committee&legal_act=true",
        None,
    )
    .await;
    assert_eq!(hits, json!([]));
    let (_, hits) = call(&s.app, Method::GET, "/api/search?q=unicorn", None).await;
    assert_eq!(hits, json!([]));
}

#[tokio::test]
async fn static_ui_is_served_beside_the_api() {
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<p>review</p>").unwrap();
    let s = server(Some(ui.path().to_path_buf()));
    let (st, body) = call(&s.app, Method::GET, "/index.html", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(body, "<p>review</p>");
    let (st, _) = call(&s.app, Method::GET, "/api/documents", None).await;
    assert_eq!(st, StatusCode::OK);
}

#[tokio::test]
async fn concurrent_corrections_serialize() {
    let s = server(None);
    let (_, stmts) = call(
        &s.app,
        Method::GET,
        "/api/documents/convention/statements",
        None,
    )
    .await;
    let labels: Vec<String> =
        serde_json::from_value(stmts[1]["statement"]["labels"].clone()).unwrap();
    let mut tasks = Vec::new();
    for k in 0..16 {
        let app = s.app.clone();
        let labels = labels.clone();
        tasks.push(tokio::spawn(async move {
            call(
                &app,
                Method::PUT,
                "/api/statements/convention.s2/labels",
                Some(json!({ "labels": labels, "note": format!("pass {k}") })),
            )
            .await
            .0
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let (_, stmts) = call(
        &s.app,
        Method::GET,
        "/api/documents/convention/statements",
        None,
    )
    .await;
    assert_eq!(stmts[1]["review_status"], "expert-corrected");
    assert_eq!(stmts[1]["statement"]["labels"], json!(labels));
}
