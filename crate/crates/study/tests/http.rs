mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use common::memory_service;
use lesionbench_study::http::router;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn assert_no_truth(body: &str) {
    for word in ["real", "synthetic", "truth", "lesion", "normal", ".pgm"] {
        assert!(!body.to_lowercase().contains(word), "observer response leaks {word:?}: {body}");
    }
}

#[tokio::test]
async fn full_session_over_http() {
    let (svc, _) = memory_service(10);
    let svc = Arc::new(svc);
    let app = router(svc.clone());

    let (status, body) = call(&app, "GET", "/healthz", None).await;
    assert_eq!((status, body.as_str()), (StatusCode::OK, r#"{"status":"ok"}"#));

    let (status, body) =
        call(&app, "POST", "/studies", Some(json!({"observer_id": "obs", "n_per_class": 5, "seed": 3}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_no_truth(&body);
    let sid = serde_json::from_str::<Value>(&body).unwrap()["session_id"].as_str().unwrap().to_string();

    let (status, body) = call(&app, "GET", &format!("/studies/{sid}/report"), None).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_no_truth(&body);

    let truths = svc.snapshot().sessions[&sid].items.clone();
    for (k, item) in truths.iter().enumerate() {
        let (status, body) = call(&app, "GET", &format!("/studies/{sid}/next"), None).await;
        assert_eq!(status, StatusCode::OK);
        assert_no_truth(&body);
        let next: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(next["index"], json!(k));
        assert_eq!(next["total"], json!(10));
        assert_eq!(next["item_id"].as_str().unwrap(), item.item_id);
        assert_eq!(next["image"]["width"], json!(4));
        let level = if item.truth == lesionbench::scoring::Truth::Real { "extremely_real" } else { "extremely_fake" };
        let rating = json!({"item_id": item.item_id, "level": level, "idempotency_key": format!("key-{k}")});
        for _ in 0..2 {
            let (status, body) = call(&app, "POST", &format!("/studies/{sid}/ratings"), Some(rating.clone())).await;
            assert_eq!(status, StatusCode::OK, "{body}");
            assert_no_truth(&body);
            assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["cursor"], json!(k + 1));
        }
        let (_, body) = call(&app, "GET", &format!("/studies/{sid}"), None).await;
        assert_no_truth(&body);
    }

    let (_, body) = call(&app, "GET", &format!("/studies/{sid}/next"), None).await;
    assert_eq!(body, r#"{"complete":true}"#);
    let (status, body) = call(&app, "GET", &format!("/studies/{sid}/report"), None).await;
    assert_eq!(status, StatusCode::OK);
    let report: Value = serde_json::from_str(&body).unwrap();
    assert_eq!((report["accuracy"].as_f64(), report["auc"].as_f64()), (Some(1.0), Some(1.0)));
    assert_eq!((report["n_real"].as_u64(), report["n_fake"].as_u64()), (Some(5), Some(5)));
    assert_eq!(report["level_counts"]["extremely_real"], json!(5));
}

#[tokio::test]
async fn error_statuses() {
    let (svc, _) = memory_service(2);
    let app = router(Arc::new(svc));
    assert_eq!(call(&app, "GET", "/studies/s000009/next", None).await.0, StatusCode::NOT_FOUND);
    let (status, body) =
        call(&app, "POST", "/studies", Some(json!({"observer_id": "o", "n_per_class": 3, "seed": 0}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body.contains("\"error\""));
    call(&app, "POST", "/studies", Some(json!({"observer_id": "o", "n_per_class": 2, "seed": 0}))).await;
    let wrong = json!({"item_id": "s000001-002", "level": "slightly_real", "idempotency_key": "a"});
    assert_eq!(call(&app, "POST", "/studies/s000001/ratings", Some(wrong)).await.0, StatusCode::CONFLICT);
    let bad_level = json!({"item_id": "s000001-001", "level": "maybe", "idempotency_key": "a"});
    assert!(call(&app, "POST", "/studies/s000001/ratings", Some(bad_level)).await.0.is_client_error());
    let ok = json!({"item_id": "s000001-001", "level": "slightly_real", "idempotency_key": "a"});
    assert_eq!(call(&app, "POST", "/studies/s000001/ratings", Some(ok)).await.0, StatusCode::OK);
    let conflict = json!({"item_id": "s000001-001", "level": "slightly_fake", "idempotency_key": "a"});
    assert_eq!(
        call(&app, "POST", "/studies/s000001/ratings", Some(conflict)).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
}

#[tokio::test]
async fn serves_on_a_socket() {
    let (svc, _) = memory_service(2);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(lesionbench_study::http::serve(listener, Arc::new(svc), async {
        let _ = rx.await;
    }));
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    stream.write_all(b"GET /healthz HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").await.unwrap();
    let mut resp = String::new();
    stream.read_to_string(&mut resp).await.unwrap();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.ends_with(r#"{"status":"ok"}"#));
    tx.send(()).unwrap();
    server.await.unwrap().unwrap();
}
