//! The /api/v1 review service, driven in-process. Every response body is
//! checked against the shipped JSON schemas.

mod common;

use std::time::Duration;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::{validate, Fixture, PROJECT_ID};
use greenreq_workbench::server::{router, AppState};
use greenreq_workbench::{Options, Outcome};

const SR1: &str = "mini-home.sr.r1";
const SR2: &str = "mini-home.sr.r2";

struct Api {
    app: Router,
    fixture: Fixture,
}

impl Api {
    /// An undecided project run up to its first review.
    fn at_first_review() -> Self {
        let fixture = Fixture::undecided();
        let p = fixture.project();
        let out = p.run_all(&Options::from_config(&p.config)).unwrap();
        assert_eq!(out, Outcome::AwaitingReview(vec![SR1.into()]));
        Self {
            app: router(AppState::new(vec![fixture.project()])),
            fixture,
        }
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(format!("/api/v1{uri}"));
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes)
                .unwrap_or_else(|_| json!(String::from_utf8_lossy(&bytes)))
        };
        if !status.is_success() && value.is_object() {
            validate("error.schema.json", &value);
        }
        (status, value)
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.call("GET", uri, None).await
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.call("POST", uri, Some(body)).await
    }

    async fn pending(&self) -> Vec<String> {
        let (status, body) = self.get(&format!("/projects/{PROJECT_ID}/reviews")).await;
        assert_eq!(status, StatusCode::OK);
        validate("reviews.schema.json", &body);
        body["reviews"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["review_id"].as_str().unwrap().to_string())
            .collect()
    }

    /// Poll status until no background work is running.
    async fn settle(&self) -> Value {
        for _ in 0..200 {
            let (status, body) = self.get(&format!("/projects/{PROJECT_ID}/status")).await;
            assert_eq!(status, StatusCode::OK);
            validate("project_status.schema.json", &body);
            if body["running"] == false {
                return body;
            }
            tokio::time::sleep(Duration::from_millis(25)).await;
        }
        panic!("background work did not finish");
    }
}

fn tx_round_one() -> Value {
    json!([
        "tx-0a36d7f46c",
        "tx-091bd345ed",
        "tx-410394b59c",
        "tx-0fb4cbdeb3"
    ])
}

#[tokio::test(flavor = "multi_thread")]
async fn pending_after_elicit_is_one_sr_approval() {
    let api = Api::at_first_review();
    let (status, body) = api
        .get(&format!("/projects/{PROJECT_ID}/reviews?state=pending"))
        .await;
    assert_eq!(status, StatusCode::OK);
    validate("reviews.schema.json", &body);
    let reviews = body["reviews"].as_array().unwrap();
    assert_eq!(reviews.len(), 1);
    assert_eq!(reviews[0]["stage"], "SRApproval");
    assert_eq!(reviews[0]["review_id"], SR1);
    let (_, decided) = api
        .get(&format!("/projects/{PROJECT_ID}/reviews?state=decided"))
        .await;
    assert_eq!(decided["reviews"], json!([]));

    let (status, projects) = api.get("/projects").await;
    assert_eq!(status, StatusCode::OK);
    validate("projects.schema.json", &projects);
    assert_eq!(projects["projects"][0]["pending_reviews"], 1);
}

#[tokio::test(flavor = "multi_thread")]
async fn sr_review_payload_has_candidates_and_context() {
    let api = Api::at_first_review();
    let (status, body) = api.get(&format!("/reviews/{SR1}")).await;
    assert_eq!(status, StatusCode::OK);
    validate("review_detail.schema.json", &body);
    let p = &body["payload"];
    assert_eq!(p["kind"], "sr_approval");
    let candidates = p["candidates"].as_array().unwrap();
    assert_eq!(candidates.len(), 4);
    let by_dim: u64 = p["candidate_count_by_dimension"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(by_dim as usize, candidates.len());
    assert_eq!(p["supporting_context"].as_array().unwrap().len(), 3);
    assert_eq!(p["transcripts"].as_array().unwrap().len(), 3);
    assert_eq!(p["synthesis_check"]["consistent"], true);
    assert_eq!(body["decision"], Value::Null);
}

#[tokio::test(flavor = "multi_thread")]
async fn approve_empties_queue_and_writes_sr_set() {
    let api = Api::at_first_review();
    let (status, body) = api
        .post(
            &format!("/reviews/{SR1}/decision"),
            json!({"action": "Approve", "approved_refs": tx_round_one(), "reviewer": "ana"}),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    validate("decision_response.schema.json", &body);
    assert_eq!(body["status"], "applied");
    assert_eq!(body["stage"], "Elicited");
    assert_eq!(body["decision"]["decision_id"], format!("{SR1}.d1"));
    assert!(api.pending().await.is_empty());
    assert!(api.fixture.artifacts().join("sr_set.json").is_file());

    let (status, detail) = api.get(&format!("/reviews/{SR1}")).await;
    assert_eq!(status, StatusCode::OK);
    validate("review_detail.schema.json", &detail);
    assert_eq!(detail["decision"]["action"], "Approve");
}

#[tokio::test(flavor = "multi_thread")]
async fn request_changes_needs_feedback() {
    let api = Api::at_first_review();
    for body in [
        json!({"action": "RequestChanges"}),
        json!({"action": "RequestChanges", "feedback": "   "}),
    ] {
        let (status, err) = api.post(&format!("/reviews/{SR1}/decision"), body).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(err["error"]["code"], "invalid");
    }
    let (status, _) = api
        .post(&format!("/reviews/{SR1}/decision"), json!({}))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = api
        .post(
            &format!("/reviews/{SR1}/decision"),
            json!({"action": "Approve", "colour": "red"}),
        )
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = api
        .post(
            &format!("/reviews/{SR1}/decision"),
            json!({"action": "Reject"}),
        )
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    // nothing was logged
    assert!(!api.fixture.artifacts().join("decisions.jsonl").exists());
    assert_eq!(api.pending().await, [SR1]);
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_subjects_are_404() {
    let api = Api::at_first_review();
    for uri in [
        "/reviews/nope".to_string(),
        "/projects/nope/status".into(),
        "/projects/nope/reviews".into(),
        "/projects/nope/report".into(),
    ] {
        let (status, err) = api.get(&uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(err["error"]["code"], "not_found");
    }
    let (status, _) = api
        .post("/reviews/nope/decision", json!({"action": "Approve"}))
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn decided_review_is_409() {
    let api = Api::at_first_review();
    let approve = json!({"action": "Approve"});
    let (status, _) = api
        .post(&format!("/reviews/{SR1}/decision"), approve.clone())
        .await;
    assert_eq!(status, StatusCode::OK);
    let (status, err) = api.post(&format!("/reviews/{SR1}/decision"), approve).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "conflict");
}

#[tokio::test(flavor = "multi_thread")]
async fn request_changes_regenerates_in_background() {
    let api = Api::at_first_review();
    let (status, body) = api
        .post(
            &format!("/reviews/{SR1}/decision"),
            json!({"action": "RequestChanges", "feedback": "Cover residents who rely on speech input."}),
        )
        .await;
    assert_eq!(status, StatusCode::ACCEPTED);
    validate("decision_response.schema.json", &body);
    assert_eq!(body["status"], "running");
    let status = api.settle().await;
    assert_eq!(status["last_error"], Value::Null);
    assert_eq!(api.pending().await, [SR2]);
    let (_, detail) = api.get(&format!("/reviews/{SR2}")).await;
    validate("review_detail.schema.json", &detail);
    assert_eq!(detail["payload"]["round"], 2);
    assert_eq!(detail["payload"]["candidates"].as_array().unwrap().len(), 5);
}

#[tokio::test(flavor = "multi_thread")]
async fn full_review_flow_to_complete() {
    let api = Api::at_first_review();
    let (s, _) = api
        .post(
            &format!("/reviews/{SR1}/decision"),
            json!({"action": "Approve"}),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    let (s, body) = api
        .post(&format!("/projects/{PROJECT_ID}/run"), json!({}))
        .await;
    assert_eq!(s, StatusCode::ACCEPTED);
    validate("run_response.schema.json", &body);
    api.settle().await;
    let pending = api.pending().await;
    assert_eq!(
        pending,
        ["mini-home.rev.FR2~SR2.r1", "mini-home.rev.NFR1~SR3.r1"]
    );

    let (s, detail) = api.get("/reviews/mini-home.rev.FR2~SR2.r1").await;
    assert_eq!(s, StatusCode::OK);
    validate("review_detail.schema.json", &detail);
    let p = &detail["payload"];
    assert_eq!(p["kind"], "revision_review");
    assert_eq!(p["proposal"]["candidates"].as_array().unwrap().len(), 3);
    assert_eq!(p["revalidation"]["verdict"]["relation"], "Neutral");
    assert!(p["similarity"].as_f64().unwrap() > 0.0);

    // approved_refs only applies to SR approval
    let (s, _) = api
        .post(
            "/reviews/mini-home.rev.FR2~SR2.r1/decision",
            json!({"action": "Approve", "approved_refs": ["x"]}),
        )
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    let (s, body) = api
        .post(
            "/reviews/mini-home.rev.NFR1~SR3.r1/decision",
            json!({"action": "Reject"}),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["outcome"]["result"], "awaiting_review");
    let (s, body) = api
        .post(
            "/reviews/mini-home.rev.FR2~SR2.r1/decision",
            json!({"action": "Approve"}),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["stage"], "Optimized");
    let (s, _) = api
        .post(&format!("/projects/{PROJECT_ID}/run"), json!({}))
        .await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let status = api.settle().await;
    assert_eq!(status["stage"], "Complete");

    let (s, report) = api.get(&format!("/projects/{PROJECT_ID}/report")).await;
    assert_eq!(s, StatusCode::OK);
    validate("report.schema.json", &report);
    let v = &report["verdicts"];
    assert_eq!(
        v["positive"].as_u64().unwrap()
            + v["negative"].as_u64().unwrap()
            + v["neutral"].as_u64().unwrap(),
        v["classified"].as_u64().unwrap()
    );
    assert_eq!(report["completeness"]["satisfied"], json!(["SR1"]));
}

#[tokio::test(flavor = "multi_thread")]
async fn busy_project_queues_decisions() {
    let api = Api::at_first_review();
    let p = api.fixture.project();
    let lock = p.store.try_lock().unwrap();
    let (s, body) = api
        .post(
            &format!("/reviews/{SR1}/decision"),
            json!({"action": "Approve"}),
        )
        .await;
    assert_eq!(s, StatusCode::ACCEPTED);
    validate("decision_response.schema.json", &body);
    assert_eq!(body["status"], "queued");
    let (s, err) = api
        .post(&format!("/projects/{PROJECT_ID}/run"), json!({}))
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "busy");
    // the queued decision is still the only one allowed for the review
    let (s, _) = api
        .post(
            &format!("/reviews/{SR1}/decision"),
            json!({"action": "Approve"}),
        )
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    drop(lock);
    let (s, _) = api
        .post(&format!("/projects/{PROJECT_ID}/run"), json!({}))
        .await;
    assert_eq!(s, StatusCode::ACCEPTED);
    api.settle().await;
    assert_eq!(api.pending().await.len(), 2);
    assert!(api.fixture.artifacts().join("sr_set.json").is_file());
}

#[tokio::test(flavor = "multi_thread")]
async fn status_reports_stage_and_manifest() {
    let api = Api::at_first_review();
    let body = api.settle().await;
    assert_eq!(body["project_id"], PROJECT_ID);
    assert_eq!(body["stage"], "Init");
    assert_eq!(body["pending_reviews"][0]["review_id"], SR1);
    assert!(body["artifacts"]["candidates.r1.json"].is_string());
    let (s, report) = api.get(&format!("/projects/{PROJECT_ID}/report")).await;
    assert_eq!(s, StatusCode::OK);
    validate("report.schema.json", &report);
    assert_eq!(report["verdicts"], Value::Null);
}
